/* Copyright 2026 The rawatt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rawatt {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int f = 3;
  int t = 5;
  int k = 9;
  int s = 32;
  int h = 4;
  int t_keep = 3;
  int classes = 3;
  std::vector<int> head_widths{6};
  double c = 0.01;
  double step = 1e-6;       // central-difference step
  double threshold = 1e-4;  // a block fails above this relative error
  /// Test hook: perturb the analytic gradient of this block before comparing.
  std::string corrupt_block;
};

struct GradcheckBlock {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradcheckReport {
  std::vector<GradcheckBlock> blocks;
  bool pass() const;
};

/// Relative error between analytic and numeric derivatives,
/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-4);

/// Central differences of `fn` around `x` with the given step.
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& fn,
                                     std::vector<double> x, double step);

/// Blocks: kernel, filterbank, attention, head, pipeline. Each compares the
/// analytic gradient of a random small instance against central differences.
GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

void print_report(std::ostream& os, const GradcheckReport& report);

}  // namespace rawatt
