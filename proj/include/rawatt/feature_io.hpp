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

#include <filesystem>

#include "rawatt/types.hpp"

namespace rawatt {

/// "WFB1", u32 rows, u32 cols, rows*cols little-endian float32, row-major.
void write_wfb1(const std::filesystem::path& path, const Matrix& m);
Matrix read_wfb1(const std::filesystem::path& path);

/// One line per row (band), comma separated.
void write_feature_csv(const std::filesystem::path& path, const Matrix& m);

/// 8-bit P5 image, min-max scaled over the whole matrix; band 0 on the
/// bottom row. A constant matrix maps to all zeros.
void write_pgm(const std::filesystem::path& path, const Matrix& m);

}  // namespace rawatt
