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

#include "rawatt/feature_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <vector>

#include "rawatt/error.hpp"

namespace rawatt {

static_assert(std::endian::native == std::endian::little,
              "feature I/O assumes a little-endian host");

void write_wfb1(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const auto cols = static_cast<std::uint32_t>(m.cols());
  out.write("WFB1", 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  std::vector<float> values(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) values[i] = static_cast<float>(m.data()[i]);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

Matrix read_wfb1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4] = {};
  std::uint32_t rows = 0, cols = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, "WFB1", 4) != 0) {
    throw FormatError(path.string() + ": magic is not WFB1");
  }
  if (!in.read(reinterpret_cast<char*>(&rows), 4) || !in.read(reinterpret_cast<char*>(&cols), 4)) {
    throw FormatError(path.string() + ": truncated header");
  }
  std::vector<float> values(static_cast<std::size_t>(rows) * cols);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(float)))) {
    throw FormatError(path.string() + ": truncated payload");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = values[i];
  return m;
}

void write_feature_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
}

void write_pgm(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  const double lo = m.size() ? m.minCoeff() : 0.0;
  const double hi = m.size() ? m.maxCoeff() : 0.0;
  const double range = hi - lo;
  for (Eigen::Index r = m.rows(); r-- > 0;) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = range > 0.0 ? (m(r, c) - lo) / range : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

}  // namespace rawatt
