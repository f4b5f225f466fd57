// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainflux {

// Shortest decimal form that parses back to the same double, so CSV
// outputs are byte-reproducible and lossless.
inline std::string csv_cell(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string csv_cell(std::int64_t v) { return std::to_string(v); }

/* Writes header + rows to a sibling temporary file and renames it into
 * place, so readers never observe a half-written table.
 */
inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  if (header.empty())
    throw std::runtime_error("write_csv(): header must not be empty");
  const std::filesystem::path tmp =
      path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out)
      throw std::runtime_error("write_csv(): cannot open '" + tmp.string() +
                               "'");
    auto emit = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
      }
      out << '\n';
    };
    emit(header);
    for (const auto& row : rows) {
      if (row.size() != header.size())
        throw std::runtime_error(
            "write_csv(): row width does not match the header");
      emit(row);
    }
    if (!out)
      throw std::runtime_error("write_csv(): write to '" + tmp.string() +
                               "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace chainflux
