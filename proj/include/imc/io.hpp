// Copyright 2026 The imc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// File formats.
//
// Matrix text format: the first line is "rows cols", followed by `rows` lines
// of `cols` space-separated values in C scientific notation with 16 digits
// after the point (17 significant digits, e.g. "-1.2500000000000000e-01").
// Reading accepts any decimal numeral and round-trips doubles exactly.
//
// Observation text format: "d1 d2 count", then `count` lines "i j value"
// with zero-based indices, same numeral style.
//
// Result tables are CSV with a fixed header; numbers use the shortest
// "%.17g" form. Every file is written to "<path>.tmp" and renamed into place,
// so a failed run never leaves a partial file behind.

#ifndef IMC_IO_HPP_
#define IMC_IO_HPP_

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "imc/errors.hpp"
#include "imc/matrix.hpp"
#include "imc/problem.hpp"
#include "json.hpp"

namespace imc {

inline std::string format_scientific(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::scientific, 16);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const int len = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data(), static_cast<std::size_t>(len));
}

inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

[[noreturn]] inline void parse_fail(const std::string& what, std::size_t line,
                                    const std::string& detail) {
  throw IoError(what + ": line " + std::to_string(line) + ": " + detail);
}

inline double parse_double(std::string_view tok, const std::string& what,
                           std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto res = std::from_chars(first, tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    parse_fail(what, line, "not a number: '" + std::string(tok) + "'");
  }
  if (!std::isfinite(v)) parse_fail(what, line, "non-finite value");
  return v;
}

inline long long parse_int(std::string_view tok, const std::string& what,
                           std::size_t line) {
  long long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    parse_fail(what, line, "not an integer: '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace detail

inline std::string format_matrix(const DenseMatrix& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ' ';
      out += format_scientific(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline DenseMatrix parse_matrix(std::string_view text,
                                const std::string& what = "matrix") {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) detail::parse_fail(what, 1, "missing header");
  const auto header = detail::split_tokens(lines[0]);
  if (header.size() != 2) detail::parse_fail(what, 1, "header must be 'rows cols'");
  const long long rows = detail::parse_int(header[0], what, 1);
  const long long cols = detail::parse_int(header[1], what, 1);
  if (rows < 1 || cols < 1) detail::parse_fail(what, 1, "dimensions must be positive");

  DenseMatrix m(rows, cols);
  long long row = 0;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto toks = detail::split_tokens(lines[ln]);
    if (toks.empty()) continue;
    if (row >= rows) {
      detail::parse_fail(what, ln + 1, "more rows than the header declares");
    }
    if (static_cast<long long>(toks.size()) != cols) {
      detail::parse_fail(what, ln + 1,
                         "expected " + std::to_string(cols) + " values, found " +
                             std::to_string(toks.size()));
    }
    for (long long j = 0; j < cols; ++j) {
      m(row, j) = detail::parse_double(toks[static_cast<std::size_t>(j)], what, ln + 1);
    }
    ++row;
  }
  if (row != rows) {
    detail::parse_fail(what, lines.size() + 1,
                       "expected " + std::to_string(rows) + " rows, found " +
                           std::to_string(row));
  }
  return m;
}

inline void write_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
  write_file_atomic(path, format_matrix(m));
}

inline DenseMatrix read_matrix(const std::filesystem::path& path) {
  return parse_matrix(read_file(path), path.string());
}

inline std::string format_observations(const ObservationSet& omega) {
  std::string out = std::to_string(omega.rows) + " " + std::to_string(omega.cols) +
                    " " + std::to_string(omega.size()) + "\n";
  for (std::size_t k = 0; k < omega.size(); ++k) {
    out += std::to_string(omega.indices[k].row) + " " +
           std::to_string(omega.indices[k].col) + " " +
           format_scientific(omega.values[k]) + "\n";
  }
  return out;
}

inline ObservationSet parse_observations(std::string_view text,
                                         const std::string& what = "observations") {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) detail::parse_fail(what, 1, "missing header");
  const auto header = detail::split_tokens(lines[0]);
  if (header.size() != 3) detail::parse_fail(what, 1, "header must be 'd1 d2 count'");
  ObservationSet omega;
  omega.rows = static_cast<int>(detail::parse_int(header[0], what, 1));
  omega.cols = static_cast<int>(detail::parse_int(header[1], what, 1));
  const long long count = detail::parse_int(header[2], what, 1);
  if (omega.rows < 1 || omega.cols < 1 || count < 1) {
    detail::parse_fail(what, 1, "dimensions and count must be positive");
  }
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto toks = detail::split_tokens(lines[ln]);
    if (toks.empty()) continue;
    if (toks.size() != 3) detail::parse_fail(what, ln + 1, "expected 'i j value'");
    const Entry e{static_cast<int>(detail::parse_int(toks[0], what, ln + 1)),
                  static_cast<int>(detail::parse_int(toks[1], what, ln + 1))};
    if (e.row < 0 || e.row >= omega.rows || e.col < 0 || e.col >= omega.cols) {
      detail::parse_fail(what, ln + 1, "index out of bounds");
    }
    if (!omega.indices.empty() && !(omega.indices.back() < e)) {
      detail::parse_fail(what, ln + 1, "indices must be unique and row-major sorted");
    }
    omega.indices.push_back(e);
    omega.values.push_back(detail::parse_double(toks[2], what, ln + 1));
  }
  if (static_cast<long long>(omega.size()) != count) {
    detail::parse_fail(what, lines.size() + 1, "expected " + std::to_string(count) +
                                                   " entries, found " +
                                                   std::to_string(omega.size()));
  }
  omega.p = static_cast<double>(omega.size()) /
            (static_cast<double>(omega.rows) * omega.cols);
  return omega;
}

// A results table: fixed header, rows of already-formatted cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string format_csv(const Table& table) {
  std::string out;
  auto append_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw InvalidArgument("table row width does not match the header");
    }
    append_row(row);
  }
  return out;
}

inline void write_results(const Table& table, const std::filesystem::path& path) {
  write_file_atomic(path, format_csv(table));
}

inline Table parse_csv(std::string_view text) {
  Table t;
  bool first = true;
  for (std::string_view line : detail::split_lines(text)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma == std::string_view::npos
                                                ? std::string_view::npos
                                                : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

// FNV-1a, 64-bit, printed as 16 hex digits.
inline std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf.data(), 16);
}

// Everything needed to re-run a command: the subcommand, the fully resolved
// configuration, the version that produced it and digests of any input files.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config;
  std::uint64_t seed = 0;
  std::string version;
  std::map<std::string, std::string> inputs;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = version;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs"] = inputs;
    return j;
  }

  static RunManifest from_json(const nlohmann::ordered_json& j) {
    RunManifest m;
    try {
      m.command = j.at("command").get<std::string>();
      m.version = j.at("version").get<std::string>();
      m.seed = j.at("seed").get<std::uint64_t>();
      m.config = j.at("config");
      m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    } catch (const nlohmann::json::exception& e) {
      throw IoError(std::string("malformed manifest: ") + e.what());
    }
    return m;
  }
};

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  write_file_atomic(path, m.to_json().dump(2) + "\n");
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

}  // namespace imc

#endif  // IMC_IO_HPP_
