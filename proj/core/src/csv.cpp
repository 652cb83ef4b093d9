// SPDX-License-Identifier: Apache-2.0
#include "flowcond/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flowcond::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_samples_csv(const std::filesystem::path& path, const SampleBatch& batch) {
  std::string out;
  out.reserve(batch.rows * batch.cols * 20 + 16);
  for (std::size_t c = 0; c < batch.cols; ++c) {
    if (c) out += ',';
    out += "x" + std::to_string(c);
  }
  out += '\n';
  for (std::size_t r = 0; r < batch.rows; ++r) {
    for (std::size_t c = 0; c < batch.cols; ++c) {
      if (c) out += ',';
      out += format_double(batch.at(r, c));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

SampleBatch read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty csv");

  std::size_t cols = 1;
  for (char ch : line) cols += (ch == ',');

  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t col = 0;
    const char* p = line.c_str();
    while (col < cols) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) {
        throw std::runtime_error(path.string() + ": malformed number in row " +
                                 std::to_string(rows + 1));
      }
      data.push_back(v);
      ++col;
      p = end;
      if (*p == ',') ++p;
    }
    ++rows;
  }
  if (rows == 0) throw std::runtime_error(path.string() + ": no data rows");

  SampleBatch batch(rows, cols, path.filename().string());
  batch.data = std::move(data);
  return batch;
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("write_table_csv: row width differs from header");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace flowcond::io
