// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flowcond/sample_batch.hpp"

namespace flowcond::io {

/// %.17g rendering; round-trips float64 exactly through read_samples_csv.
std::string format_double(double v);

/// Writes content to a temp file and renames it into place, so failures
/// never leave partial outputs behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Comma-separated, header row, LF line endings.
void write_samples_csv(const std::filesystem::path& path, const SampleBatch& batch);
SampleBatch read_samples_csv(const std::filesystem::path& path);

/// Generic numeric table with a named header.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

}  // namespace flowcond::io
