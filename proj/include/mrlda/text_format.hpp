// Copyright 2026 The mrlda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small helpers shared by the TSV readers and writers.

#ifndef MRLDA_TEXT_FORMAT_HPP
#define MRLDA_TEXT_FORMAT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mrlda::text {

/// Splits on `sep`. With max_fields > 0 the last field keeps the remainder.
std::vector<std::string_view> split(std::string_view s, char sep, std::size_t max_fields = 0);

std::int32_t parse_int32(std::string_view s, const char* what, std::size_t line_no);
std::int64_t parse_int64(std::string_view s, const char* what, std::size_t line_no);
double parse_double(std::string_view s, const char* what, std::size_t line_no);

/// 17 significant digits: parses back to the identical double.
std::string format_double(double value);

/// Writes `contents` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file_text(const std::filesystem::path& path);

}  // namespace mrlda::text

#endif  // MRLDA_TEXT_FORMAT_HPP
