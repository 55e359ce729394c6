/*
 * Copyright 2026 The ensemble-lens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Minimal RFC-4180 reader/writer used by the bundle format.

#ifndef ENSEMBLE_LENS_CSV_H_
#define ENSEMBLE_LENS_CSV_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ensemble_lens::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Parses CSV text. The first record is the header. Quoted fields may contain
// separators, doubled quotes and line breaks. A trailing newline is optional.
// Throws Error(kSchemaMismatch) on an unterminated quote or a record whose
// field count differs from the header.
Table Parse(std::string_view text);

// Throws Error(kIo) when the file cannot be read.
Table ReadFile(const std::filesystem::path& path);

std::string Write(const Table& table);

// Shortest decimal text that parses back to the same double.
std::string FormatNumber(double value);

// Accepts surrounding blanks. Returns nullopt for anything that is not a
// complete decimal or scientific literal.
std::optional<double> ParseNumber(std::string_view text);

}  // namespace ensemble_lens::csv

#endif  // ENSEMBLE_LENS_CSV_H_
