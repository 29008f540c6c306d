// Copyright 2026 The TwoShot Authors.
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

// Artifact formats: JSON-lines path records, encoding matrices as CSV and
// persisted supernet states.

#ifndef TWOSHOT_IO_H_
#define TWOSHOT_IO_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twoshot/metrics.h"
#include "twoshot/search_space.h"
#include "twoshot/surrogate.h"

namespace twoshot {

// One line of a path file:
//   {"id", "tokens", "stage", "fitness_source", "fitness"}
// plus "generation" and "true_loss" when known.
struct PathRecord {
  std::string id;
  Encoding encoding;
  std::string stage;
  std::string fitness_source;
  std::optional<double> fitness;
  std::optional<std::uint64_t> generation;
  std::optional<double> true_loss;
};

void write_path_records(std::ostream& os, std::span<const PathRecord> records);
// Throws ValidationError naming the offending line.
std::vector<PathRecord> read_path_records(std::istream& is);

void save_path_records(const std::filesystem::path& file,
                       std::span<const PathRecord> records);
std::vector<PathRecord> load_path_records(const std::filesystem::path& file);

// Records for a plain list of encodings, ids "<stage>-<index>".
std::vector<PathRecord> make_records(std::span<const Encoding> encodings,
                                     const std::string& stage);
std::vector<Encoding> encodings_of(std::span<const PathRecord> records);
// Throws ValidationError if any record has no fitness.
std::vector<double> fitness_of(std::span<const PathRecord> records);

// Header of position labels, then one row of tokens per encoding.
void export_encodings(std::ostream& os, const PathSet& set,
                      const SearchSpaceSchema& schema);
// Validates the header and every row against the schema.
PathSet import_encodings(std::istream& is, const SearchSpaceSchema& schema);

std::string supernet_to_json(const SupernetState& state);
SupernetState supernet_from_json(const std::string& text,
                                 const SearchSpaceSchema& schema);

// Whole-file helpers. Writes go through a temporary file and a rename.
std::string read_text(const std::filesystem::path& file);
void write_text(const std::filesystem::path& file, const std::string& text);
// 64-bit content digest (hex) of a file or a string.
std::string file_digest(const std::filesystem::path& file);
std::string text_digest(const std::string& text);

}  // namespace twoshot

#endif  // TWOSHOT_IO_H_
