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

#include "twoshot/io.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace twoshot {

namespace {

using nlohmann::json;

Encoding tokens_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("tokens must be an array");
  Encoding e;
  e.tokens.reserve(j.size());
  for (const json& t : j) {
    if (!t.is_number_integer()) throw ValidationError("tokens must be integers");
    const auto v = t.get<long long>();
    if (v < 0 || v > 255) throw ValidationError("token out of range");
    e.tokens.push_back(static_cast<Token>(v));
  }
  return e;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_path_records(std::ostream& os, std::span<const PathRecord> records) {
  for (const PathRecord& r : records) {
    json j;
    j["id"] = r.id;
    j["tokens"] = r.encoding.tokens;
    j["stage"] = r.stage;
    j["fitness_source"] = r.fitness_source;
    j["fitness"] = r.fitness ? json(*r.fitness) : json(nullptr);
    if (r.generation) j["generation"] = *r.generation;
    if (r.true_loss) j["true_loss"] = *r.true_loss;
    os << j.dump() << '\n';
  }
}

std::vector<PathRecord> read_path_records(std::istream& is) {
  std::vector<PathRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw ValidationError("expected an object");
      PathRecord r;
      if (!j.contains("tokens")) throw ValidationError("missing tokens");
      r.encoding = tokens_from_json(j.at("tokens"));
      r.id = j.value("id", std::to_string(out.size()));
      r.stage = j.value("stage", "");
      r.fitness_source = j.value("fitness_source", "");
      if (j.contains("fitness") && !j.at("fitness").is_null()) {
        r.fitness = j.at("fitness").get<double>();
      }
      if (j.contains("generation")) {
        r.generation = j.at("generation").get<std::uint64_t>();
      }
      if (j.contains("true_loss") && !j.at("true_loss").is_null()) {
        r.true_loss = j.at("true_loss").get<double>();
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " +
                            e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " +
                            e.what());
    }
  }
  return out;
}

void save_path_records(const std::filesystem::path& file,
                       std::span<const PathRecord> records) {
  std::ostringstream os;
  write_path_records(os, records);
  write_text(file, os.str());
}

std::vector<PathRecord> load_path_records(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open " + file.string());
  try {
    return read_path_records(in);
  } catch (const ValidationError& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
}

std::vector<PathRecord> make_records(std::span<const Encoding> encodings,
                                     const std::string& stage) {
  std::vector<PathRecord> out;
  out.reserve(encodings.size());
  for (std::size_t i = 0; i < encodings.size(); ++i) {
    PathRecord r;
    r.id = stage + "-" + std::to_string(i);
    r.encoding = encodings[i];
    r.stage = stage;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Encoding> encodings_of(std::span<const PathRecord> records) {
  std::vector<Encoding> out;
  out.reserve(records.size());
  for (const PathRecord& r : records) out.push_back(r.encoding);
  return out;
}

std::vector<double> fitness_of(std::span<const PathRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const PathRecord& r : records) {
    if (!r.fitness) throw ValidationError("record " + r.id + " has no fitness");
    out.push_back(*r.fitness);
  }
  return out;
}

void export_encodings(std::ostream& os, const PathSet& set,
                      const SearchSpaceSchema& schema) {
  const auto& labels = schema.position_labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << (i ? "," : "") << labels[i];
  }
  os << '\n';
  for (const Encoding& e : set.members()) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      os << (i ? "," : "") << static_cast<int>(e[i]);
    }
    os << '\n';
  }
}

PathSet import_encodings(std::istream& is, const SearchSpaceSchema& schema) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != schema.position_labels()) {
    throw ValidationError("CSV header does not match the schema");
  }
  std::vector<Encoding> members;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Encoding e;
    for (const std::string& cell : split_csv_line(line)) {
      std::size_t used = 0;
      int v = -1;
      try {
        v = std::stoi(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || v < 0 || v > 255) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": bad token '" + cell + "'");
      }
      e.tokens.push_back(static_cast<Token>(v));
    }
    try {
      validate_encoding(e, schema);
    } catch (const ValidationError& err) {
      throw ValidationError("line " + std::to_string(line_no) + ": " +
                            err.what());
    }
    members.push_back(std::move(e));
  }
  return PathSet(std::move(members));
}

std::string supernet_to_json(const SupernetState& state) {
  const SupernetConfig& c = state.config();
  json j;
  j["train_steps"] = state.train_step_count();
  j["config"] = {{"coadaptation_strength", c.coadaptation_strength},
                 {"maturity_gain", c.maturity_gain},
                 {"fine_tune_gain", c.fine_tune_gain},
                 {"proxy_noise", c.proxy_noise},
                 {"warmup_fraction", c.warmup_fraction}};
  j["maturity"] = state.maturity_table();
  return j.dump() + "\n";
}

SupernetState supernet_from_json(const std::string& text,
                                 const SearchSpaceSchema& schema) {
  try {
    const json j = json::parse(text);
    SupernetConfig c;
    const json& jc = j.at("config");
    c.coadaptation_strength = jc.at("coadaptation_strength").get<double>();
    c.maturity_gain = jc.at("maturity_gain").get<double>();
    c.fine_tune_gain = jc.at("fine_tune_gain").get<double>();
    c.proxy_noise = jc.at("proxy_noise").get<double>();
    c.warmup_fraction = jc.at("warmup_fraction").get<double>();
    return SupernetState::restore(
        schema, c, j.at("maturity").get<std::vector<std::vector<double>>>(),
        j.at("train_steps").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("supernet state: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) {
    std::filesystem::create_directories(file.parent_path());
  }
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + file.string());
    out << text;
    if (!out) throw ValidationError("write failed for " + file.string());
  }
  std::filesystem::rename(tmp, file);
}

std::string file_digest(const std::filesystem::path& file) {
  return text_digest(read_text(file));
}

std::string text_digest(const std::string& text) {
  return hex64(fnv1a64(text));
}

}  // namespace twoshot
