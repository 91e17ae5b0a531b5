#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sparsebeam/signal_model.hpp"
#include "sparsebeam/types.hpp"

namespace sparsebeam {

// Scenario plus the sampling parameters that travel with it in a scenario
// file: how many snapshots to draw and from which seed.
struct ScenarioInput {
  ScenarioXd scenario;
  Index snapshots = 100;
  std::uint64_t seed = 1;
};

// Ordered key-value pairs from a flat `key = value` text file. `#` starts a
// comment, blank lines are skipped, duplicate keys are rejected.
std::vector<std::pair<std::string, std::string>> read_key_value_file(
    const std::filesystem::path& path);

// Same grammar, from an already-loaded string (used for tests).
std::vector<std::pair<std::string, std::string>> parse_key_values(
    const std::string& text, const std::string& origin);

// Builds a scenario from parsed keys: m, soi_doa_deg, snr_db, snapshots,
// seed, and optionally interferer_doas_deg with inr_db (single value or one
// per interferer). Powers are linear with unit noise: 10^(dB/10).
ScenarioInput scenario_from_keys(
    const std::map<std::string, std::string>& keys);

ScenarioInput load_scenario_file(const std::filesystem::path& path);

// Serializes the scenario back to keys (prefixed), with doubles rendered to
// round-trip exactly. Used by manifests.
std::vector<std::pair<std::string, std::string>> scenario_to_keys(
    const ScenarioInput& input, const std::string& prefix);

// Exact round-trip rendering of a double ("%.17g"; "nan"/"inf" spelled out).
std::string format_exact(double value);

// Display rendering ("%.12g").
std::string format_value(double value);

// RFC-4180 field quoting: fields containing commas, quotes, or newlines are
// wrapped in double quotes with embedded quotes doubled.
std::string csv_escape(const std::string& field);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

void write_manifest(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace sparsebeam
