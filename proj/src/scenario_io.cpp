#include "sparsebeam/scenario_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "sparsebeam/errors.hpp"

namespace sparsebeam {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ValidationError(origin + ": " + what);
}

double parse_double(const std::string& origin, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    fail(origin, "key '" + key + "' has non-numeric value '" + value + "'");
  }
}

long long parse_int(const std::string& origin, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(origin, "key '" + key + "' has non-integer value '" + value + "'");
  }
}

std::uint64_t parse_seed(const std::string& origin, const std::string& key,
                         const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(origin, "key '" + key + "' has non-integer value '" + value + "'");
  }
}

std::vector<double> parse_double_list(const std::string& origin,
                                      const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(origin, "key '" + key + "' has an empty list item");
    out.push_back(parse_double(origin, key, item));
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(
    const std::string& text, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(origin, "line " + std::to_string(lineno) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      fail(origin, "line " + std::to_string(lineno) + " has an empty key");
    }
    if (!seen.insert(key).second) {
      fail(origin, "duplicate key '" + key + "'");
    }
    out.emplace_back(key, value);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_key_value_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open file: " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str(), path.string());
}

ScenarioInput scenario_from_keys(
    const std::map<std::string, std::string>& keys) {
  const std::string origin = "scenario";
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = keys.find(key);
    if (it == keys.end()) fail(origin, "missing required key '" + key + "'");
    return it->second;
  };
  auto optional = [&](const std::string& key) -> const std::string* {
    auto it = keys.find(key);
    return it == keys.end() ? nullptr : &it->second;
  };

  static const std::set<std::string> known = {
      "m",      "soi_doa_deg", "snr_db", "inr_db",
      "snapshots", "seed",     "interferer_doas_deg"};
  for (const auto& [key, value] : keys) {
    if (!known.count(key)) fail(origin, "unknown key '" + key + "'");
  }

  ScenarioInput input;
  input.scenario.sensor_count =
      static_cast<Index>(parse_int(origin, "m", require("m")));
  input.scenario.soi_doa_deg =
      parse_double(origin, "soi_doa_deg", require("soi_doa_deg"));
  const double snr_db = parse_double(origin, "snr_db", require("snr_db"));
  input.scenario.soi_power = std::pow(10.0, snr_db / 10.0);
  input.scenario.noise_power = 1.0;
  input.snapshots =
      static_cast<Index>(parse_int(origin, "snapshots", require("snapshots")));
  input.seed = parse_seed(origin, "seed", require("seed"));

  std::vector<double> doas;
  if (const std::string* v = optional("interferer_doas_deg")) {
    if (!trim(*v).empty()) doas = parse_double_list(origin, "interferer_doas_deg", *v);
  }
  if (doas.empty()) {
    if (optional("inr_db")) {
      fail(origin, "inr_db given but there are no interferers");
    }
  } else {
    const std::string* inr = optional("inr_db");
    if (!inr) fail(origin, "interferers given without inr_db");
    std::vector<double> inr_db = parse_double_list(origin, "inr_db", *inr);
    if (inr_db.size() == 1) inr_db.assign(doas.size(), inr_db[0]);
    if (inr_db.size() != doas.size()) {
      fail(origin, "inr_db list length does not match interferer count");
    }
    for (std::size_t k = 0; k < doas.size(); ++k) {
      input.scenario.interferers.push_back(
          {doas[k], std::pow(10.0, inr_db[k] / 10.0)});
    }
  }
  input.scenario.validate();
  if (input.snapshots < 1) fail(origin, "snapshots must be >= 1");
  return input;
}

ScenarioInput load_scenario_file(const std::filesystem::path& path) {
  std::map<std::string, std::string> keys;
  for (auto& [k, v] : read_key_value_file(path)) keys.emplace(k, v);
  return scenario_from_keys(keys);
}

std::vector<std::pair<std::string, std::string>> scenario_to_keys(
    const ScenarioInput& input, const std::string& prefix) {
  std::vector<std::pair<std::string, std::string>> out;
  const ScenarioXd& s = input.scenario;
  out.emplace_back(prefix + "m", std::to_string(s.sensor_count));
  out.emplace_back(prefix + "soi_doa_deg", format_exact(s.soi_doa_deg));
  out.emplace_back(prefix + "snr_db",
                   format_exact(10.0 * std::log10(s.soi_power)));
  if (!s.interferers.empty()) {
    std::string doas, inrs;
    for (std::size_t k = 0; k < s.interferers.size(); ++k) {
      if (k) {
        doas += ",";
        inrs += ",";
      }
      doas += format_exact(s.interferers[k].doa_deg);
      inrs += format_exact(10.0 * std::log10(s.interferers[k].power));
    }
    out.emplace_back(prefix + "interferer_doas_deg", doas);
    out.emplace_back(prefix + "inr_db", inrs);
  }
  out.emplace_back(prefix + "snapshots", std::to_string(input.snapshots));
  out.emplace_back(prefix + "seed", std::to_string(input.seed));
  return out;
}

std::string format_exact(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_value(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) {
    throw ValidationError("cannot open output file: " + path.string());
  }
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(fields[i]);
  }
  out_ << '\n';
  if (!out_) throw ValidationError("write failed");
}

void write_manifest(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open output file: " + path.string());
  }
  for (const auto& [key, value] : entries) {
    out << key << " = " << value << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace sparsebeam
