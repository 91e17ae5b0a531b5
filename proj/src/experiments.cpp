#include "sparsebeam/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "sparsebeam/beamformer.hpp"
#include "sparsebeam/errors.hpp"
#include "sparsebeam/rng.hpp"

namespace sparsebeam {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const std::map<std::string, ExperimentKind>& kind_names() {
  static const std::map<std::string, ExperimentKind> names = {
      {"convergence_trace", ExperimentKind::ConvergenceTrace},
      {"sparsity_vs_lambda", ExperimentKind::SparsityVsLambda},
      {"cpu_time_vs_t", ExperimentKind::CpuTimeVsT},
      {"cpu_time_vs_m", ExperimentKind::CpuTimeVsM},
      {"cpu_time_vs_l", ExperimentKind::CpuTimeVsL},
      {"beampattern_compare", ExperimentKind::BeampatternCompare},
      {"sinr_vs_doa", ExperimentKind::SinrVsDoa},
      {"sinr_vs_snr", ExperimentKind::SinrVsSnr},
      {"sinr_vs_t", ExperimentKind::SinrVsT},
      {"sinr_vs_m", ExperimentKind::SinrVsM},
      {"sinr_vs_l", ExperimentKind::SinrVsL},
  };
  return names;
}

const std::map<std::string, Method>& method_names() {
  static const std::map<std::string, Method> names = {
      {"admm", Method::Admm},
      {"best_enum", Method::BestEnum},
      {"worst_enum", Method::WorstEnum},
      {"compact_ula", Method::CompactUla},
      {"sparse_ula", Method::SparseUla},
      {"nested", Method::Nested},
      {"coprime", Method::Coprime},
      {"random", Method::Random},
      {"whole_ula", Method::WholeUla},
  };
  return names;
}

double parse_double_kv(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ValidationError("experiment: key '" + key + "' has non-numeric value '" +
                          value + "'");
  }
}

long long parse_int_kv(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("experiment: key '" + key + "' has non-integer value '" +
                          value + "'");
  }
}

std::vector<double> parse_list_kv(const std::string& key,
                                  const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) {
      throw ValidationError("experiment: empty item in list '" + key + "'");
    }
    out.push_back(parse_double_kv(key, item.substr(b, e - b + 1)));
  }
  return out;
}

bool parse_bool_kv(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ValidationError("experiment: key '" + key + "' must be 0/1");
}

Index as_index(const std::string& what, double value) {
  const double rounded = std::round(value);
  if (std::abs(value - rounded) > 1e-9 || rounded < 1) {
    throw ValidationError(what + " must be a positive integer, got " +
                          format_value(value));
  }
  return static_cast<Index>(rounded);
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return kNan;
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return kNan;
  double sum = 0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Strided fan-out with deterministic job-to-result mapping; exceptions from
// workers are rethrown on the caller's thread.
void run_jobs(std::size_t count, int threads,
              const std::function<void(std::size_t)>& job) {
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < count;
             i += static_cast<std::size_t>(workers)) {
          job(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

HermitianMatrixXd training_covariance(const ScenarioInput& input,
                                      bool use_true_cov,
                                      std::uint64_t snapshot_seed) {
  if (use_true_cov) return data_covariance_true(input.scenario);
  return sample_covariance(
      generate_snapshots(input.scenario, input.snapshots, snapshot_seed));
}

// Evaluates one selection method against a fixed training covariance. The
// exhaustive sweep is shared between best_enum and worst_enum.
class MethodEvaluator {
 public:
  MethodEvaluator(const ScenarioXd& s, const HermitianMatrixXd& rx,
                  Index target, AdmmConfig<double> cfg, double lambda_lo,
                  double lambda_hi, std::uint64_t random_seed,
                  std::size_t cap, int threads)
      : s_(s),
        rx_(rx),
        steering_(steering_vector(s.soi_doa_deg, s.sensor_count)),
        target_(target),
        cfg_(cfg),
        random_seed_(random_seed),
        cap_(cap),
        threads_(threads) {
    const double rho =
        cfg_.rho > 0 ? cfg_.rho : rho_lower_bound(rx_);
    lambda_lo_ = lambda_lo > 0 ? lambda_lo : 1e-4 * rho;
    lambda_hi_ = lambda_hi > 0 ? lambda_hi : 10.0 * rho;
  }

  SelectionReportXd eval(Method method) {
    switch (method) {
      case Method::Admm:
        return tune_lambda(target_, lambda_lo_, lambda_hi_, cfg_, rx_,
                           steering_, s_);
      case Method::BestEnum:
        return enumeration().best;
      case Method::WorstEnum:
        return enumeration().worst;
      case Method::CompactUla:
        return from_support(fixed_geometry(ArrayGeometry::CompactUla,
                                           s_.sensor_count, target_));
      case Method::SparseUla:
        return from_support(fixed_geometry(ArrayGeometry::SparseUla,
                                           s_.sensor_count, target_));
      case Method::Nested:
        return from_support(fixed_geometry(ArrayGeometry::Nested,
                                           s_.sensor_count, target_));
      case Method::Coprime:
        return from_support(fixed_geometry(ArrayGeometry::Coprime,
                                           s_.sensor_count, target_));
      case Method::Random:
        return from_support(fixed_geometry(ArrayGeometry::Random,
                                           s_.sensor_count, target_,
                                           random_seed_));
      case Method::WholeUla:
        return from_support(fixed_geometry(ArrayGeometry::CompactUla,
                                           s_.sensor_count, s_.sensor_count));
    }
    throw ValidationError("unknown method");
  }

 private:
  const EnumerationResult<double>& enumeration() {
    if (!enum_cache_) {
      enum_cache_ = enumerate_supports(s_, rx_, steering_, target_, cap_,
                                       threads_);
    }
    return *enum_cache_;
  }

  SelectionReportXd from_support(std::vector<Index> support) const {
    SelectionReportXd report;
    report.support = std::move(support);
    report.weight = reduced_mvdr(report.support, s_, rx_);
    report.sinr_db = output_sinr(report.weight, s_);
    return report;
  }

  const ScenarioXd& s_;
  const HermitianMatrixXd& rx_;
  ComplexVectorXd steering_;
  Index target_;
  AdmmConfig<double> cfg_;
  double lambda_lo_ = 0, lambda_hi_ = 0;
  std::uint64_t random_seed_;
  std::size_t cap_;
  int threads_;
  std::optional<EnumerationResult<double>> enum_cache_;
};

// Applies one grid value to the base scenario for the sweep kinds.
struct GridPoint {
  ScenarioInput input;
  Index target;
};

GridPoint apply_grid_value(const ExperimentSpec& spec, double value) {
  GridPoint point{spec.input, spec.target_count};
  ScenarioXd& s = point.input.scenario;
  switch (spec.kind) {
    case ExperimentKind::SinrVsDoa: {
      const double base = s.soi_doa_deg;
      s.soi_doa_deg = value;
      for (auto& itf : s.interferers) {
        itf.doa_deg = value + (itf.doa_deg - base);
      }
      break;
    }
    case ExperimentKind::SinrVsSnr:
      s.soi_power = std::pow(10.0, value / 10.0);
      break;
    case ExperimentKind::SinrVsT:
    case ExperimentKind::CpuTimeVsT:
      point.input.snapshots = as_index("snapshots", value);
      break;
    case ExperimentKind::SinrVsM:
    case ExperimentKind::CpuTimeVsM:
      s.sensor_count = as_index("sensor count", value);
      break;
    case ExperimentKind::SinrVsL:
    case ExperimentKind::CpuTimeVsL:
      point.target = as_index("selection count", value);
      break;
    default:
      break;
  }
  s.validate();
  return point;
}

std::string grid_column(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SinrVsDoa:
      return "soi_doa_deg";
    case ExperimentKind::SinrVsSnr:
      return "snr_db";
    case ExperimentKind::SinrVsT:
    case ExperimentKind::CpuTimeVsT:
      return "snapshots";
    case ExperimentKind::SinrVsM:
    case ExperimentKind::CpuTimeVsM:
      return "m";
    case ExperimentKind::SinrVsL:
    case ExperimentKind::CpuTimeVsL:
      return "l";
    case ExperimentKind::SparsityVsLambda:
      return "lambda";
    case ExperimentKind::BeampatternCompare:
      return "angle_deg";
    case ExperimentKind::ConvergenceTrace:
      return "k";
  }
  return "value";
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-9 * std::max(1.0, std::abs(step)); v += step) {
    out.push_back(v);
  }
  return out;
}

}  // namespace

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned cores = std::thread::hardware_concurrency();
  return cores ? static_cast<int>(cores) : 1;
}

std::string to_string(ExperimentKind kind) {
  for (const auto& [name, k] : kind_names()) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  const auto it = kind_names().find(name);
  if (it == kind_names().end()) {
    throw ValidationError("unknown experiment kind '" + name + "'");
  }
  return it->second;
}

std::string to_string(Method method) {
  for (const auto& [name, m] : method_names()) {
    if (m == method) return name;
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  const auto it = method_names().find(name);
  if (it == method_names().end()) {
    throw ValidationError("unknown method '" + name + "'");
  }
  return it->second;
}

std::vector<Method> default_methods(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SinrVsL:
      // Geometries with a fixed layout cannot realize every sparsity level
      // on the aperture, so the L sweep keeps to the ones that can.
      return {Method::Admm,       Method::BestEnum, Method::WorstEnum,
              Method::CompactUla, Method::Random,   Method::WholeUla};
    case ExperimentKind::CpuTimeVsT:
    case ExperimentKind::CpuTimeVsM:
    case ExperimentKind::CpuTimeVsL:
      return {Method::Admm};
    default:
      return {Method::Admm,       Method::BestEnum,  Method::WorstEnum,
              Method::CompactUla, Method::SparseUla, Method::Nested,
              Method::Coprime,    Method::Random,    Method::WholeUla};
  }
}

std::vector<double> default_grid(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::SinrVsDoa:
      return linear_grid(-50, 50, 5);
    case ExperimentKind::SinrVsSnr:
      return linear_grid(-20, 12, 2);
    case ExperimentKind::SinrVsT:
    case ExperimentKind::CpuTimeVsT:
      return linear_grid(10, 150, 10);
    case ExperimentKind::SinrVsM:
    case ExperimentKind::CpuTimeVsM:
      return linear_grid(10, 20, 1);
    case ExperimentKind::SinrVsL:
    case ExperimentKind::CpuTimeVsL:
      return linear_grid(3, 12, 1);
    case ExperimentKind::BeampatternCompare:
      return linear_grid(-89.5, 89.5, 0.5);
    case ExperimentKind::SparsityVsLambda: {
      const double rho = spec.admm.rho > 0
                             ? spec.admm.rho
                             : rho_lower_bound(
                                   data_covariance_true(spec.input.scenario));
      std::vector<double> grid;
      for (int i = 0; i <= 25; ++i) {
        grid.push_back(rho * std::pow(10.0, -4.0 + 5.0 * i / 25.0));
      }
      return grid;
    }
    case ExperimentKind::ConvergenceTrace:
      return {};
  }
  return {};
}

ExperimentSpec experiment_from_keys(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::filesystem::path& base_dir) {
  ExperimentSpec spec;
  std::map<std::string, std::string> keys;
  std::map<std::string, std::string> scenario_keys;
  for (const auto& [k, v] : pairs) {
    if (k.rfind("scenario.", 0) == 0) {
      scenario_keys.emplace(k.substr(9), v);
    } else {
      keys.emplace(k, v);
    }
  }

  const auto it_kind = keys.find("kind");
  if (it_kind == keys.end()) {
    throw ValidationError("experiment: missing required key 'kind'");
  }
  spec.kind = experiment_kind_from_string(it_kind->second);
  keys.erase(it_kind);

  if (const auto it = keys.find("scenario"); it != keys.end()) {
    if (!scenario_keys.empty()) {
      throw ValidationError(
          "experiment: give either 'scenario' or inline 'scenario.*' keys");
    }
    std::filesystem::path p = it->second;
    if (p.is_relative()) p = base_dir / p;
    spec.input = load_scenario_file(p);
    keys.erase(it);
  } else if (!scenario_keys.empty()) {
    spec.input = scenario_from_keys(scenario_keys);
  } else {
    throw ValidationError("experiment: missing scenario");
  }

  double grid_min = kNan, grid_max = kNan, grid_step = kNan;
  for (const auto& [key, value] : keys) {
    if (key == "grid") {
      spec.grid = parse_list_kv(key, value);
    } else if (key == "grid_min") {
      grid_min = parse_double_kv(key, value);
    } else if (key == "grid_max") {
      grid_max = parse_double_kv(key, value);
    } else if (key == "grid_step") {
      grid_step = parse_double_kv(key, value);
    } else if (key == "snr_list") {
      spec.snr_list = parse_list_kv(key, value);
    } else if (key == "trials") {
      spec.trials = static_cast<int>(parse_int_kv(key, value));
    } else if (key == "master_seed") {
      spec.master_seed = static_cast<std::uint64_t>(parse_int_kv(key, value));
    } else if (key == "methods") {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) {
          throw ValidationError("experiment: empty method name");
        }
        spec.methods.push_back(
            method_from_string(item.substr(b, e - b + 1)));
      }
    } else if (key == "target_l") {
      spec.target_count = static_cast<Index>(parse_int_kv(key, value));
    } else if (key == "lambda") {
      spec.admm.lambda = parse_double_kv(key, value);
    } else if (key == "lambda_lo") {
      spec.lambda_lo = parse_double_kv(key, value);
    } else if (key == "lambda_hi") {
      spec.lambda_hi = parse_double_kv(key, value);
    } else if (key == "rho") {
      spec.admm.rho = parse_double_kv(key, value);
    } else if (key == "epsilon") {
      spec.admm.epsilon = parse_double_kv(key, value);
    } else if (key == "eta") {
      spec.admm.eta = parse_double_kv(key, value);
    } else if (key == "k_max") {
      spec.admm.max_iterations = static_cast<int>(parse_int_kv(key, value));
    } else if (key == "variant") {
      if (value == "l1") {
        spec.admm.variant = PenaltyVariant::PlainL1;
      } else if (value == "reweighted") {
        spec.admm.variant = PenaltyVariant::Reweighted;
      } else {
        throw ValidationError("experiment: variant must be l1 or reweighted");
      }
    } else if (key == "init_seed") {
      spec.admm.init_seed = static_cast<std::uint64_t>(parse_int_kv(key, value));
    } else if (key == "use_true_cov") {
      spec.use_true_cov = parse_bool_kv(key, value);
    } else if (key == "threads") {
      spec.threads = static_cast<int>(parse_int_kv(key, value));
    } else if (key == "enum_cap") {
      spec.enumeration_cap =
          static_cast<std::size_t>(parse_int_kv(key, value));
    } else if (key == "out_dir") {
      std::filesystem::path p = value;
      spec.out_dir = p.is_relative() ? base_dir / p : p;
    } else if (key == "output_csv") {
      // Informational manifest entry; accepted so a manifest re-runs as-is.
    } else {
      throw ValidationError("experiment: unknown key '" + key + "'");
    }
  }

  if (spec.grid.empty() && !std::isnan(grid_min)) {
    if (std::isnan(grid_max) || std::isnan(grid_step) || grid_step <= 0) {
      throw ValidationError("experiment: grid_min needs grid_max and grid_step");
    }
    spec.grid = linear_grid(grid_min, grid_max, grid_step);
  }
  if (spec.trials < 1) throw ValidationError("experiment: trials must be >= 1");
  if (spec.threads < 0) throw ValidationError("experiment: threads must be >= 0");
  if (spec.target_count < 1) {
    throw ValidationError("experiment: target_l must be >= 1");
  }
  return spec;
}

ExperimentSpec load_experiment_file(const std::filesystem::path& path) {
  return experiment_from_keys(read_key_value_file(path), path.parent_path());
}

std::vector<std::pair<std::string, std::string>> experiment_to_keys(
    const ExperimentSpec& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("kind", to_string(spec.kind));
  for (auto& kv : scenario_to_keys(spec.input, "scenario.")) out.push_back(kv);
  if (!spec.grid.empty()) {
    std::string grid;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      if (i) grid += ",";
      grid += format_exact(spec.grid[i]);
    }
    out.emplace_back("grid", grid);
  }
  if (!spec.snr_list.empty()) {
    std::string list;
    for (std::size_t i = 0; i < spec.snr_list.size(); ++i) {
      if (i) list += ",";
      list += format_exact(spec.snr_list[i]);
    }
    out.emplace_back("snr_list", list);
  }
  out.emplace_back("trials", std::to_string(spec.trials));
  out.emplace_back("master_seed", std::to_string(spec.master_seed));
  if (!spec.methods.empty()) {
    std::string names;
    for (std::size_t i = 0; i < spec.methods.size(); ++i) {
      if (i) names += ",";
      names += to_string(spec.methods[i]);
    }
    out.emplace_back("methods", names);
  }
  out.emplace_back("target_l", std::to_string(spec.target_count));
  out.emplace_back("lambda", format_exact(spec.admm.lambda));
  out.emplace_back("lambda_lo", format_exact(spec.lambda_lo));
  out.emplace_back("lambda_hi", format_exact(spec.lambda_hi));
  out.emplace_back("rho", format_exact(spec.admm.rho));
  out.emplace_back("epsilon", format_exact(spec.admm.epsilon));
  out.emplace_back("eta", format_exact(spec.admm.eta));
  out.emplace_back("k_max", std::to_string(spec.admm.max_iterations));
  out.emplace_back("variant", spec.admm.variant == PenaltyVariant::PlainL1
                                  ? "l1"
                                  : "reweighted");
  out.emplace_back("init_seed", std::to_string(spec.admm.init_seed));
  out.emplace_back("use_true_cov", spec.use_true_cov ? "1" : "0");
  out.emplace_back("threads", std::to_string(spec.threads));
  out.emplace_back("enum_cap", std::to_string(spec.enumeration_cap));
  return out;
}

namespace {

struct ResolvedSpec {
  ExperimentSpec spec;
  std::filesystem::path csv_path;
  std::filesystem::path manifest_path;
};

ResolvedSpec resolve(const ExperimentSpec& raw,
                     const std::filesystem::path& output_dir) {
  ResolvedSpec r{raw, {}, {}};
  if (r.spec.grid.empty()) r.spec.grid = default_grid(r.spec);
  if (r.spec.methods.empty()) r.spec.methods = default_methods(r.spec.kind);
  if (r.spec.snr_list.empty()) {
    r.spec.snr_list = {10.0 * std::log10(r.spec.input.scenario.soi_power)};
  }
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec || !std::filesystem::is_directory(output_dir)) {
    throw ValidationError("cannot create output directory: " +
                          output_dir.string());
  }
  const std::string stem = to_string(r.spec.kind);
  r.csv_path = output_dir / (stem + ".csv");
  r.manifest_path = output_dir / (stem + ".manifest");
  return r;
}

// Per-trial, per-grid-point seeds, all derived from (master_seed, trial).
struct TrialSeeds {
  std::uint64_t snapshots;
  std::uint64_t init;
  std::uint64_t random_support;
};

TrialSeeds seeds_for(std::uint64_t master_seed, std::size_t trial,
                     std::size_t cell, std::size_t cells) {
  const std::uint64_t trial_seed =
      SplitMix64::derive(master_seed, static_cast<std::uint64_t>(trial));
  return {SplitMix64::derive(trial_seed, 2 * cell),
          SplitMix64::derive(trial_seed, 2 * cell + 1),
          SplitMix64::derive(trial_seed, 2 * cells + cell)};
}

void write_sinr_sweep(const ResolvedSpec& r) {
  const ExperimentSpec& spec = r.spec;
  const std::size_t points = spec.grid.size();
  const std::size_t trials = static_cast<std::size_t>(spec.trials);
  // results[point][trial][method]
  std::vector<std::vector<std::vector<double>>> results(
      points, std::vector<std::vector<double>>(
                  trials, std::vector<double>(spec.methods.size(), kNan)));

  run_jobs(points * trials, resolve_threads(spec.threads), [&](std::size_t job) {
    const std::size_t gi = job / trials;
    const std::size_t trial = job % trials;
    const GridPoint point = apply_grid_value(spec, spec.grid[gi]);
    const TrialSeeds seeds =
        seeds_for(spec.master_seed, trial, gi, points);
    const HermitianMatrixXd rx =
        training_covariance(point.input, spec.use_true_cov, seeds.snapshots);
    AdmmConfig<double> cfg = spec.admm;
    cfg.init_seed = seeds.init;
    MethodEvaluator evaluator(point.input.scenario, rx, point.target, cfg,
                              spec.lambda_lo, spec.lambda_hi,
                              seeds.random_support, spec.enumeration_cap, 1);
    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
      try {
        results[gi][trial][mi] = evaluator.eval(spec.methods[mi]).sinr_db;
      } catch (const ValidationError&) {
        // geometry does not fit this aperture; leave the cell as nan
      }
    }
  });

  CsvWriter csv(r.csv_path);
  std::vector<std::string> header{grid_column(spec.kind)};
  for (const Method m : spec.methods) header.push_back("sinr_db_" + to_string(m));
  header.push_back("sinr_db_optimal");
  csv.row(header);
  for (std::size_t gi = 0; gi < points; ++gi) {
    const GridPoint point = apply_grid_value(spec, spec.grid[gi]);
    std::vector<std::string> row{format_value(spec.grid[gi])};
    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
      std::vector<double> per_trial;
      per_trial.reserve(trials);
      for (std::size_t t = 0; t < trials; ++t) {
        per_trial.push_back(results[gi][t][mi]);
      }
      row.push_back(format_value(mean_of(per_trial)));
    }
    row.push_back(format_value(optimal_sinr(point.input.scenario)));
    csv.row(row);
  }
}

void write_cpu_sweep(const ResolvedSpec& r) {
  const ExperimentSpec& spec = r.spec;
  const std::size_t points = spec.grid.size();
  const std::size_t trials = static_cast<std::size_t>(spec.trials);
  std::vector<std::vector<double>> seconds(points,
                                           std::vector<double>(trials, kNan));
  // Timing runs stay serial no matter the thread setting; concurrent timing
  // would measure contention, not the solver.
  for (std::size_t gi = 0; gi < points; ++gi) {
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const GridPoint point = apply_grid_value(spec, spec.grid[gi]);
      const TrialSeeds seeds = seeds_for(spec.master_seed, trial, gi, points);
      const HermitianMatrixXd rx =
          training_covariance(point.input, spec.use_true_cov, seeds.snapshots);
      AdmmConfig<double> cfg = spec.admm;
      cfg.init_seed = seeds.init;
      MethodEvaluator evaluator(point.input.scenario, rx, point.target, cfg,
                                spec.lambda_lo, spec.lambda_hi,
                                seeds.random_support, spec.enumeration_cap, 1);
      const auto start = std::chrono::steady_clock::now();
      evaluator.eval(Method::Admm);
      const auto stop = std::chrono::steady_clock::now();
      seconds[gi][trial] =
          std::chrono::duration<double>(stop - start).count();
    }
  }

  CsvWriter csv(r.csv_path);
  csv.row({grid_column(spec.kind), "seconds_mean", "seconds_median"});
  for (std::size_t gi = 0; gi < points; ++gi) {
    csv.row({format_value(spec.grid[gi]), format_value(mean_of(seconds[gi])),
             format_value(median_of(seconds[gi]))});
  }
}

void write_sparsity_sweep(const ResolvedSpec& r) {
  const ExperimentSpec& spec = r.spec;
  const std::size_t points = spec.grid.size();
  const std::size_t curves = spec.snr_list.size();
  const std::size_t trials = static_cast<std::size_t>(spec.trials);
  std::vector<std::vector<std::vector<double>>> counts(
      points, std::vector<std::vector<double>>(
                  curves, std::vector<double>(trials, kNan)));

  run_jobs(points * curves * trials, resolve_threads(spec.threads),
           [&](std::size_t job) {
    const std::size_t gi = job / (curves * trials);
    const std::size_t si = (job / trials) % curves;
    const std::size_t trial = job % trials;
    ScenarioInput input = spec.input;
    input.scenario.soi_power = std::pow(10.0, spec.snr_list[si] / 10.0);
    const std::size_t cell = gi * curves + si;
    const TrialSeeds seeds =
        seeds_for(spec.master_seed, trial, cell, points * curves);
    const HermitianMatrixXd rx =
        training_covariance(input, spec.use_true_cov, seeds.snapshots);
    AdmmConfig<double> cfg = spec.admm;
    cfg.lambda = spec.grid[gi];
    cfg.init_seed = seeds.init;
    const AdmmResult<double> solved =
        admm_solve(cfg, rx, steering_vector(input.scenario.soi_doa_deg,
                                            input.scenario.sensor_count));
    counts[gi][si][trial] =
        static_cast<double>(count_active(solved.state.weight).count);
  });

  CsvWriter csv(r.csv_path);
  std::vector<std::string> header{"lambda"};
  for (const double snr : spec.snr_list) {
    header.push_back("active_snr_" + format_value(snr) + "db");
  }
  csv.row(header);
  for (std::size_t gi = 0; gi < points; ++gi) {
    std::vector<std::string> row{format_value(spec.grid[gi])};
    for (std::size_t si = 0; si < curves; ++si) {
      row.push_back(format_value(mean_of(counts[gi][si])));
    }
    csv.row(row);
  }
}

void write_convergence_trace(const ResolvedSpec& r) {
  const ExperimentSpec& spec = r.spec;
  const HermitianMatrixXd rx = training_covariance(
      spec.input, spec.use_true_cov, spec.input.seed);
  const ComplexVectorXd a0 = steering_vector(
      spec.input.scenario.soi_doa_deg, spec.input.scenario.sensor_count);

  AdmmConfig<double> plain = spec.admm;
  plain.variant = PenaltyVariant::PlainL1;
  AdmmConfig<double> reweighted = spec.admm;
  reweighted.variant = PenaltyVariant::Reweighted;
  const AdmmResult<double> a = admm_solve(plain, rx, a0);
  const AdmmResult<double> b = admm_solve(reweighted, rx, a0);

  CsvWriter csv(r.csv_path);
  csv.row({"k", "lagrangian_l1", "primal_residual_l1", "feasibility_gap_l1",
           "lagrangian_reweighted", "primal_residual_reweighted",
           "feasibility_gap_reweighted"});
  const std::size_t rows =
      std::max(a.lagrangian_trace.size(), b.lagrangian_trace.size());
  for (std::size_t k = 0; k < rows; ++k) {
    std::vector<std::string> row{std::to_string(k + 1)};
    auto push = [&](const AdmmResult<double>& res) {
      if (k < res.lagrangian_trace.size()) {
        row.push_back(format_value(res.lagrangian_trace[k]));
        row.push_back(format_value(res.residual_trace[k]));
        row.push_back(format_value(res.feasibility_trace[k]));
      } else {
        row.insert(row.end(), 3, "");
      }
    };
    push(a);
    push(b);
    csv.row(row);
  }
}

void write_beampattern_compare(const ResolvedSpec& r) {
  const ExperimentSpec& spec = r.spec;
  const TrialSeeds seeds = seeds_for(spec.master_seed, 0, 0, 1);
  const HermitianMatrixXd rx = training_covariance(
      spec.input, spec.use_true_cov, spec.input.seed);
  AdmmConfig<double> cfg = spec.admm;
  cfg.init_seed = seeds.init;
  MethodEvaluator evaluator(spec.input.scenario, rx, spec.target_count, cfg,
                            spec.lambda_lo, spec.lambda_hi,
                            seeds.random_support, spec.enumeration_cap,
                            resolve_threads(spec.threads));

  RealVectorXd grid(static_cast<Index>(spec.grid.size()));
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    grid(static_cast<Index>(i)) = spec.grid[i];
  }

  std::vector<std::optional<RealVectorXd>> patterns;
  for (const Method m : spec.methods) {
    try {
      const SelectionReportXd report = evaluator.eval(m);
      patterns.emplace_back(beampattern(report.weight, grid,
                                        spec.input.scenario.sensor_count));
    } catch (const ValidationError&) {
      patterns.emplace_back(std::nullopt);
    }
  }

  CsvWriter csv(r.csv_path);
  std::vector<std::string> header{"angle_deg"};
  for (const Method m : spec.methods) header.push_back("gain_db_" + to_string(m));
  csv.row(header);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    std::vector<std::string> row{format_value(spec.grid[i])};
    for (const auto& p : patterns) {
      row.push_back(p ? format_value((*p)(static_cast<Index>(i))) : "nan");
    }
    csv.row(row);
  }
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentSpec& raw,
                                const std::filesystem::path& output_dir) {
  const ResolvedSpec r = resolve(raw, output_dir);
  switch (r.spec.kind) {
    case ExperimentKind::ConvergenceTrace:
      write_convergence_trace(r);
      break;
    case ExperimentKind::SparsityVsLambda:
      write_sparsity_sweep(r);
      break;
    case ExperimentKind::CpuTimeVsT:
    case ExperimentKind::CpuTimeVsM:
    case ExperimentKind::CpuTimeVsL:
      write_cpu_sweep(r);
      break;
    case ExperimentKind::BeampatternCompare:
      write_beampattern_compare(r);
      break;
    case ExperimentKind::SinrVsDoa:
    case ExperimentKind::SinrVsSnr:
    case ExperimentKind::SinrVsT:
    case ExperimentKind::SinrVsM:
    case ExperimentKind::SinrVsL:
      write_sinr_sweep(r);
      break;
  }
  auto entries = experiment_to_keys(r.spec);
  entries.emplace_back("output_csv", r.csv_path.filename().string());
  write_manifest(r.manifest_path, entries);
  return {{r.csv_path, r.manifest_path}};
}

std::vector<MethodRow> compare_methods(const ScenarioInput& input,
                                       Index target,
                                       const std::vector<Method>& methods,
                                       bool use_true_cov,
                                       const AdmmConfig<double>& admm,
                                       double lambda_lo, double lambda_hi,
                                       std::uint64_t random_seed,
                                       std::size_t enumeration_cap,
                                       int threads) {
  input.scenario.validate();
  const HermitianMatrixXd rx =
      training_covariance(input, use_true_cov, input.seed);
  MethodEvaluator evaluator(input.scenario, rx, target, admm, lambda_lo,
                            lambda_hi, random_seed, enumeration_cap,
                            resolve_threads(threads));
  std::vector<MethodRow> rows;
  rows.reserve(methods.size());
  for (const Method m : methods) {
    rows.push_back({m, evaluator.eval(m)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MethodRow& a, const MethodRow& b) {
                     const double x = a.report.sinr_db, y = b.report.sinr_db;
                     if (std::isnan(x)) return false;
                     if (std::isnan(y)) return true;
                     return x > y;
                   });
  return rows;
}

}  // namespace sparsebeam
