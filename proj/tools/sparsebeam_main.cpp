#include <complex>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsebeam/admm.hpp"
#include "sparsebeam/beamformer.hpp"
#include "sparsebeam/errors.hpp"
#include "sparsebeam/experiments.hpp"
#include "sparsebeam/scenario_io.hpp"
#include "sparsebeam/selection.hpp"
#include "sparsebeam/signal_model.hpp"

namespace {

using namespace sparsebeam;

struct AdmmFlags {
  double lambda = 1.0;
  double rho = 0.0;
  double epsilon = 1e-10;
  double eta = 1e-12;
  int k_max = 1000;
  std::string variant = "l1";
  std::uint64_t init_seed = 0;
};

void add_admm_flags(CLI::App* cmd, AdmmFlags& f) {
  cmd->add_option("--lambda", f.lambda,
                  "sparsity penalty weight (fixed-penalty solves only)")
      ->capture_default_str();
  cmd->add_option("--rho", f.rho,
                  "augmented Lagrangian parameter; 0 uses the convergence bound")
      ->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "reweighting offset")
      ->capture_default_str();
  cmd->add_option("--eta", f.eta, "primal residual stopping threshold")
      ->capture_default_str();
  cmd->add_option("--k-max", f.k_max, "iteration cap")->capture_default_str();
  cmd->add_option("--variant", f.variant, "penalty variant")
      ->check(CLI::IsMember({"l1", "reweighted"}))
      ->capture_default_str();
  cmd->add_option("--init-seed", f.init_seed,
                  "seed for the random auxiliary initializer")
      ->capture_default_str();
}

AdmmConfig<double> to_config(const AdmmFlags& f) {
  AdmmConfig<double> cfg;
  cfg.lambda = f.lambda;
  cfg.rho = f.rho;
  cfg.epsilon = f.epsilon;
  cfg.eta = f.eta;
  cfg.max_iterations = f.k_max;
  cfg.variant = f.variant == "reweighted" ? PenaltyVariant::Reweighted
                                          : PenaltyVariant::PlainL1;
  cfg.init_seed = f.init_seed;
  return cfg;
}

HermitianMatrixXd covariance_for(const ScenarioInput& input, bool true_cov) {
  if (true_cov) return data_covariance_true(input.scenario);
  return sample_covariance(
      generate_snapshots(input.scenario, input.snapshots, input.seed));
}

void warn_rho(double rho, const HermitianMatrixXd& rx) {
  if (rho <= 0) return;
  const double bound = rho_lower_bound(rx);
  if (rho < bound * (1 - 1e-12)) {
    std::cerr << "warning: rho = " << format_value(rho)
              << " is below the convergence bound " << format_value(bound)
              << "; monotone convergence is not guaranteed\n";
  }
}

std::string support_to_string(const std::vector<Index>& support) {
  std::string out;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(support[i]);
  }
  return out;
}

std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  std::string item;
  std::stringstream ss(csv);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ValidationError("empty method name");
    out.push_back(method_from_string(item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ValidationError("no methods given");
  return out;
}

void write_report_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, const SelectionReportXd*>>& rows) {
  CsvWriter csv(path);
  csv.row({"method", "support", "lambda", "sinr_db"});
  for (const auto& [label, report] : rows) {
    csv.row({label, support_to_string(report->support),
             format_value(report->lambda_used), format_value(report->sinr_db)});
  }
}

struct SolveArgs {
  std::string scenario;
  bool true_cov = false;
  AdmmFlags admm;
  std::string trace_path;
  std::string weights_path;
};

void run_solve(const SolveArgs& args) {
  const ScenarioInput input = load_scenario_file(args.scenario);
  const HermitianMatrixXd rx = covariance_for(input, args.true_cov);
  const ComplexVectorXd a0 =
      steering_vector(input.scenario.soi_doa_deg, input.scenario.sensor_count);
  const AdmmConfig<double> cfg = to_config(args.admm);
  warn_rho(cfg.rho, rx);

  const AdmmResult<double> result = admm_solve(cfg, rx, a0);
  const ActiveCount active = count_active(result.state.weight);

  std::cout << "rho = " << format_value(result.rho_used) << " (bound "
            << format_value(result.rho_bound) << ")\n"
            << "iterations = " << result.state.iteration << " ("
            << (result.termination == Termination::ResidualMet
                    ? "residual target met"
                    : "iteration cap reached")
            << ")\n"
            << "lagrangian = " << format_value(result.lagrangian_trace.back())
            << "\n"
            << "primal_residual = "
            << format_value(result.kkt.primal_residual) << "\n"
            << "stationarity_residual = "
            << format_value(result.kkt.stationarity_residual) << "\n"
            << "feasibility_gap = " << format_value(result.kkt.feasibility_gap)
            << "\n"
            << "active = " << active.count << " of "
            << input.scenario.sensor_count << "\n";

  if (!args.trace_path.empty()) {
    CsvWriter csv(args.trace_path);
    csv.row({"k", "lagrangian", "primal_residual", "feasibility_gap"});
    for (std::size_t k = 0; k < result.lagrangian_trace.size(); ++k) {
      csv.row({std::to_string(k + 1), format_value(result.lagrangian_trace[k]),
               format_value(result.residual_trace[k]),
               format_value(result.feasibility_trace[k])});
    }
    std::cout << "wrote " << args.trace_path << "\n";
  }
  if (!args.weights_path.empty()) {
    CsvWriter csv(args.weights_path);
    csv.row({"index", "real", "imag", "modulus"});
    for (Index i = 0; i < result.state.weight.size(); ++i) {
      const std::complex<double> w = result.state.weight(i);
      csv.row({std::to_string(i), format_exact(w.real()),
               format_exact(w.imag()), format_exact(std::abs(w))});
    }
    std::cout << "wrote " << args.weights_path << "\n";
  }
}

struct SelectArgs {
  std::string scenario;
  bool true_cov = false;
  Index target = 4;
  double lambda_lo = 0;
  double lambda_hi = 0;
  int search_iters = kDefaultSearchIters;
  AdmmFlags admm;
  std::string out_path;
};

void run_select(const SelectArgs& args) {
  const ScenarioInput input = load_scenario_file(args.scenario);
  const HermitianMatrixXd rx = covariance_for(input, args.true_cov);
  const ComplexVectorXd a0 =
      steering_vector(input.scenario.soi_doa_deg, input.scenario.sensor_count);
  const AdmmConfig<double> cfg = to_config(args.admm);
  warn_rho(cfg.rho, rx);

  const double rho = cfg.rho > 0 ? cfg.rho : rho_lower_bound(rx);
  const double lo = args.lambda_lo > 0 ? args.lambda_lo : 1e-4 * rho;
  const double hi = args.lambda_hi > 0 ? args.lambda_hi : 10.0 * rho;
  const SelectionReportXd report =
      tune_lambda(args.target, lo, hi, cfg, rx, a0, input.scenario,
                  kDefaultActiveFraction, args.search_iters);
  if (report.fallback) {
    std::cerr << "warning: no probed lambda hit the target count exactly; "
                 "reporting the closest\n";
  }

  std::cout << "support = " << support_to_string(report.support) << "\n"
            << "lambda = " << format_value(report.lambda_used) << "\n"
            << "search_iters = " << report.search_iters << "\n"
            << "sinr_db = " << format_value(report.sinr_db) << "\n";
  if (!args.out_path.empty()) {
    write_report_csv(args.out_path, {{"admm", &report}});
    std::cout << "wrote " << args.out_path << "\n";
  }
}

struct EnumerateArgs {
  std::string scenario;
  bool true_cov = false;
  Index target = 4;
  std::size_t cap = kDefaultEnumerationCap;
  int threads = 0;
  std::string out_path;
};

void run_enumerate(const EnumerateArgs& args) {
  const ScenarioInput input = load_scenario_file(args.scenario);
  const HermitianMatrixXd rx = covariance_for(input, args.true_cov);
  const ComplexVectorXd a0 =
      steering_vector(input.scenario.soi_doa_deg, input.scenario.sensor_count);
  const EnumerationResult<double> result =
      enumerate_supports(input.scenario, rx, a0, args.target, args.cap,
                         resolve_threads(args.threads));

  std::cout << "evaluated = " << result.evaluated << "\n"
            << "best: support = " << support_to_string(result.best.support)
            << ", sinr_db = " << format_value(result.best.sinr_db) << "\n"
            << "worst: support = " << support_to_string(result.worst.support)
            << ", sinr_db = " << format_value(result.worst.sinr_db) << "\n";
  if (!args.out_path.empty()) {
    write_report_csv(args.out_path,
                     {{"best_enum", &result.best}, {"worst_enum", &result.worst}});
    std::cout << "wrote " << args.out_path << "\n";
  }
}

struct CompareArgs {
  std::string scenario;
  bool true_cov = false;
  Index target = 4;
  std::string methods =
      "admm,best_enum,worst_enum,compact_ula,sparse_ula,nested,coprime,"
      "random,whole_ula";
  double lambda_lo = 0;
  double lambda_hi = 0;
  std::uint64_t random_seed = 1;
  std::size_t enum_cap = kDefaultEnumerationCap;
  int threads = 0;
  AdmmFlags admm;
  std::string out_path;
};

void run_compare(const CompareArgs& args) {
  const ScenarioInput input = load_scenario_file(args.scenario);
  const HermitianMatrixXd rx = covariance_for(input, args.true_cov);
  warn_rho(args.admm.rho, rx);
  const std::vector<MethodRow> rows = compare_methods(
      input, args.target, parse_methods(args.methods), args.true_cov,
      to_config(args.admm), args.lambda_lo, args.lambda_hi, args.random_seed,
      args.enum_cap, args.threads);

  std::cout << std::left << std::setw(12) << "method" << std::setw(28)
            << "support" << std::setw(17) << "lambda"
            << "sinr_db\n";
  for (const MethodRow& row : rows) {
    std::string label = to_string(row.method);
    if (row.report.fallback) label += "*";
    std::cout << std::left << std::setw(12) << label << std::setw(28)
              << support_to_string(row.report.support) << std::setw(17)
              << format_value(row.report.lambda_used)
              << format_value(row.report.sinr_db) << "\n";
  }
  std::cout << "optimal_sinr_db = "
            << format_value(optimal_sinr(input.scenario)) << "\n";

  if (!args.out_path.empty()) {
    std::vector<std::pair<std::string, const SelectionReportXd*>> entries;
    entries.reserve(rows.size());
    for (const MethodRow& row : rows) {
      entries.emplace_back(to_string(row.method), &row.report);
    }
    write_report_csv(args.out_path, entries);
    std::cout << "wrote " << args.out_path << "\n";
  }
}

struct PatternArgs {
  std::string scenario;
  bool true_cov = false;
  std::string method = "admm";
  Index target = 4;
  double grid_min = -89.5;
  double grid_max = 89.5;
  double grid_step = 0.5;
  double lambda_lo = 0;
  double lambda_hi = 0;
  std::uint64_t random_seed = 1;
  std::size_t enum_cap = kDefaultEnumerationCap;
  int threads = 0;
  AdmmFlags admm;
  std::string out_path;
};

void run_pattern(const PatternArgs& args) {
  const ScenarioInput input = load_scenario_file(args.scenario);
  if (args.grid_step <= 0 || args.grid_min > args.grid_max) {
    throw ValidationError("pattern: bad angle grid");
  }
  const HermitianMatrixXd rx = covariance_for(input, args.true_cov);
  warn_rho(args.admm.rho, rx);
  const std::vector<MethodRow> rows = compare_methods(
      input, args.target, {method_from_string(args.method)}, args.true_cov,
      to_config(args.admm), args.lambda_lo, args.lambda_hi, args.random_seed,
      args.enum_cap, args.threads);
  const SelectionReportXd& report = rows.front().report;

  std::vector<double> angles;
  for (double a = args.grid_min; a <= args.grid_max + 1e-9 * args.grid_step;
       a += args.grid_step) {
    angles.push_back(a);
  }
  RealVectorXd grid(static_cast<Index>(angles.size()));
  for (std::size_t i = 0; i < angles.size(); ++i) {
    grid(static_cast<Index>(i)) = angles[i];
  }
  const RealVectorXd gains =
      beampattern(report.weight, grid, input.scenario.sensor_count);

  CsvWriter csv(args.out_path);
  csv.row({"angle_deg", "gain_db"});
  for (Index i = 0; i < grid.size(); ++i) {
    csv.row({format_value(grid(i)), format_value(gains(i))});
  }
  std::cout << "support = " << support_to_string(report.support) << "\n"
            << "sinr_db = " << format_value(report.sinr_db) << "\n"
            << "wrote " << args.out_path << "\n";
}

struct SweepArgs {
  std::string experiment;
  std::string out_dir;
  int threads = 0;
};

void run_sweep(const SweepArgs& args, bool threads_given, bool out_dir_given) {
  ExperimentSpec spec = load_experiment_file(args.experiment);
  if (threads_given) spec.threads = args.threads;
  std::filesystem::path dir = spec.out_dir;
  if (out_dir_given) dir = args.out_dir;
  if (dir.empty()) {
    throw ValidationError(
        "sweep: no output directory (pass --out-dir or set out_dir)");
  }
  const ExperimentOutput output = run_experiment(spec, dir);
  for (const auto& file : output.files) {
    std::cout << "wrote " << file.string() << "\n";
  }
}

void add_scenario_option(CLI::App* cmd, std::string& path, bool& true_cov) {
  cmd->add_option("--scenario", path, "scenario key-value file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_flag("--true-cov", true_cov,
                "use the model covariance instead of sampled snapshots");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-array adaptive beamformer design and benchmarking"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand(
      "solve", "run one penalized solve and report convergence diagnostics");
  add_scenario_option(solve_cmd, solve_args.scenario, solve_args.true_cov);
  add_admm_flags(solve_cmd, solve_args.admm);
  solve_cmd->add_option("--trace", solve_args.trace_path,
                        "write per-iteration trace CSV here");
  solve_cmd->add_option("--weights", solve_args.weights_path,
                        "write the final weight vector CSV here");
  solve_cmd->callback([&] { run_solve(solve_args); });

  SelectArgs select_args;
  auto* select_cmd = app.add_subcommand(
      "select", "tune the penalty to activate exactly L sensors");
  add_scenario_option(select_cmd, select_args.scenario, select_args.true_cov);
  select_cmd->add_option("--l", select_args.target, "sensors to select")
      ->required();
  select_cmd->add_option("--lambda-lo", select_args.lambda_lo,
                         "search interval lower end; 0 uses 1e-4*rho");
  select_cmd->add_option("--lambda-hi", select_args.lambda_hi,
                         "search interval upper end; 0 uses 10*rho");
  select_cmd
      ->add_option("--search-iters", select_args.search_iters,
                   "bisection iteration cap")
      ->capture_default_str();
  add_admm_flags(select_cmd, select_args.admm);
  select_cmd->add_option("--out", select_args.out_path,
                         "write the selection report CSV here");
  select_cmd->callback([&] { run_select(select_args); });

  EnumerateArgs enum_args;
  auto* enum_cmd = app.add_subcommand(
      "enumerate", "evaluate every L-of-M support exhaustively");
  add_scenario_option(enum_cmd, enum_args.scenario, enum_args.true_cov);
  enum_cmd->add_option("--l", enum_args.target, "sensors to select")
      ->required();
  enum_cmd->add_option("--cap", enum_args.cap, "candidate count limit")
      ->capture_default_str();
  enum_cmd->add_option("--threads", enum_args.threads,
                       "worker threads; 0 uses all logical cores")
      ->capture_default_str();
  enum_cmd->add_option("--out", enum_args.out_path,
                       "write best/worst report CSV here");
  enum_cmd->callback([&] { run_enumerate(enum_args); });

  CompareArgs compare_args;
  auto* compare_cmd = app.add_subcommand(
      "compare", "rank selection methods on a common training covariance");
  add_scenario_option(compare_cmd, compare_args.scenario,
                      compare_args.true_cov);
  compare_cmd->add_option("--l", compare_args.target, "sensors to select")
      ->capture_default_str();
  compare_cmd
      ->add_option("--methods", compare_args.methods, "comma-separated methods")
      ->capture_default_str();
  compare_cmd->add_option("--lambda-lo", compare_args.lambda_lo,
                          "search interval lower end; 0 uses 1e-4*rho");
  compare_cmd->add_option("--lambda-hi", compare_args.lambda_hi,
                          "search interval upper end; 0 uses 10*rho");
  compare_cmd
      ->add_option("--random-seed", compare_args.random_seed,
                   "seed for the random geometry")
      ->capture_default_str();
  compare_cmd->add_option("--enum-cap", compare_args.enum_cap,
                          "enumeration candidate limit")
      ->capture_default_str();
  compare_cmd->add_option("--threads", compare_args.threads,
                          "worker threads; 0 uses all logical cores")
      ->capture_default_str();
  add_admm_flags(compare_cmd, compare_args.admm);
  compare_cmd->add_option("--out", compare_args.out_path,
                          "write the ranked report CSV here");
  compare_cmd->callback([&] { run_compare(compare_args); });

  PatternArgs pattern_args;
  auto* pattern_cmd = app.add_subcommand(
      "pattern", "export the beampattern of one selection method");
  add_scenario_option(pattern_cmd, pattern_args.scenario,
                      pattern_args.true_cov);
  pattern_cmd->add_option("--method", pattern_args.method, "selection method")
      ->capture_default_str();
  pattern_cmd->add_option("--l", pattern_args.target, "sensors to select")
      ->capture_default_str();
  pattern_cmd->add_option("--grid-min", pattern_args.grid_min, "first angle")
      ->capture_default_str();
  pattern_cmd->add_option("--grid-max", pattern_args.grid_max, "last angle")
      ->capture_default_str();
  pattern_cmd->add_option("--grid-step", pattern_args.grid_step, "angle step")
      ->capture_default_str();
  pattern_cmd->add_option("--lambda-lo", pattern_args.lambda_lo,
                          "search interval lower end; 0 uses 1e-4*rho");
  pattern_cmd->add_option("--lambda-hi", pattern_args.lambda_hi,
                          "search interval upper end; 0 uses 10*rho");
  pattern_cmd
      ->add_option("--random-seed", pattern_args.random_seed,
                   "seed for the random geometry")
      ->capture_default_str();
  pattern_cmd->add_option("--enum-cap", pattern_args.enum_cap,
                          "enumeration candidate limit")
      ->capture_default_str();
  pattern_cmd->add_option("--threads", pattern_args.threads,
                          "worker threads; 0 uses all logical cores")
      ->capture_default_str();
  add_admm_flags(pattern_cmd, pattern_args.admm);
  pattern_cmd->add_option("--out", pattern_args.out_path, "beampattern CSV path")
      ->required();
  pattern_cmd->callback([&] { run_pattern(pattern_args); });

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "run an experiment file and write its CSVs plus a manifest");
  sweep_cmd->add_option("--experiment", sweep_args.experiment,
                        "experiment key-value file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* out_dir_opt =
      sweep_cmd->add_option("--out-dir", sweep_args.out_dir, "output directory");
  auto* threads_opt =
      sweep_cmd->add_option("--threads", sweep_args.threads,
                            "worker threads; 0 uses all logical cores");
  sweep_cmd->callback([&] {
    run_sweep(sweep_args, threads_opt->count() > 0, out_dir_opt->count() > 0);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
