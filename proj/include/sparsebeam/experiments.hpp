#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sparsebeam/admm.hpp"
#include "sparsebeam/scenario_io.hpp"
#include "sparsebeam/selection.hpp"
#include "sparsebeam/types.hpp"

namespace sparsebeam {

enum class ExperimentKind {
  ConvergenceTrace,
  SparsityVsLambda,
  CpuTimeVsT,
  CpuTimeVsM,
  CpuTimeVsL,
  BeampatternCompare,
  SinrVsDoa,
  SinrVsSnr,
  SinrVsT,
  SinrVsM,
  SinrVsL,
};

enum class Method {
  Admm,
  BestEnum,
  WorstEnum,
  CompactUla,
  SparseUla,
  Nested,
  Coprime,
  Random,
  WholeUla,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(Method method);
Method method_from_string(const std::string& name);

// Everything needed to reproduce one experiment run. A spec can be read
// from an experiment file (which references a scenario file) or from a
// manifest (which carries the scenario inline); both produce identical runs.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::ConvergenceTrace;
  ScenarioInput input;
  std::vector<double> grid;       // swept values; empty picks the default
  std::vector<double> snr_list;   // extra SNR curves for the sparsity sweep
  int trials = 1;
  std::uint64_t master_seed = 1;
  std::vector<Method> methods;    // empty picks the default set for the kind
  Index target_count = 4;
  AdmmConfig<double> admm;
  double lambda_lo = 0;           // 0 resolves to 1e-4 * rho
  double lambda_hi = 0;           // 0 resolves to 10 * rho
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  bool use_true_cov = false;
  int threads = 0;                // 0 resolves to the logical core count
  std::filesystem::path out_dir;  // optional; not part of the manifest
};

// Worker count for a requested thread setting (0 = logical cores).
int resolve_threads(int threads);

ExperimentSpec experiment_from_keys(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::filesystem::path& base_dir);

ExperimentSpec load_experiment_file(const std::filesystem::path& path);

// Manifest rendering of a resolved spec; parseable by experiment_from_keys.
std::vector<std::pair<std::string, std::string>> experiment_to_keys(
    const ExperimentSpec& spec);

struct ExperimentOutput {
  std::vector<std::filesystem::path> files;  // CSVs first, manifest last
};

// Runs the experiment and writes its CSV(s) plus a manifest into
// output_dir. Deterministic in the spec for everything except measured
// CPU-time columns.
ExperimentOutput run_experiment(const ExperimentSpec& spec,
                                const std::filesystem::path& output_dir);

struct MethodRow {
  Method method;
  SelectionReport<double> report;
};

// Selects a subarray with every requested method on a common training
// covariance and reports reduced-MVDR SINRs, best first.
std::vector<MethodRow> compare_methods(
    const ScenarioInput& input, Index target,
    const std::vector<Method>& methods, bool use_true_cov,
    const AdmmConfig<double>& admm = {}, double lambda_lo = 0,
    double lambda_hi = 0, std::uint64_t random_seed = 1,
    std::size_t enumeration_cap = kDefaultEnumerationCap, int threads = 1);

// Default method set for a kind (the L sweep omits geometries that cannot
// realize every sparsity level on the aperture).
std::vector<Method> default_methods(ExperimentKind kind);

std::vector<double> default_grid(const ExperimentSpec& spec);

}  // namespace sparsebeam
