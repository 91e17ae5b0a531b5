#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <thread>
#include <utility>
#include <vector>

#include "sparsebeam/admm.hpp"
#include "sparsebeam/beamformer.hpp"
#include "sparsebeam/errors.hpp"
#include "sparsebeam/numerics.hpp"
#include "sparsebeam/rng.hpp"
#include "sparsebeam/signal_model.hpp"
#include "sparsebeam/types.hpp"

namespace sparsebeam {

inline constexpr double kDefaultActiveFraction = 0.1;
inline constexpr int kDefaultSearchIters = 40;
inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

struct ActiveCount {
  Index count = 0;
  bool all_zero = false;
};

// Number of entries whose modulus exceeds `fraction` times the largest one.
template <typename Scalar>
ActiveCount count_active(const ComplexVector<Scalar>& weight,
                         Scalar fraction = Scalar(kDefaultActiveFraction)) {
  if (weight.size() == 0) {
    throw ValidationError("count_active: empty weight vector");
  }
  if (!(fraction > Scalar(0)) || !(fraction < Scalar(1))) {
    throw ValidationError("count_active: fraction must lie in (0, 1)");
  }
  const Scalar top = weight.cwiseAbs().maxCoeff();
  if (top == Scalar(0)) return {0, true};
  const Scalar level = fraction * top;
  Index n = 0;
  for (Index i = 0; i < weight.size(); ++i) {
    if (std::abs(weight(i)) > level) ++n;
  }
  return {n, false};
}

// Indices of the `count` largest-modulus entries, ascending. Ties go to the
// lower index.
template <typename Scalar>
std::vector<Index> select_support(const ComplexVector<Scalar>& weight,
                                  Index count) {
  if (count < 1 || count > weight.size()) {
    throw ValidationError("select_support: count out of range");
  }
  std::vector<Index> order(static_cast<std::size_t>(weight.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(weight(a)) > std::abs(weight(b));
  });
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

template <typename Scalar>
struct SelectionReport {
  std::vector<Index> support;
  Scalar lambda_used = std::numeric_limits<Scalar>::quiet_NaN();
  int search_iters = 0;
  BeamformerWeight<Scalar> weight;  // reduced-MVDR weight on the support
  Scalar sinr_db = std::numeric_limits<Scalar>::quiet_NaN();
  bool fallback = false;
  std::vector<std::pair<Scalar, Index>> search_history;  // (lambda, active)
};

using SelectionReportXd = SelectionReport<double>;

namespace detail {

template <typename Scalar>
SelectionReport<Scalar> finish_report(SelectionReport<Scalar> report,
                                      const Scenario<Scalar>& s,
                                      const HermitianMatrix<Scalar>& data_cov) {
  report.weight = reduced_mvdr(report.support, s, data_cov);
  report.sinr_db = output_sinr(report.weight, s);
  return report;
}

}  // namespace detail

// Bisection on log(lambda) until the solved weight has exactly `target`
// active entries. If the search exhausts its budget, the weight whose active
// count came closest is used instead and the report is flagged as a
// fallback. Either way the returned support has exactly `target` sensors and
// the reported SINR comes from the reduced MVDR weight on that support.
template <typename Scalar>
SelectionReport<Scalar> tune_lambda(Index target, Scalar lambda_lo,
                                    Scalar lambda_hi,
                                    const AdmmConfig<Scalar>& cfg,
                                    const HermitianMatrix<Scalar>& data_cov,
                                    const ComplexVector<Scalar>& steering,
                                    const Scenario<Scalar>& s,
                                    Scalar fraction = Scalar(kDefaultActiveFraction),
                                    int max_search_iters = kDefaultSearchIters) {
  if (target < 1 || target > data_cov.rows()) {
    throw ValidationError("tune_lambda: target out of range");
  }
  if (!(lambda_lo > Scalar(0)) || !(lambda_hi > lambda_lo)) {
    throw ValidationError("tune_lambda: bad lambda interval");
  }
  if (max_search_iters < 1) {
    throw ValidationError("tune_lambda: max_search_iters must be >= 1");
  }
  const AdmmSolver<Scalar> solver(data_cov, steering, cfg.rho);

  SelectionReport<Scalar> report;
  ComplexVector<Scalar> best_weight;
  Index best_gap = std::numeric_limits<Index>::max();
  Scalar best_lambda = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar lo = lambda_lo, hi = lambda_hi;
  bool hit = false;
  for (int iter = 1; iter <= max_search_iters; ++iter) {
    const Scalar lambda = std::sqrt(lo * hi);
    AdmmConfig<Scalar> trial = cfg;
    trial.lambda = lambda;
    trial.rho = solver.rho_used();
    const AdmmResult<Scalar> solved = solver.solve(trial);
    const Index active = count_active(solved.state.weight, fraction).count;
    report.search_history.emplace_back(lambda, active);
    report.search_iters = iter;
    if (!solved.collapsed) {
      const Index gap = std::abs(active - target);
      if (gap < best_gap) {
        best_gap = gap;
        best_weight = solved.state.weight;
        best_lambda = lambda;
      }
    } else if (best_weight.size() == 0) {
      best_weight = solved.state.weight;  // placeholder until a real probe
      best_lambda = lambda;
    }
    if (active == target && !solved.collapsed) {
      hit = true;
      break;
    }
    if (solved.collapsed) {
      // Every entry was annihilated before projection: the penalty is far
      // too large, whatever the projected weight's active count says.
      hi = lambda;
    } else if (active > target) {
      lo = lambda;  // need more shrinkage
    } else {
      hi = lambda;
    }
  }
  report.fallback = !hit;
  report.lambda_used = best_lambda;
  report.support = select_support<Scalar>(best_weight, target);
  return detail::finish_report(std::move(report), s, data_cov);
}

template <typename Scalar>
struct EnumerationResult {
  SelectionReport<Scalar> best;
  SelectionReport<Scalar> worst;
  std::size_t evaluated = 0;
};

namespace detail {

inline std::size_t binomial_capped(Index n, Index k, std::size_t cap) {
  long double c = 1.0L;
  for (Index i = 0; i < k; ++i) {
    c *= static_cast<long double>(n - i) / static_cast<long double>(i + 1);
    if (c > 4.0L * static_cast<long double>(cap)) return cap + 1;
  }
  const long double rounded = std::floor(c + 0.5L);
  return rounded > static_cast<long double>(cap)
             ? cap + 1
             : static_cast<std::size_t>(rounded);
}

inline bool next_combination(std::vector<Index>& idx, Index n) {
  const Index k = static_cast<Index>(idx.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (idx[static_cast<std::size_t>(i)] < n - k + i) {
      ++idx[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < k; ++j) {
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      }
      return true;
    }
  }
  return false;
}

template <typename Scalar>
struct EnumerationExtreme {
  Scalar sinr = Scalar(0);
  std::vector<Index> support;
  std::size_t ordinal = 0;
  bool set = false;
};

}  // namespace detail

// Evaluates every size-`count` support by reduced MVDR and returns the best
// and worst. Supports are visited in lexicographic order and ties keep the
// earlier support, so results do not depend on the number of threads.
template <typename Scalar>
EnumerationResult<Scalar> enumerate_supports(
    const Scenario<Scalar>& s, const HermitianMatrix<Scalar>& data_cov,
    const ComplexVector<Scalar>& steering, Index count,
    std::size_t cap = kDefaultEnumerationCap, int threads = 1) {
  s.validate();
  const Index m = s.sensor_count;
  if (data_cov.rows() != m || steering.size() != m) {
    throw ValidationError("enumerate_supports: size mismatch");
  }
  if (count < 1 || count > m) {
    throw ValidationError("enumerate_supports: count out of range");
  }
  const std::size_t total = detail::binomial_capped(m, count, cap);
  if (total > cap) {
    throw ValidationError(
        "enumerate_supports: candidate count exceeds cap of " +
        std::to_string(cap));
  }

  const int workers = std::max(1, threads);
  std::vector<detail::EnumerationExtreme<Scalar>> bests(workers), worsts(workers);
  auto run = [&](int worker) {
    std::vector<Index> idx(static_cast<std::size_t>(count));
    std::iota(idx.begin(), idx.end(), Index(0));
    std::size_t ordinal = 0;
    auto& best = bests[static_cast<std::size_t>(worker)];
    auto& worst = worsts[static_cast<std::size_t>(worker)];
    do {
      if (ordinal % static_cast<std::size_t>(workers) ==
          static_cast<std::size_t>(worker)) {
        const BeamformerWeight<Scalar> w = reduced_mvdr(idx, s, data_cov);
        const Scalar sinr = output_sinr(w, s);
        if (!best.set || sinr > best.sinr) best = {sinr, idx, ordinal, true};
        if (!worst.set || sinr < worst.sinr) worst = {sinr, idx, ordinal, true};
      }
      ++ordinal;
    } while (detail::next_combination(idx, m));
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(run, t);
    for (auto& th : pool) th.join();
  }

  detail::EnumerationExtreme<Scalar> best, worst;
  for (const auto& c : bests) {
    if (!c.set) continue;
    if (!best.set || c.sinr > best.sinr ||
        (c.sinr == best.sinr && c.ordinal < best.ordinal)) {
      best = c;
    }
  }
  for (const auto& c : worsts) {
    if (!c.set) continue;
    if (!worst.set || c.sinr < worst.sinr ||
        (c.sinr == worst.sinr && c.ordinal < worst.ordinal)) {
      worst = c;
    }
  }

  EnumerationResult<Scalar> result;
  result.evaluated = total;
  result.best.support = best.support;
  result.best.search_iters = static_cast<int>(total);
  result.worst.support = worst.support;
  result.worst.search_iters = static_cast<int>(total);
  result.best = detail::finish_report(std::move(result.best), s, data_cov);
  result.worst = detail::finish_report(std::move(result.worst), s, data_cov);
  return result;
}

enum class ArrayGeometry { CompactUla, SparseUla, Nested, Coprime, Random };

// Deterministic sensor placements for the reference geometries, as indices
// into an aperture of `sensor_count` elements. `Random` draws a uniform
// subset from the seed; the rest ignore it.
inline std::vector<Index> fixed_geometry(ArrayGeometry kind, Index sensor_count,
                                         Index count, std::uint64_t seed = 0) {
  if (count < 1 || count > sensor_count) {
    throw ValidationError("fixed_geometry: count out of range");
  }
  std::vector<Index> out;
  switch (kind) {
    case ArrayGeometry::CompactUla: {
      out.resize(static_cast<std::size_t>(count));
      std::iota(out.begin(), out.end(), Index(0));
      break;
    }
    case ArrayGeometry::SparseUla: {
      if (2 * (count - 1) > sensor_count - 1) {
        throw ValidationError("fixed_geometry: sparse ULA does not fit");
      }
      for (Index i = 0; i < count; ++i) out.push_back(2 * i);
      break;
    }
    case ArrayGeometry::Nested: {
      // Two-level nested layout: a dense front section of n1 sensors
      // followed by n2 sensors at pitch n1 + 1.
      const Index n1 = count / 2;
      const Index n2 = count - n1;
      if (n2 * (n1 + 1) - 1 > sensor_count - 1) {
        throw ValidationError("fixed_geometry: nested layout does not fit");
      }
      for (Index i = 0; i < n1; ++i) out.push_back(i);
      for (Index k = 1; k <= n2; ++k) out.push_back(k * (n1 + 1) - 1);
      break;
    }
    case ArrayGeometry::Coprime: {
      // Interleaved multiples of a coprime pair (p, q): p + q - 1 distinct
      // positions, the largest at (q - 1) p.
      bool found = false;
      for (Index p = 2; p < count && !found; ++p) {
        const Index q = count + 1 - p;
        if (q <= p || std::gcd(static_cast<long long>(p),
                               static_cast<long long>(q)) != 1) {
          continue;
        }
        if ((q - 1) * p > sensor_count - 1) continue;
        for (Index i = 0; i < q; ++i) out.push_back(i * p);
        for (Index i = 1; i < p; ++i) out.push_back(i * q);
        found = true;
      }
      if (!found) {
        throw ValidationError("fixed_geometry: no coprime pair fits");
      }
      std::sort(out.begin(), out.end());
      break;
    }
    case ArrayGeometry::Random: {
      std::vector<Index> pool(static_cast<std::size_t>(sensor_count));
      std::iota(pool.begin(), pool.end(), Index(0));
      SplitMix64 rng(seed);
      for (Index i = 0; i < count; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) +
                              static_cast<std::size_t>(rng.next() %
                                                       static_cast<std::uint64_t>(
                                                           sensor_count - i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      }
      out.assign(pool.begin(), pool.begin() + count);
      std::sort(out.begin(), out.end());
      break;
    }
  }
  return out;
}

}  // namespace sparsebeam
