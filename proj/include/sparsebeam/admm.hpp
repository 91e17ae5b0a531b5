#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "sparsebeam/errors.hpp"
#include "sparsebeam/numerics.hpp"
#include "sparsebeam/rng.hpp"
#include "sparsebeam/types.hpp"

namespace sparsebeam {

enum class PenaltyVariant { PlainL1, Reweighted };

enum class Termination { ResidualMet, IterationCap };

template <typename Scalar>
struct AdmmConfig {
  Scalar lambda = Scalar(1);        // sparsity penalty weight
  Scalar rho = Scalar(0);           // augmented penalty; 0 picks the safe bound
  Scalar epsilon = Scalar(1e-10);   // reweighting stabilizer
  Scalar eta = Scalar(1e-12);       // stop when |w - v| falls below this
  int max_iterations = 1000;
  PenaltyVariant variant = PenaltyVariant::PlainL1;
  std::uint64_t init_seed = 0;
  Scalar feasibility_tol = Scalar(1e-9);
  Scalar kkt_tol = Scalar(1e-6);
  bool record_iterates = false;

  void validate() const {
    if (!(lambda > Scalar(0))) throw ValidationError("AdmmConfig: lambda must be > 0");
    if (rho < Scalar(0)) throw ValidationError("AdmmConfig: rho must be >= 0");
    if (!(epsilon > Scalar(0))) throw ValidationError("AdmmConfig: epsilon must be > 0");
    if (!(eta > Scalar(0))) throw ValidationError("AdmmConfig: eta must be > 0");
    if (max_iterations < 1) throw ValidationError("AdmmConfig: max_iterations must be >= 1");
    if (!(feasibility_tol > Scalar(0)) || !(kkt_tol > Scalar(0))) {
      throw ValidationError("AdmmConfig: tolerances must be > 0");
    }
  }
};

template <typename Scalar>
struct AdmmState {
  ComplexVector<Scalar> weight;      // sparse, constraint-feasible iterate
  ComplexVector<Scalar> auxiliary;   // quadratic-step copy of the weight
  ComplexVector<Scalar> dual;        // scaled dual of the splitting constraint
  int iteration = 0;
};

template <typename Scalar>
struct KktReport {
  Scalar stationarity_residual = Scalar(0);  // |2 R v - rho u|
  Scalar primal_residual = Scalar(0);        // |w - v|
  Scalar feasibility_gap = Scalar(0);        // (1 - |w^H a0|^2)_+
};

template <typename Scalar>
struct AdmmResult {
  AdmmState<Scalar> state;
  std::vector<Scalar> lagrangian_trace;
  std::vector<Scalar> residual_trace;
  std::vector<Scalar> feasibility_trace;
  Termination termination = Termination::IterationCap;
  KktReport<Scalar> kkt;
  Scalar rho_used = Scalar(0);
  Scalar rho_bound = Scalar(0);
  bool rho_below_bound = false;
  // True when the last thresholding step zeroed every entry, so the final
  // weight is only the constraint projection of the origin. A collapsed
  // solve means the penalty overwhelmed the data term entirely.
  bool collapsed = false;
  std::vector<AdmmState<Scalar>> iterates;  // filled when record_iterates
};

// Complex soft threshold: shrinks each modulus by `threshold`, zeroing small
// entries and preserving phase.
template <typename Scalar>
ComplexVector<Scalar> soft_threshold(const ComplexVector<Scalar>& values,
                                     Scalar threshold) {
  if (threshold < Scalar(0)) {
    throw ValidationError("soft_threshold: threshold must be >= 0");
  }
  ComplexVector<Scalar> out(values.size());
  for (Index i = 0; i < values.size(); ++i) {
    const Scalar mag = std::abs(values(i));
    out(i) = mag > threshold ? values(i) * ((mag - threshold) / mag)
                             : std::complex<Scalar>(0);
  }
  return out;
}

// Soft threshold with per-entry level lambda / (rho (|g_i| + epsilon)), so
// entries that were large in the reference vector g are shrunk less.
template <typename Scalar>
ComplexVector<Scalar> reweighted_threshold(const ComplexVector<Scalar>& values,
                                           const ComplexVector<Scalar>& reference,
                                           Scalar lambda, Scalar rho,
                                           Scalar epsilon) {
  if (values.size() != reference.size()) {
    throw ValidationError("reweighted_threshold: size mismatch");
  }
  if (lambda < Scalar(0) || !(rho > Scalar(0)) || !(epsilon > Scalar(0))) {
    throw ValidationError("reweighted_threshold: bad parameters");
  }
  ComplexVector<Scalar> out(values.size());
  for (Index i = 0; i < values.size(); ++i) {
    const Scalar level = lambda / (rho * (std::abs(reference(i)) + epsilon));
    const Scalar mag = std::abs(values(i));
    out(i) = mag > level ? values(i) * ((mag - level) / mag)
                         : std::complex<Scalar>(0);
  }
  return out;
}

// Shortfall of the unit-response constraint: (1 - |w^H a0|^2)_+ .
template <typename Scalar>
Scalar feasibility_gap(const ComplexVector<Scalar>& weight,
                       const ComplexVector<Scalar>& steering) {
  const Scalar resp = std::norm(weight.dot(steering));
  return std::max(Scalar(0), Scalar(1) - resp);
}

// Closest point (in Euclidean norm) satisfying |w^H a0|^2 >= 1. Feasible
// inputs pass through; infeasible ones move along a0, landing exactly on the
// constraint boundary. The measure-zero case w^H a0 = 0 steps to the nearest
// boundary point w + a0 / |a0|^2.
template <typename Scalar>
ComplexVector<Scalar> project_constraint(const ComplexVector<Scalar>& weight,
                                         const ComplexVector<Scalar>& steering) {
  if (weight.size() != steering.size()) {
    throw ValidationError("project_constraint: size mismatch");
  }
  const Scalar a_norm2 = steering.squaredNorm();
  if (!(a_norm2 > Scalar(0))) {
    throw ValidationError("project_constraint: zero steering vector");
  }
  const std::complex<Scalar> response = weight.dot(steering);  // w^H a0
  const Scalar mag = std::abs(response);
  if (mag >= Scalar(1)) return weight;
  if (mag == Scalar(0)) return weight + steering / a_norm2;
  // Scaling the a0-component of w up to unit response; the scalar direction
  // is a0^H w = conj(response).
  const Scalar step = (Scalar(1) - mag) / (a_norm2 * mag);
  return weight + (step * std::conj(response)) * steering;
}

// Cached Cholesky factor of (2 R + rho I); applying it to (w + u) gives the
// minimizer of the quadratic term, v = rho (2R + rho I)^{-1} (w + u).
template <typename Scalar>
class AuxiliaryUpdate {
 public:
  AuxiliaryUpdate(const HermitianMatrix<Scalar>& data_cov, Scalar rho)
      : rho_(rho) {
    if (!(rho > Scalar(0))) {
      throw ValidationError("AuxiliaryUpdate: rho must be > 0");
    }
    ComplexMatrix<Scalar> shifted = Scalar(2) * data_cov.matrix();
    shifted.diagonal().array() += rho;
    llt_.compute(shifted);
    if (llt_.info() != Eigen::Success) {
      throw SingularMatrixError("AuxiliaryUpdate: factorization failed");
    }
  }

  ComplexVector<Scalar> operator()(const ComplexVector<Scalar>& weight_plus_dual) const {
    return llt_.solve(rho_ * weight_plus_dual);
  }

  Scalar rho() const { return rho_; }

 private:
  Scalar rho_;
  Eigen::LLT<ComplexMatrix<Scalar>> llt_;
};

// One-call form of the auxiliary update, factorizing on the fly.
template <typename Scalar>
ComplexVector<Scalar> auxiliary_update(const ComplexVector<Scalar>& weight,
                                       const ComplexVector<Scalar>& dual,
                                       const HermitianMatrix<Scalar>& data_cov,
                                       Scalar rho) {
  if (weight.size() != dual.size() || weight.size() != data_cov.rows()) {
    throw ValidationError("auxiliary_update: size mismatch");
  }
  return AuxiliaryUpdate<Scalar>(data_cov, rho)(weight + dual);
}

// Augmented Lagrangian in scaled form,
//   penalty(w) + v^H R v + (rho/2) |w - v|^2 + rho Re<u, w - v>,
// equal to penalty + v^H R v + (rho/2)(|w - v + u|^2 - |u|^2) but without
// the large-minus-large cancellation of the latter near convergence.
template <typename Scalar>
Scalar augmented_lagrangian(const ComplexVector<Scalar>& weight,
                            const ComplexVector<Scalar>& auxiliary,
                            const ComplexVector<Scalar>& dual,
                            const HermitianMatrix<Scalar>& data_cov,
                            Scalar lambda, Scalar rho, PenaltyVariant variant,
                            const ComplexVector<Scalar>& reference,
                            Scalar epsilon) {
  const Index n = weight.size();
  if (auxiliary.size() != n || dual.size() != n || data_cov.rows() != n) {
    throw ValidationError("augmented_lagrangian: size mismatch");
  }
  Scalar penalty = Scalar(0);
  if (variant == PenaltyVariant::PlainL1) {
    penalty = lambda * weight.template lpNorm<1>();
  } else {
    if (reference.size() != n) {
      throw ValidationError("augmented_lagrangian: reference size mismatch");
    }
    for (Index i = 0; i < n; ++i) {
      penalty += lambda * std::abs(weight(i)) /
                 (std::abs(reference(i)) + epsilon);
    }
  }
  const Scalar quad = (auxiliary.dot(data_cov.matrix() * auxiliary)).real();
  const ComplexVector<Scalar> split = weight - auxiliary;
  return penalty + quad + (rho / Scalar(2)) * split.squaredNorm() +
         rho * (dual.dot(split)).real();
}

// Smallest penalty parameter for which both the descent and the
// nonnegativity arguments go through: max(2 sqrt(2) L, 2 L^2 / mu) with
// L, mu the extreme eigenvalues of the data covariance.
template <typename Scalar>
Scalar rho_lower_bound(const HermitianMatrix<Scalar>& data_cov) {
  const Scalar lo = data_cov.min_eigenvalue();
  const Scalar hi = data_cov.max_eigenvalue();
  if (!(hi > Scalar(0)) || lo <= Scalar(kPositiveDefiniteRelTol) * hi) {
    throw SingularMatrixError("rho_lower_bound: covariance is singular");
  }
  return std::max(Scalar(2) * std::numbers::sqrt2_v<Scalar> * hi,
                  Scalar(2) * hi * hi / lo);
}

template <typename Scalar>
KktReport<Scalar> kkt_residuals(const AdmmState<Scalar>& state,
                                const HermitianMatrix<Scalar>& data_cov,
                                Scalar rho,
                                const ComplexVector<Scalar>& steering) {
  KktReport<Scalar> report;
  report.stationarity_residual =
      (Scalar(2) * (data_cov.matrix() * state.auxiliary) - rho * state.dual)
          .norm();
  report.primal_residual = (state.weight - state.auxiliary).norm();
  report.feasibility_gap = feasibility_gap(state.weight, steering);
  return report;
}

// Splitting solver for the sparsity-penalized distortionless-response
// program: alternates a thresholding step, the projection onto the response
// constraint, the quadratic update, and the dual ascent, recording the
// Lagrangian, the primal residual, and the feasibility gap per iteration.
template <typename Scalar>
class AdmmSolver {
 public:
  AdmmSolver(HermitianMatrix<Scalar> data_cov, ComplexVector<Scalar> steering,
             Scalar rho_explicit = Scalar(0))
      : data_cov_(std::move(data_cov)), steering_(std::move(steering)) {
    if (data_cov_.rows() != steering_.size()) {
      throw ValidationError("AdmmSolver: size mismatch");
    }
    rho_bound_ = rho_lower_bound(data_cov_);
    rho_used_ = rho_explicit > Scalar(0) ? rho_explicit : rho_bound_;
  }

  Scalar rho_used() const { return rho_used_; }
  Scalar rho_bound() const { return rho_bound_; }

  AdmmResult<Scalar> solve(const AdmmConfig<Scalar>& cfg) const {
    cfg.validate();
    if (cfg.rho > Scalar(0) && cfg.rho != rho_used_) {
      throw ValidationError("AdmmSolver: config rho disagrees with solver rho");
    }
    const Index n = steering_.size();
    const AuxiliaryUpdate<Scalar> quadratic_step(data_cov_, rho_used_);

    AdmmResult<Scalar> result;
    result.rho_used = rho_used_;
    result.rho_bound = rho_bound_;
    result.rho_below_bound = rho_used_ < rho_bound_ * (Scalar(1) - Scalar(1e-12));

    SplitMix64 rng(cfg.init_seed);
    ComplexVector<Scalar> auxiliary(n);
    for (Index i = 0; i < n; ++i) {
      const std::complex<double> z = rng.next_complex_normal();
      auxiliary(i) = std::complex<Scalar>(Scalar(z.real()), Scalar(z.imag()));
    }
    ComplexVector<Scalar> dual = ComplexVector<Scalar>::Zero(n);
    ComplexVector<Scalar> weight(n);

    result.lagrangian_trace.reserve(cfg.max_iterations);
    result.residual_trace.reserve(cfg.max_iterations);
    result.feasibility_trace.reserve(cfg.max_iterations);

    int iterations = 0;
    result.termination = Termination::IterationCap;
    for (int k = 1; k <= cfg.max_iterations; ++k) {
      const ComplexVector<Scalar> shrunk =
          cfg.variant == PenaltyVariant::PlainL1
              ? soft_threshold<Scalar>(auxiliary - dual, cfg.lambda / rho_used_)
              : reweighted_threshold<Scalar>(auxiliary - dual, auxiliary,
                                             cfg.lambda, rho_used_, cfg.epsilon);
      result.collapsed = shrunk.squaredNorm() == Scalar(0);
      weight = project_constraint(shrunk, steering_);
      const ComplexVector<Scalar> reference = auxiliary;  // pre-update copy
      auxiliary = quadratic_step(weight + dual);
      dual += weight - auxiliary;

      const Scalar residual = (weight - auxiliary).norm();
      result.residual_trace.push_back(residual);
      result.feasibility_trace.push_back(feasibility_gap(weight, steering_));
      result.lagrangian_trace.push_back(augmented_lagrangian(
          weight, auxiliary, dual, data_cov_, cfg.lambda, rho_used_,
          cfg.variant, reference, cfg.epsilon));
      if (cfg.record_iterates) {
        result.iterates.push_back({weight, auxiliary, dual, k});
      }
      iterations = k;
      if (residual <= cfg.eta) {
        result.termination = Termination::ResidualMet;
        break;
      }
    }

    result.state = {std::move(weight), std::move(auxiliary), std::move(dual),
                    iterations};
    result.kkt = kkt_residuals(result.state, data_cov_, rho_used_, steering_);
    return result;
  }

 private:
  HermitianMatrix<Scalar> data_cov_;
  ComplexVector<Scalar> steering_;
  Scalar rho_used_ = Scalar(0);
  Scalar rho_bound_ = Scalar(0);
};

template <typename Scalar>
AdmmResult<Scalar> admm_solve(const AdmmConfig<Scalar>& cfg,
                              const HermitianMatrix<Scalar>& data_cov,
                              const ComplexVector<Scalar>& steering) {
  return AdmmSolver<Scalar>(data_cov, steering, cfg.rho).solve(cfg);
}

}  // namespace sparsebeam
