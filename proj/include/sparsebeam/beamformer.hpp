#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "sparsebeam/errors.hpp"
#include "sparsebeam/numerics.hpp"
#include "sparsebeam/signal_model.hpp"
#include "sparsebeam/types.hpp"

namespace sparsebeam {

// Floor applied to beampattern gains so exact nulls stay finite in dB.
inline constexpr double kPatternFloorDb = -300.0;

template <typename Scalar>
struct BeamformerWeight {
  ComplexVector<Scalar> weights;
  // Indices into the full array this weight vector applies to; empty means
  // the weights cover the whole array.
  std::optional<std::vector<Index>> support;
};

using BeamformerWeightXd = BeamformerWeight<double>;

inline void validate_support(const std::vector<Index>& support,
                             Index sensor_count) {
  if (support.empty()) {
    throw ValidationError("support must be non-empty");
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] < 0 || support[i] >= sensor_count) {
      throw ValidationError("support index out of range");
    }
    if (i > 0 && support[i] <= support[i - 1]) {
      throw ValidationError("support must be strictly ascending");
    }
  }
}

// Minimum-variance distortionless-response weights R^{-1} a0, normalized so
// that w^H a0 = 1.
template <typename Scalar>
BeamformerWeight<Scalar> mvdr_weights(const HermitianMatrix<Scalar>& r,
                                      const ComplexVector<Scalar>& a0) {
  if (r.rows() != a0.size()) {
    throw ValidationError("mvdr_weights: dimension mismatch");
  }
  const ComplexVector<Scalar> ra = solve_hpd(r, a0);
  const std::complex<Scalar> denom = a0.dot(ra);  // a0^H R^{-1} a0, real > 0
  return {ra / denom, std::nullopt};
}

namespace detail {

template <typename Scalar>
ComplexVector<Scalar> subset(const ComplexVector<Scalar>& v,
                             const std::vector<Index>& idx) {
  ComplexVector<Scalar> out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

template <typename Scalar>
ComplexMatrix<Scalar> submatrix(const ComplexMatrix<Scalar>& m,
                                const std::vector<Index>& idx) {
  const Index n = static_cast<Index>(idx.size());
  ComplexMatrix<Scalar> out(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

}  // namespace detail

// Output SINR in dB against the scenario's true interference-plus-noise
// covariance. If the weight carries a support, the steering vector and the
// covariance are restricted to it, so training on sample data never changes
// what is being measured.
template <typename Scalar>
Scalar output_sinr(const BeamformerWeight<Scalar>& w,
                   const Scenario<Scalar>& s) {
  s.validate();
  const Index m = s.sensor_count;
  ComplexVector<Scalar> a0 = steering_vector(s.soi_doa_deg, m);
  ComplexMatrix<Scalar> rin = interference_noise_covariance(s).matrix();
  if (w.support) {
    validate_support(*w.support, m);
    if (w.weights.size() != static_cast<Index>(w.support->size())) {
      throw ValidationError("output_sinr: weight size does not match support");
    }
    a0 = detail::subset(a0, *w.support);
    rin = detail::submatrix(rin, *w.support);
  } else if (w.weights.size() != m) {
    throw ValidationError("output_sinr: weight size does not match array");
  }
  if (w.weights.norm() == Scalar(0)) {
    throw ValidationError("output_sinr: all-zero weights");
  }
  const Scalar signal =
      s.soi_power * std::norm(w.weights.dot(a0));
  const Scalar denom = (w.weights.dot(rin * w.weights)).real();
  return Scalar(10) * std::log10(signal / denom);
}

// Best attainable output SINR of the full array, in dB.
template <typename Scalar>
Scalar optimal_sinr(const Scenario<Scalar>& s) {
  s.validate();
  const ComplexVector<Scalar> a0 =
      steering_vector(s.soi_doa_deg, s.sensor_count);
  const HermitianMatrix<Scalar> rin = interference_noise_covariance(s);
  const Scalar quad = (a0.dot(solve_hpd(rin, a0))).real();
  return Scalar(10) * std::log10(s.soi_power * quad);
}

// Power pattern 20 log10 |w^H a(θ)| over a grid of angles, normalized so the
// peak sits at 0 dB. Subarray weights are embedded into the full aperture by
// their support before evaluation.
template <typename Scalar>
RealVector<Scalar> beampattern(const BeamformerWeight<Scalar>& w,
                               const RealVector<Scalar>& grid_deg,
                               Index sensor_count) {
  if (grid_deg.size() == 0) {
    throw ValidationError("beampattern: empty angle grid");
  }
  ComplexVector<Scalar> full = ComplexVector<Scalar>::Zero(sensor_count);
  if (w.support) {
    validate_support(*w.support, sensor_count);
    if (w.weights.size() != static_cast<Index>(w.support->size())) {
      throw ValidationError("beampattern: weight size does not match support");
    }
    for (std::size_t i = 0; i < w.support->size(); ++i) {
      full((*w.support)[i]) = w.weights(static_cast<Index>(i));
    }
  } else {
    if (w.weights.size() != sensor_count) {
      throw ValidationError("beampattern: weight size does not match array");
    }
    full = w.weights;
  }
  if (full.norm() == Scalar(0)) {
    throw ValidationError("beampattern: all-zero weights");
  }
  RealVector<Scalar> gain(grid_deg.size());
  for (Index i = 0; i < grid_deg.size(); ++i) {
    const ComplexVector<Scalar> a = steering_vector(grid_deg(i), sensor_count);
    const Scalar mag = std::abs(full.dot(a));
    gain(i) = mag > Scalar(0)
                  ? Scalar(20) * std::log10(mag)
                  : Scalar(kPatternFloorDb);
  }
  const Scalar peak = gain.maxCoeff();
  gain.array() -= peak;
  for (Index i = 0; i < gain.size(); ++i) {
    gain(i) = std::max(gain(i), Scalar(kPatternFloorDb));
  }
  return gain;
}

// MVDR on the subarray picked out by `support`, trained on the restriction
// of `r` (true or sample covariance of the full array).
template <typename Scalar>
BeamformerWeight<Scalar> reduced_mvdr(const std::vector<Index>& support,
                                      const Scenario<Scalar>& s,
                                      const HermitianMatrix<Scalar>& r) {
  s.validate();
  validate_support(support, s.sensor_count);
  if (r.rows() != s.sensor_count) {
    throw ValidationError("reduced_mvdr: covariance size does not match array");
  }
  const ComplexVector<Scalar> a0 =
      detail::subset(steering_vector(s.soi_doa_deg, s.sensor_count), support);
  HermitianMatrix<Scalar> rs(detail::submatrix(r.matrix(), support));
  BeamformerWeight<Scalar> w = mvdr_weights(rs, a0);
  w.support = support;
  return w;
}

}  // namespace sparsebeam
