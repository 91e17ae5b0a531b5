#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "sparsebeam/errors.hpp"
#include "sparsebeam/numerics.hpp"
#include "sparsebeam/rng.hpp"
#include "sparsebeam/types.hpp"

namespace sparsebeam {

template <typename Scalar>
struct Interferer {
  Scalar doa_deg;
  Scalar power;  // linear
};

// Narrowband point sources impinging on a half-wavelength ULA, plus white
// noise. Powers are linear; the CLI layer converts from dB with unit noise.
template <typename Scalar>
struct Scenario {
  Index sensor_count = 0;
  Scalar soi_doa_deg = Scalar(0);
  Scalar soi_power = Scalar(1);
  std::vector<Interferer<Scalar>> interferers;
  Scalar noise_power = Scalar(1);

  void validate() const {
    if (sensor_count < 1) {
      throw ValidationError("Scenario: sensor_count must be >= 1");
    }
    if (!(soi_power > Scalar(0)) || !(noise_power > Scalar(0))) {
      throw ValidationError("Scenario: powers must be > 0");
    }
    auto in_range = [](Scalar deg) {
      return deg > Scalar(-90) && deg < Scalar(90);
    };
    if (!in_range(soi_doa_deg)) {
      throw ValidationError("Scenario: soi_doa_deg must lie in (-90, 90)");
    }
    for (const auto& itf : interferers) {
      if (!(itf.power > Scalar(0))) {
        throw ValidationError("Scenario: interferer power must be > 0");
      }
      if (!in_range(itf.doa_deg)) {
        throw ValidationError("Scenario: interferer DOA must lie in (-90, 90)");
      }
    }
  }
};

using ScenarioXd = Scenario<double>;

// Steering vector of a half-wavelength ULA: entry m is exp(-j pi m sin θ).
template <typename Scalar>
ComplexVector<Scalar> steering_vector(Scalar doa_deg, Index sensor_count) {
  if (sensor_count < 1) {
    throw ValidationError("steering_vector: sensor_count must be >= 1");
  }
  if (!(doa_deg > Scalar(-90) && doa_deg < Scalar(90))) {
    throw ValidationError("steering_vector: DOA must lie in (-90, 90)");
  }
  const Scalar phase_step =
      -std::numbers::pi_v<Scalar> * std::sin(doa_deg * std::numbers::pi_v<Scalar> / Scalar(180));
  ComplexVector<Scalar> a(sensor_count);
  for (Index m = 0; m < sensor_count; ++m) {
    a(m) = std::polar(Scalar(1), phase_step * Scalar(m));
  }
  return a;
}

// Interference-plus-noise covariance: sum of rank-one interferer terms plus
// white noise on the diagonal.
template <typename Scalar>
HermitianMatrix<Scalar> interference_noise_covariance(
    const Scenario<Scalar>& s) {
  s.validate();
  const Index m = s.sensor_count;
  ComplexMatrix<Scalar> r =
      s.noise_power * ComplexMatrix<Scalar>::Identity(m, m);
  for (const auto& itf : s.interferers) {
    const ComplexVector<Scalar> a = steering_vector(itf.doa_deg, m);
    r += itf.power * (a * a.adjoint());
  }
  return HermitianMatrix<Scalar>(std::move(r));
}

// Data covariance with the signal of interest included.
template <typename Scalar>
HermitianMatrix<Scalar> data_covariance_true(const Scenario<Scalar>& s) {
  const ComplexVector<Scalar> a0 =
      steering_vector(s.soi_doa_deg, s.sensor_count);
  ComplexMatrix<Scalar> r = interference_noise_covariance(s).matrix();
  r += s.soi_power * (a0 * a0.adjoint());
  return HermitianMatrix<Scalar>(std::move(r));
}

template <typename Scalar>
struct SnapshotMatrix {
  ComplexMatrix<Scalar> data;  // sensors x snapshots
  std::uint64_t seed = 0;
};

// Draws snapshots x_t = a0 s0 + sum_k a_k s_k + n with every waveform and
// noise sample circular complex Gaussian. Deterministic in the seed.
template <typename Scalar>
SnapshotMatrix<Scalar> generate_snapshots(const Scenario<Scalar>& s,
                                          Index snapshots,
                                          std::uint64_t seed) {
  s.validate();
  if (snapshots < 1) {
    throw ValidationError("generate_snapshots: snapshots must be >= 1");
  }
  const Index m = s.sensor_count;
  std::vector<ComplexVector<Scalar>> steering;
  steering.push_back(steering_vector(s.soi_doa_deg, m));
  for (const auto& itf : s.interferers) {
    steering.push_back(steering_vector(itf.doa_deg, m));
  }
  std::vector<Scalar> amplitude;
  amplitude.push_back(std::sqrt(s.soi_power));
  for (const auto& itf : s.interferers) {
    amplitude.push_back(std::sqrt(itf.power));
  }
  const Scalar noise_amp = std::sqrt(s.noise_power);

  SplitMix64 rng(seed);
  SnapshotMatrix<Scalar> out;
  out.seed = seed;
  out.data.resize(m, snapshots);
  for (Index t = 0; t < snapshots; ++t) {
    ComplexVector<Scalar> x = ComplexVector<Scalar>::Zero(m);
    for (std::size_t k = 0; k < steering.size(); ++k) {
      const std::complex<double> wf = rng.next_complex_normal();
      x += (amplitude[k] * std::complex<Scalar>(Scalar(wf.real()),
                                                Scalar(wf.imag()))) *
           steering[k];
    }
    for (Index i = 0; i < m; ++i) {
      const std::complex<double> n = rng.next_complex_normal();
      x(i) += noise_amp *
              std::complex<Scalar>(Scalar(n.real()), Scalar(n.imag()));
    }
    out.data.col(t) = x;
  }
  return out;
}

// Sample covariance (1/T) X X^H.
template <typename Scalar>
HermitianMatrix<Scalar> sample_covariance(const SnapshotMatrix<Scalar>& x) {
  if (x.data.cols() < 1) {
    throw ValidationError("sample_covariance: need at least one snapshot");
  }
  ComplexMatrix<Scalar> r =
      (x.data * x.data.adjoint()) / Scalar(x.data.cols());
  return HermitianMatrix<Scalar>(std::move(r));
}

}  // namespace sparsebeam
