#include <cmath>
#include <complex>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "sparsebeam/admm.hpp"
#include "sparsebeam/errors.hpp"
#include "sparsebeam/signal_model.hpp"

namespace {

using namespace sparsebeam;

ScenarioXd solver_scenario() {
  ScenarioXd s;
  s.sensor_count = 6;
  s.soi_doa_deg = 0.0;
  s.soi_power = 10.0;
  s.interferers = {{-30.0, 100.0}, {20.0, 100.0}};
  s.noise_power = 1.0;
  return s;
}

ComplexVectorXd random_cvec(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  ComplexVectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = std::complex<double>(dist(gen), dist(gen));
  }
  return v;
}

ComplexMatrixXd random_hpd(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  ComplexMatrixXd g(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      g(r, c) = std::complex<double>(dist(gen), dist(gen));
    }
  }
  return ComplexMatrixXd(g * g.adjoint() +
                         0.5 * ComplexMatrixXd::Identity(n, n));
}

}  // namespace

TEST_SUITE("admm") {

TEST_CASE("soft threshold shrinks moduli and keeps phase") {
  ComplexVectorXd v(4);
  v << std::complex<double>(3.0, 4.0), std::complex<double>(-2.0, 0.0),
      std::complex<double>(0.3, -0.4), std::complex<double>(0.0, 0.0);
  const ComplexVectorXd out = soft_threshold(v, 1.0);
  CHECK(std::abs(out(0) - std::complex<double>(2.4, 3.2)) <= 1e-14);
  CHECK(std::abs(out(1) - std::complex<double>(-1.0, 0.0)) <= 1e-14);
  CHECK(out(2) == std::complex<double>(0.0, 0.0));
  CHECK(out(3) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("soft threshold edge cases") {
  ComplexVectorXd v(2);
  v << std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 2.0);
  const ComplexVectorXd same = soft_threshold(v, 0.0);
  CHECK((same - v).norm() == 0.0);
  // A modulus exactly at the threshold is zeroed (strict inequality).
  const ComplexVectorXd at = soft_threshold(v, 1.0);
  CHECK(at(0) == std::complex<double>(0.0, 0.0));
  CHECK_THROWS_AS(soft_threshold(v, -0.1), ValidationError);
}

TEST_CASE("reweighted threshold uses per-entry levels") {
  ComplexVectorXd v(2);
  v << std::complex<double>(3.0, 0.0), std::complex<double>(0.0, -2.0);
  ComplexVectorXd g(2);
  g << std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 3.0);
  // Levels are lambda / (rho (|g| + eps)) = 2/(|g|+1): 1.0 and 0.5.
  const ComplexVectorXd out = reweighted_threshold(v, g, 2.0, 1.0, 1.0);
  CHECK(std::abs(out(0) - std::complex<double>(2.0, 0.0)) <= 1e-14);
  CHECK(std::abs(out(1) - std::complex<double>(0.0, -1.5)) <= 1e-14);
}

TEST_CASE("reweighted threshold favors entries that were already large") {
  ComplexVectorXd v(2);
  v << std::complex<double>(1.0, 0.0), std::complex<double>(1.0, 0.0);
  ComplexVectorXd g(2);
  g << std::complex<double>(10.0, 0.0), std::complex<double>(0.01, 0.0);
  const ComplexVectorXd out = reweighted_threshold(v, g, 0.5, 1.0, 1e-10);
  CHECK(std::abs(out(0)) > std::abs(out(1)));
  CHECK(out(1) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("reweighted threshold input validation") {
  const ComplexVectorXd v = ComplexVectorXd::Ones(3);
  const ComplexVectorXd g = ComplexVectorXd::Ones(2);
  CHECK_THROWS_AS(reweighted_threshold(v, g, 1.0, 1.0, 1e-10), ValidationError);
  const ComplexVectorXd g3 = ComplexVectorXd::Ones(3);
  CHECK_THROWS_AS(reweighted_threshold(v, g3, -1.0, 1.0, 1e-10),
                  ValidationError);
  CHECK_THROWS_AS(reweighted_threshold(v, g3, 1.0, 0.0, 1e-10),
                  ValidationError);
  CHECK_THROWS_AS(reweighted_threshold(v, g3, 1.0, 1.0, 0.0), ValidationError);
}

TEST_CASE("feasibility gap") {
  const ComplexVectorXd a0 = steering_vector(0.0, 4);
  CHECK(feasibility_gap<double>(ComplexVectorXd(a0 / 4.0), a0) ==
        doctest::Approx(0.0));
  CHECK(feasibility_gap<double>(ComplexVectorXd::Zero(4), a0) == 1.0);
  CHECK(feasibility_gap<double>(ComplexVectorXd(a0 / 8.0), a0) ==
        doctest::Approx(0.75));
}

TEST_CASE("projection reaches the boundary along the steering direction") {
  ComplexVectorXd a0(2);
  a0 << std::complex<double>(1.0, 0.0), std::complex<double>(1.0, 0.0);
  ComplexVectorXd w(2);
  w << std::complex<double>(0.25, 0.0), std::complex<double>(0.25, 0.0);
  const ComplexVectorXd p = project_constraint(w, a0);
  CHECK(std::abs(p(0) - std::complex<double>(0.5, 0.0)) <= 1e-14);
  CHECK(std::abs(p(1) - std::complex<double>(0.5, 0.0)) <= 1e-14);
  CHECK(std::abs(p.dot(a0)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("projection passes feasible points through untouched") {
  const ComplexVectorXd a0 = steering_vector(12.0, 5);
  const ComplexVectorXd w = ComplexVectorXd(a0 / 2.0);  // response 2.5 > 1
  const ComplexVectorXd p = project_constraint(w, a0);
  CHECK((p - w).norm() == 0.0);
}

TEST_CASE("projection of the origin lands at the scaled steering vector") {
  const ComplexVectorXd a0 = steering_vector(-25.0, 6);
  const ComplexVectorXd p =
      project_constraint(ComplexVectorXd(ComplexVectorXd::Zero(6)), a0);
  CHECK((p - a0 / 6.0).norm() <= 1e-14);
  CHECK(std::abs(p.dot(a0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("projection matches a dense grid search") {
  const ComplexVectorXd a0 = steering_vector(10.0, 4);
  for (unsigned seed : {11u, 12u, 13u}) {
    const ComplexVectorXd w = 0.2 * random_cvec(4, seed);
    REQUIRE(std::abs(w.dot(a0)) < 1.0);
    const ComplexVectorXd closed = project_constraint(w, a0);
    const Eigen::VectorXcd grid = oracles::projection_grid_search(w, a0);
    const double d_closed = (closed - w).norm();
    const double d_grid = (grid - w).norm();
    CHECK(std::abs(closed.dot(a0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d_closed <= d_grid + 1e-5);
    CHECK(d_grid <= d_closed + 0.02 * (1.0 + d_closed));
  }
}

TEST_CASE("projection input validation") {
  const ComplexVectorXd a0 = steering_vector(0.0, 3);
  CHECK_THROWS_AS(project_constraint(ComplexVectorXd(ComplexVectorXd::Zero(2)), a0),
                  ValidationError);
  CHECK_THROWS_AS(
      project_constraint(ComplexVectorXd(ComplexVectorXd::Zero(3)),
                         ComplexVectorXd(ComplexVectorXd::Zero(3))),
      ValidationError);
}

TEST_CASE("rho lower bound follows the extreme eigenvalues") {
  const ComplexMatrixXd a = random_hpd(4, 21);
  const double bound = rho_lower_bound(HermitianMatrixXd(a));
  const std::vector<double> eig = oracles::hermitian_eigenvalues(a);
  const double lo = eig.front();
  const double hi = eig.back();
  const double expected =
      std::max(2.0 * std::sqrt(2.0) * hi, 2.0 * hi * hi / lo);
  CHECK(bound == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("rho lower bound rejects singular covariance") {
  const ComplexVectorXd v = random_cvec(3, 33);
  const ComplexMatrixXd rank_one = v * v.adjoint();
  CHECK_THROWS_AS(rho_lower_bound(HermitianMatrixXd(rank_one)),
                  SingularMatrixError);
}

TEST_CASE("auxiliary update solves the shifted normal equations") {
  const ComplexMatrixXd r = random_hpd(5, 44);
  const double rho = 3.5;
  const ComplexVectorXd w = random_cvec(5, 45);
  const ComplexVectorXd u = random_cvec(5, 46);

  const AuxiliaryUpdate<double> step(HermitianMatrixXd(r), rho);
  const ComplexVectorXd v = step(w + u);

  ComplexMatrixXd shifted = 2.0 * r;
  shifted.diagonal().array() += rho;
  const Eigen::VectorXcd expected =
      oracles::gauss_solve(shifted, rho * (w + u));
  CHECK((v - expected).norm() <= 1e-10 * expected.norm());

  const ComplexVectorXd one_call =
      auxiliary_update(w, u, HermitianMatrixXd(r), rho);
  CHECK((one_call - v).norm() <= 1e-14);
}

TEST_CASE("auxiliary update input validation") {
  const HermitianMatrixXd r(random_hpd(3, 47));
  CHECK_THROWS_AS(AuxiliaryUpdate<double>(r, 0.0), ValidationError);
  CHECK_THROWS_AS(
      auxiliary_update(random_cvec(2, 48), random_cvec(2, 49), r, 1.0),
      ValidationError);
}

TEST_CASE("augmented lagrangian matches an elementwise recomputation") {
  const HermitianMatrixXd r(random_hpd(4, 50));
  const ComplexVectorXd w = random_cvec(4, 51);
  const ComplexVectorXd v = random_cvec(4, 52);
  const ComplexVectorXd u = random_cvec(4, 53);
  const double lambda = 0.7, rho = 2.3, eps = 1e-3;

  auto recompute = [&](bool reweighted, const ComplexVectorXd& g) {
    double penalty = 0.0;
    for (int i = 0; i < 4; ++i) {
      penalty += reweighted ? lambda * std::abs(w(i)) / (std::abs(g(i)) + eps)
                            : lambda * std::abs(w(i));
    }
    std::complex<double> quad(0.0, 0.0);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        quad += std::conj(v(i)) * r.matrix()(i, j) * v(j);
      }
    }
    double split2 = 0.0;
    std::complex<double> cross(0.0, 0.0);
    for (int i = 0; i < 4; ++i) {
      const std::complex<double> d = w(i) - v(i);
      split2 += std::norm(d);
      cross += std::conj(u(i)) * d;
    }
    return penalty + quad.real() + 0.5 * rho * split2 + rho * cross.real();
  };

  const ComplexVectorXd g = random_cvec(4, 54);
  CHECK(augmented_lagrangian(w, v, u, r, lambda, rho, PenaltyVariant::PlainL1,
                             g, eps) ==
        doctest::Approx(recompute(false, g)).epsilon(1e-12));
  CHECK(augmented_lagrangian(w, v, u, r, lambda, rho,
                             PenaltyVariant::Reweighted, g, eps) ==
        doctest::Approx(recompute(true, g)).epsilon(1e-12));
}

TEST_CASE("config validation") {
  AdmmConfig<double> cfg;
  CHECK_NOTHROW(cfg.validate());
  AdmmConfig<double> bad = cfg;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.rho = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.eta = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("solver converges and satisfies the optimality system") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  const ComplexVectorXd a0 = steering_vector(s.soi_doa_deg, s.sensor_count);

  AdmmConfig<double> cfg;
  cfg.lambda = 5.0;
  cfg.rho = 0.0;  // the guaranteed bound keeps both variants contracting
  cfg.eta = 1e-10;
  cfg.max_iterations = 12000;

  for (PenaltyVariant variant :
       {PenaltyVariant::PlainL1, PenaltyVariant::Reweighted}) {
    cfg.variant = variant;
    const auto result = admm_solve(cfg, rx, a0);
    CHECK(result.termination == Termination::ResidualMet);
    CHECK(result.kkt.primal_residual <= 1e-10);
    CHECK(result.kkt.feasibility_gap <= 1e-9);
    // The quadratic step enforces 2 R v = rho u exactly, so the
    // stationarity residual reduces to factorization accuracy.
    CHECK(result.kkt.stationarity_residual <= 1e-6);
    CHECK(result.rho_used == result.rho_bound);
    CHECK_FALSE(result.rho_below_bound);
    CHECK_FALSE(result.collapsed);
  }
}

TEST_CASE("dual identity holds at every recorded iterate") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  const ComplexVectorXd a0 = steering_vector(s.soi_doa_deg, s.sensor_count);

  AdmmConfig<double> cfg;
  cfg.lambda = 5.0;
  cfg.rho = 500.0;
  cfg.max_iterations = 50;
  cfg.record_iterates = true;
  const auto result = admm_solve(cfg, rx, a0);
  REQUIRE(result.iterates.size() == std::size_t(result.state.iteration));
  for (const auto& it : result.iterates) {
    const double residual =
        (2.0 * (rx.matrix() * it.auxiliary) - 500.0 * it.dual).norm();
    CHECK(residual <= 1e-8);
  }
  const auto& last = result.iterates.back();
  CHECK((last.weight - result.state.weight).norm() == 0.0);
  CHECK((last.dual - result.state.dual).norm() == 0.0);
}

TEST_CASE("iteration cap is reported") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  const ComplexVectorXd a0 = steering_vector(s.soi_doa_deg, s.sensor_count);

  AdmmConfig<double> cfg;
  cfg.lambda = 5.0;
  cfg.rho = 500.0;
  cfg.max_iterations = 3;
  const auto result = admm_solve(cfg, rx, a0);
  CHECK(result.termination == Termination::IterationCap);
  CHECK(result.state.iteration == 3);
  CHECK(result.lagrangian_trace.size() == 3);
  CHECK(result.residual_trace.size() == 3);
  CHECK(result.feasibility_trace.size() == 3);
}

TEST_CASE("iterates stay feasible throughout") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  const ComplexVectorXd a0 = steering_vector(s.soi_doa_deg, s.sensor_count);

  AdmmConfig<double> cfg;
  cfg.lambda = 20.0;
  cfg.rho = 500.0;
  cfg.max_iterations = 200;
  const auto result = admm_solve(cfg, rx, a0);
  for (double gap : result.feasibility_trace) {
    CHECK(gap <= 1e-9);
  }
}

TEST_CASE("lagrangian descends monotonically at the safe penalty weight") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  const ComplexVectorXd a0 = steering_vector(s.soi_doa_deg, s.sensor_count);

  AdmmConfig<double> cfg;  // rho = 0 picks the guaranteed bound
  cfg.lambda = 10.0;
  cfg.max_iterations = 300;
  const auto result = admm_solve(cfg, rx, a0);
  CHECK_FALSE(result.rho_below_bound);
  CHECK(result.rho_used == doctest::Approx(result.rho_bound));
  const auto& trace = result.lagrangian_trace;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    CHECK(trace[k] <= trace[k - 1] +
                          1e-9 * std::max(1.0, std::abs(trace[k - 1])));
  }
}

TEST_CASE("overwhelming penalty collapses the thresholding step") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  const ComplexVectorXd a0 = steering_vector(s.soi_doa_deg, s.sensor_count);

  AdmmConfig<double> cfg;
  cfg.lambda = 1e8;
  cfg.rho = 500.0;
  cfg.max_iterations = 200;
  const auto result = admm_solve(cfg, rx, a0);
  CHECK(result.collapsed);
  // The projection of the origin spreads the response evenly, so nothing
  // about the weight singles out a subset of sensors.
  for (Index i = 0; i < 6; ++i) {
    CHECK(std::abs(result.state.weight(i)) ==
          doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("solves are deterministic and seed-sensitive") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  const ComplexVectorXd a0 = steering_vector(s.soi_doa_deg, s.sensor_count);

  AdmmConfig<double> cfg;
  cfg.lambda = 5.0;
  cfg.rho = 500.0;
  cfg.max_iterations = 40;
  cfg.init_seed = 1;
  const auto a = admm_solve(cfg, rx, a0);
  const auto b = admm_solve(cfg, rx, a0);
  CHECK((a.state.weight.array() == b.state.weight.array()).all());
  CHECK(a.lagrangian_trace == b.lagrangian_trace);

  cfg.init_seed = 2;
  const auto c = admm_solve(cfg, rx, a0);
  CHECK(a.lagrangian_trace.front() != c.lagrangian_trace.front());
}

TEST_CASE("solver rejects a config rho that disagrees with its own") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  const ComplexVectorXd a0 = steering_vector(s.soi_doa_deg, s.sensor_count);
  const AdmmSolver<double> solver(rx, a0, 500.0);

  AdmmConfig<double> cfg;
  cfg.rho = 700.0;
  CHECK_THROWS_AS(solver.solve(cfg), ValidationError);
  cfg.rho = 0.0;  // defers to the solver
  CHECK_NOTHROW(solver.solve(cfg));
}

TEST_CASE("solver validates dimensions") {
  const ScenarioXd s = solver_scenario();
  const auto rx = data_covariance_true(s);
  CHECK_THROWS_AS(AdmmSolver<double>(rx, steering_vector(0.0, 4)),
                  ValidationError);
}

}  // TEST_SUITE
