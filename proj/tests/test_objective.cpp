// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "ofo/affine_plant.hpp"
#include "ofo/errors.hpp"
#include "ofo/objective.hpp"
#include "ofo/rng.hpp"
#include "test_util.hpp"

using namespace ofo;

TEST_CASE("local objective evaluation") {
  const LocalObjective obj = LocalObjective::tracking(2.0);
  CHECK(obj(0.0, 2.0) == doctest::Approx(0.0));
  CHECK(obj(1.0, 4.0) == doctest::Approx(2.5));  // 1/2 (1 + 4)
  const LocalObjective scaled = LocalObjective::tracking(2.0, 3.0);
  CHECK(scaled(1.0, 4.0) == doctest::Approx(7.5));
}

TEST_CASE("box constraint projection") {
  const BoxConstraint box = BoxConstraint::uniform(1, 0.0, 1.0);
  CHECK(box.project(0, 2.0) == 1.0);
  CHECK(box.project(0, -0.5) == 0.0);
  CHECK(box.project(0, 0.25) == 0.25);

  std::mt19937_64 gen(17);
  const int n = 6;
  const BoxConstraint rand_box(test::random_vector(gen, n, -2.0, -0.5),
                               test::random_vector(gen, n, 0.5, 2.0));
  SUBCASE("interior points are fixed points; projection is idempotent") {
    const Eigen::VectorXd inside = Eigen::VectorXd::Zero(n);
    CHECK((rand_box.project(inside) - inside).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd u = test::random_vector(gen, n, -5.0, 5.0);
    const Eigen::VectorXd p = rand_box.project(u);
    CHECK((rand_box.project(p) - p).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rand_box.contains(p));
  }
  SUBCASE("projection is nonexpansive over 1000 random pairs") {
    for (int trial = 0; trial < 1000; ++trial) {
      const Eigen::VectorXd u = test::random_vector(gen, n, -5.0, 5.0);
      const Eigen::VectorXd w = test::random_vector(gen, n, -5.0, 5.0);
      CHECK((rand_box.project(u) - rand_box.project(w)).norm() <= (u - w).norm() + 1e-14);
    }
  }
  SUBCASE("diameter") {
    CHECK(BoxConstraint::uniform(4, -1.0, 1.0).diameter() == doctest::Approx(4.0));
    CHECK(!std::isfinite(BoxConstraint::unbounded(3).diameter()));
  }
}

namespace {

QuadraticReduced random_model(std::mt19937_64& gen, int n, double scale = 1.0,
                              bool average = true) {
  Eigen::MatrixXd h(n, n);
  for (int r = 0; r < n; ++r) h.row(r) = test::random_vector(gen, n, -0.5, 0.5).transpose();
  return QuadraticReduced(h, test::random_vector(gen, n), test::random_vector(gen, n), scale,
                          average);
}

}  // namespace

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 gen(23);
  const QuadraticReduced model = random_model(gen, 4, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd u = test::random_vector(gen, 4, -2.0, 2.0);
    const Eigen::VectorXd g = model.gradient(u);
    Eigen::VectorXd fd(4);
    const double h = 1e-6;
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(4);
      e(i) = h;
      fd(i) = (model.value(u + e) - model.value(u - e)) / (2 * h);
    }
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("gradient vanishes at the unconstrained minimizer") {
  std::mt19937_64 gen(29);
  const QuadraticReduced model = random_model(gen, 5);
  CHECK(model.gradient(model.minimizer_unconstrained()).norm() <= 1e-8);
}

TEST_CASE("minimum at the origin when the offset cancels the reference") {
  // H = I, b = y_ref: residual = u, so the reduced objective is u^T u / N
  const int n = 3;
  const Eigen::VectorXd ref = Eigen::VectorXd::Constant(n, 0.7);
  QuadraticReduced model(Eigen::MatrixXd::Identity(n, n), ref, ref, static_cast<double>(n), true);
  CHECK(model.minimizer_unconstrained().norm() <= 1e-12);
  CHECK(model.gradient(Eigen::VectorXd::Zero(n)).norm() <= 1e-12);
}

TEST_CASE("regularity constants for the pure quadratic") {
  // H = 0, scale = N: averaged Hessian = I, so m = L1 = 1
  const int n = 4;
  QuadraticReduced model(Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n),
                         Eigen::VectorXd::Zero(n), static_cast<double>(n), true);
  const RegularityConstants c =
      estimate_constants(model, Region::ball(Eigen::VectorXd::Zero(n), 1.0), 0.0);
  CHECK(c.m == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.l1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.exact);
}

TEST_CASE("regularity constants from the eigenvalue oracle") {
  std::mt19937_64 gen(31);
  const QuadraticReduced model = random_model(gen, 5, 3.0);
  const RegularityConstants c =
      estimate_constants(model, Region::ball(Eigen::VectorXd::Zero(5), 1.0), 1e-3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.hessian());
  CHECK(c.m == doctest::Approx(eig.eigenvalues().minCoeff()).epsilon(1e-12));
  CHECK(c.l1 == doctest::Approx(eig.eigenvalues().maxCoeff()).epsilon(1e-12));
  CHECK(c.m <= c.l1);
  CHECK(c.m > 0.0);
}

TEST_CASE("zero-radius region pins L0 at the center gradient") {
  std::mt19937_64 gen(37);
  const QuadraticReduced model = random_model(gen, 4);
  const Eigen::VectorXd center = test::random_vector(gen, 4);
  const RegularityConstants c = estimate_constants(model, Region::ball(center, 0.0), 0.0);
  double expect = 0.0;
  for (int i = 0; i < 4; ++i) expect = std::max(expect, model.agent_gradient(i, center).norm());
  CHECK(c.l0 == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("unbounded regions are rejected") {
  CHECK_THROWS_AS(Region::enclosing(BoxConstraint::unbounded(3)), UnboundedRegion);
  CHECK_THROWS_AS(Region::ball(Eigen::VectorXd::Zero(2),
                               std::numeric_limits<double>::infinity()),
                  UnboundedRegion);
}

TEST_CASE("L0 certificate actually bounds per-agent gradients on the region") {
  std::mt19937_64 gen(41);
  const QuadraticReduced model = random_model(gen, 4, 2.0);
  const Eigen::VectorXd center = Eigen::VectorXd::Zero(4);
  const double radius = 1.5;
  const RegularityConstants c = estimate_constants(model, Region::ball(center, radius), 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd u = test::random_vector(gen, 4);
    u = center + radius * u / std::max(1.0, u.norm());
    for (int i = 0; i < 4; ++i) CHECK(model.agent_gradient(i, u).norm() <= c.l0 + 1e-12);
  }
}

TEST_CASE("smoothing sandwich in closed form and by Monte Carlo") {
  std::mt19937_64 gen(43);
  const int n = 3;
  const QuadraticReduced model = random_model(gen, n, 2.0);
  const RegularityConstants c =
      estimate_constants(model, Region::ball(Eigen::VectorXd::Zero(n), 1.0), 0.0);
  const double delta = 0.05;
  const Eigen::VectorXd u = test::random_vector(gen, n);

  const double plain = model.value(u);
  const double smoothed = model.smoothed_value(u, delta);
  CHECK(plain <= smoothed + 1e-14);
  CHECK(smoothed <= plain + 0.5 * c.l1 * delta * delta * n + 1e-12);

  // Monte Carlo cross-check of E[value(u + delta v)]
  GaussianStream stream(123);
  const int samples = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = stream.next();
    const double val = model.value(u + delta * v);
    sum += val;
    sumsq += val * val;
  }
  const double mc_mean = sum / samples;
  const double mc_se = std::sqrt((sumsq / samples - mc_mean * mc_mean) / samples);
  CHECK(std::abs(mc_mean - smoothed) <= 3.0 * mc_se);
}

TEST_CASE("strong convexity certificate with the estimated modulus") {
  std::mt19937_64 gen(47);
  const QuadraticReduced model = random_model(gen, 4, 2.0);
  const RegularityConstants c =
      estimate_constants(model, Region::ball(Eigen::VectorXd::Zero(4), 1.0), 0.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::VectorXd u = test::random_vector(gen, 4, -3.0, 3.0);
    const Eigen::VectorXd w = test::random_vector(gen, 4, -3.0, 3.0);
    const double lhs = model.value(w);
    const double rhs =
        model.value(u) + model.gradient(u).dot(w - u) + 0.5 * c.m * (w - u).squaredNorm();
    CHECK(lhs >= rhs - 1e-10);
  }
}

TEST_CASE("rescaling lifts m above one and keeps the minimizer") {
  std::mt19937_64 gen(53);
  QuadraticReduced model = random_model(gen, 4);
  const Eigen::VectorXd before = model.minimizer_unconstrained();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.hessian());
  const double m0 = eig.eigenvalues().minCoeff();
  const double c = strong_convexity_rescale(m0);
  model.set_scale(model.scale() * c);
  CHECK((model.minimizer_unconstrained() - before).cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig2(model.hessian());
  CHECK(eig2.eigenvalues().minCoeff() == doctest::Approx(c * m0).epsilon(1e-12));
  if (m0 <= 1.0) CHECK(c * m0 > 1.0);
  CHECK(strong_convexity_rescale(2.0) == 1.0);
}

TEST_CASE("sampled constants approximate the exact ones on a quadratic") {
  std::mt19937_64 gen(59);
  const QuadraticReduced model = random_model(gen, 3, 2.0);
  const Region region = Region::ball(Eigen::VectorXd::Zero(3), 1.0);
  const RegularityConstants exact = estimate_constants(model, region, 0.0);
  const RegularityConstants sampled = estimate_constants_sampled(
      [&](const Eigen::VectorXd& u, int i) {
        const double r = model.sensitivity().row(i).dot(u) + model.offset()(i) - model.y_ref()(i);
        return model.scale() * 0.5 * (u(i) * u(i) + r * r);
      },
      3, region, 0.0, 64, 7);
  CHECK(!sampled.exact);
  CHECK(sampled.l0 <= exact.l0 + 1e-6);  // sampled sup is an underestimate
  // directional curvature estimates land inside the spectral bracket [m, L1]
  CHECK(sampled.l1 >= exact.m - 1e-4);
  CHECK(sampled.l1 <= exact.l1 + 1e-4);
  CHECK(sampled.m >= exact.m - 1e-4);
  CHECK(sampled.m <= exact.l1 + 1e-4);
}

TEST_CASE("measured reduced objective agrees with the analytic model") {
  std::mt19937_64 gen(61);
  const QuadraticReduced model = random_model(gen, 4, 2.0, false);
  AffinePlant plant(model.sensitivity(), model.offset());
  ReducedObjective reduced(plant, model.locals(), false);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd u = test::random_vector(gen, 4);
    CHECK(reduced.value(u) == doctest::Approx(model.value(u)).epsilon(1e-12));
  }
  ReducedObjective averaged(plant, model.locals(), true);
  const Eigen::VectorXd u = test::random_vector(gen, 4);
  CHECK(averaged.value(u) == doctest::Approx(model.value(u) / 4.0).epsilon(1e-12));
}
