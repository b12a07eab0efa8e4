// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "ofo/affine_plant.hpp"
#include "ofo/dc_grid.hpp"
#include "ofo/errors.hpp"
#include "test_util.hpp"

using namespace ofo;

TEST_CASE("affine plant is the identity when H = I, b = 0") {
  AffinePlant plant(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
  const Eigen::VectorXd u = (Eigen::VectorXd(3) << 1.0, -2.0, 0.5).finished();
  CHECK((plant.measure(u) - u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("benchmark grid is stable and settles to the reference at zero input") {
  const CommGraph tree = CommGraph::tree8();
  DcGridPlant plant(tree, DcGridParams::defaults(tree));
  CHECK(plant.spectral_radius() < 1.0);
  CHECK(plant.realization() == DcGridPlant::Realization::droop_stabilized);

  // u = 0 with load_change = reference_injection: V = d, i.e. y = V_ref - H 1
  const Eigen::VectorXd y0 = plant.measure(Eigen::VectorXd::Zero(8));
  const Eigen::VectorXd expect =
      plant.reference_output() - plant.sensitivity() * Eigen::VectorXd::Ones(8);
  CHECK((y0 - expect).cwiseAbs().maxCoeff() < 1e-8);

  SUBCASE("load_change = 0 makes zero input track the reference exactly") {
    DcGridParams params = DcGridParams::defaults(tree);
    params.load_change.setZero();
    DcGridPlant nominal(tree, params);
    const Eigen::VectorXd y = nominal.measure(Eigen::VectorXd::Zero(8));
    CHECK((y - nominal.reference_output()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("settled dynamics match the affine oracle") {
  const CommGraph tree = CommGraph::tree8();
  DcGridPlant plant(tree, DcGridParams::defaults(tree));
  AffinePlant oracle = plant.affine_oracle();
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::VectorXd u = test::random_vector(gen, 8, -2.0, 2.0);
    CHECK((plant.measure(u) - oracle.measure(u)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("two-node degenerate grid") {
  const CommGraph pair = CommGraph::path(2);
  DcGridPlant plant(pair, DcGridParams::defaults(pair));
  CHECK(plant.spectral_radius() < 1.0);
  CHECK(plant.sensitivity().rows() == 2);
  // independent eigenvalue oracle on the realized droop form
  Eigen::MatrixXd sys(3, 3);
  const Eigen::MatrixXd b = plant.incidence();
  sys << -1, 0, -b(0, 0), 0, -1, -b(1, 0), b(0, 0), b(1, 0), -10;
  const Eigen::MatrixXd euler = Eigen::MatrixXd::Identity(3, 3) + 0.1 * sys;
  const double radius =
      Eigen::EigenSolver<Eigen::MatrixXd>(euler, false).eigenvalues().cwiseAbs().maxCoeff();
  CHECK(plant.spectral_radius() == doctest::Approx(radius).epsilon(1e-12));
}

TEST_CASE("coarse discretization is rejected") {
  const CommGraph tree = CommGraph::tree8();
  DcGridParams params = DcGridParams::defaults(tree);
  params.step = 10.0;
  CHECK_THROWS_AS(DcGridPlant(tree, params), UnstableDiscretization);
}

TEST_CASE("non-tree topologies are rejected") {
  std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}, {0, 2}};
  const CommGraph cycle = CommGraph::build(3, edges);
  CHECK_THROWS_AS(DcGridPlant(cycle, DcGridParams::defaults(cycle)), NotATree);
}

TEST_CASE("sensitivity is symmetric for symmetric element matrices") {
  const CommGraph tree = CommGraph::tree8();
  DcGridPlant plant(tree, DcGridParams::defaults(tree));
  const Eigen::MatrixXd& h = plant.sensitivity();
  CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("incidence matrix encodes the tree") {
  const CommGraph tree = CommGraph::tree8();
  DcGridPlant plant(tree, DcGridParams::defaults(tree));
  const Eigen::MatrixXd& b = plant.incidence();
  CHECK(b.rows() == 8);
  CHECK(b.cols() == 7);
  for (int e = 0; e < 7; ++e) {
    CHECK(b.col(e).sum() == doctest::Approx(0.0));
    CHECK(b.col(e).cwiseAbs().sum() == doctest::Approx(2.0));
  }
  CHECK(b.cwiseAbs().maxCoeff() == 1.0);
}

TEST_CASE("superposition holds for the linear grid") {
  const CommGraph tree = CommGraph::tree8();
  DcGridPlant plant(tree, DcGridParams::defaults(tree));
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd u1 = test::random_vector(gen, 8);
    const Eigen::VectorXd u2 = test::random_vector(gen, 8);
    const Eigen::VectorXd lhs =
        plant.measure(u1) + plant.measure(u2) - plant.measure(Eigen::VectorXd::Zero(8));
    const Eigen::VectorXd rhs = plant.measure(u1 + u2);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("settling is insensitive to the step budget once converged") {
  const CommGraph tree = CommGraph::tree8();
  DcGridParams params = DcGridParams::defaults(tree);
  DcGridPlant plant_a(tree, params);
  params.max_settle_steps *= 2;
  DcGridPlant plant_b(tree, params);
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd u = test::random_vector(gen, 8);
    CHECK((plant_a.measure(u) - plant_b.measure(u)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("an impossible settle budget raises NotSettled") {
  const CommGraph tree = CommGraph::tree8();
  DcGridParams params = DcGridParams::defaults(tree);
  params.max_settle_steps = 3;
  CHECK_THROWS_AS(DcGridPlant(tree, params), NotSettled);
}
