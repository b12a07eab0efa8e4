// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "ofo/errors.hpp"
#include "ofo/graph.hpp"
#include "test_util.hpp"

using namespace ofo;

TEST_CASE("build_graph validates and normalizes") {
  const CommGraph two = CommGraph::build(2, {{0, 1}});
  CHECK(two.node_count() == 2);
  CHECK(two.degree(0) == 1);

  CHECK_THROWS_AS(CommGraph::build(3, {{0, 1}}), DisconnectedGraph);
  CHECK_THROWS_AS(CommGraph::build(2, {{0, 0}}), SelfLoop);
  CHECK_THROWS_AS(CommGraph::build(2, {{0, 2}}), IndexOutOfRange);
  CHECK_THROWS_AS(CommGraph::build(1, {}), Error);

  // duplicates (in either orientation) are dropped with a warning count
  const CommGraph dup = CommGraph::build(3, {{0, 1}, {1, 0}, {1, 2}, {0, 1}});
  CHECK(dup.duplicates_removed() == 2);
  CHECK(dup.edges().size() == 2);
}

TEST_CASE("benchmark tree fixture") {
  const CommGraph t = CommGraph::tree8();
  CHECK(t.node_count() == 8);
  CHECK(t.edges().size() == 7);
  CHECK(t.is_tree());
  CHECK(t.degree(1) == 3);
  CHECK(t.degree(2) == 3);
  CHECK(t.degree(3) == 1);
}

TEST_CASE("metropolis weights on the 2-node graph") {
  const WeightMatrix w = metropolis_weights(CommGraph::path(2), 1);
  CHECK(w.w(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w.w(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w.w(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w.tr_dev2 == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("metropolis weights on the 3-node path match the hand formula") {
  // degrees 1, 2, 1: off-diagonals 1/(1 + max deg) = 1/3, diagonal fills rows to 1
  const WeightMatrix w = metropolis_weights(CommGraph::path(3), 1);
  Eigen::MatrixXd expect(3, 3);
  expect << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3;
  CHECK((w.w - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(w.lambda2 == doctest::Approx(2.0 / 3).epsilon(1e-12));
  // independent spectral oracle: eigenvalues of the hand-built matrix
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(expect);
  CHECK(eig.eigenvalues()(1) == doctest::Approx(w.lambda2).epsilon(1e-12));
}

TEST_CASE("complete-averaging test double") {
  for (int tau : {1, 2, 5}) {
    const WeightMatrix w = WeightMatrix::complete_averaging(4, tau);
    const auto [tr1, tr2] = consensus_deviation(w, tau);
    CHECK(tr1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr2 == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("consensus deviation against direct matrix arithmetic") {
  const WeightMatrix w = metropolis_weights(CommGraph::path(3), 1);
  const auto [tr1, tr2] = consensus_deviation(w, 1);
  // direct oracle: tr[(W - 11^T/3)^2] elementwise
  const Eigen::MatrixXd dev = w.w - Eigen::MatrixXd::Constant(3, 3, 1.0 / 3);
  const double direct = (dev * dev).trace();
  CHECK(tr2 == doctest::Approx(direct).epsilon(1e-13));
  CHECK(tr2 == doctest::Approx(4.0 / 9).epsilon(1e-13));  // lambda2^2 = (2/3)^2, third eigenvalue 0
  CHECK(tr1 == doctest::Approx((w.w * w.w).trace()).epsilon(1e-13));

  SUBCASE("monotone decay in tau") {
    double prev = tr2;
    for (int tau = 2; tau <= 32; tau *= 2) {
      const double cur = consensus_deviation(w, tau).second;
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
    CHECK(prev < 1e-10);
  }

  SUBCASE("2-node graph deviates by nothing") {
    const WeightMatrix two = metropolis_weights(CommGraph::path(2), 1);
    CHECK(consensus_deviation(two, 1).second == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("weight matrix invariants over fixtures and random graphs") {
  std::mt19937_64 gen(7);
  std::vector<CommGraph> graphs;
  for (int n : {2, 3, 5, 10}) graphs.push_back(CommGraph::path(n));
  for (int n : {3, 6, 9}) graphs.push_back(CommGraph::star(n));
  for (int n : {3, 5, 8}) graphs.push_back(CommGraph::complete(n));
  graphs.push_back(CommGraph::tree8());
  for (int i = 0; i < 30; ++i) graphs.push_back(test::random_connected_graph(gen));

  for (const auto& g : graphs) {
    const int n = g.node_count();
    const WeightMatrix wm = metropolis_weights(g, 1);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    CHECK((wm.w * ones - ones).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((wm.w.transpose() * ones - ones).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((wm.w - wm.w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(wm.w.minCoeff() >= 0.0);
    CHECK(wm.w.maxCoeff() <= 1.0);
    CHECK(wm.lambda2 < 1.0);

    for (int tau = 1; tau <= 64; ++tau) {
      const double tr2 = consensus_deviation(wm, tau).second;
      CHECK(tr2 <= (n - 1) * std::pow(wm.lambda2, 2 * tau) + 1e-10);
    }

    // matrix-power cross-check of the spectral route
    const Eigen::MatrixXd w4 = test::matrix_power(wm.w, 4);
    const Eigen::MatrixXd dev = w4 - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    CHECK(consensus_deviation(wm, 4).second ==
          doctest::Approx((dev * dev).trace()).epsilon(1e-10));
    CHECK(consensus_deviation(wm, 4).first ==
          doctest::Approx(test::matrix_power(wm.w, 8).trace()).epsilon(1e-10));
  }
}

TEST_CASE("consensus drives random vectors to their mean") {
  std::mt19937_64 gen(11);
  const CommGraph g = CommGraph::tree8();
  const WeightMatrix wm = metropolis_weights(g, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd x = test::random_vector(gen, 8, -5.0, 5.0);
    const Eigen::VectorXd mean = Eigen::VectorXd::Constant(8, x.mean());
    const double init = (x - mean).norm();
    Eigen::VectorXd cur = x;
    double prev = init;
    for (int tau = 1; tau <= 64; ++tau) {
      cur = wm.w * cur;
      const double err = (cur - mean).norm();
      CHECK(err <= prev + 1e-12);
      if (tau == 64) CHECK(err <= std::pow(wm.lambda2, 64) * init + 1e-12);
      prev = err;
    }
  }
}

TEST_CASE("edge-list round trip and parse errors") {
  const CommGraph t = CommGraph::tree8();
  std::ostringstream out;
  t.save_edge_list(out);
  std::istringstream in(out.str());
  const CommGraph back = CommGraph::from_edge_list(in);
  CHECK(back.node_count() == 8);
  CHECK(back.edges() == t.edges());

  std::istringstream commented("# header\n0 1\n # another\n1 2\n");
  CHECK(CommGraph::from_edge_list(commented).node_count() == 3);

  std::istringstream bad("0 1\n2\n");
  CHECK_THROWS_AS(CommGraph::from_edge_list(bad), ConfigError);

  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(CommGraph::from_edge_list(empty), EmptyInput);
}
