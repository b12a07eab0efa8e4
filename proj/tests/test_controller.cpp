// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "ofo/affine_plant.hpp"
#include "ofo/controller.hpp"
#include "ofo/dc_grid.hpp"
#include "ofo/errors.hpp"
#include "test_util.hpp"

using namespace ofo;

namespace {

// Phi(u) = u^2 for a 1-node system: H = 1, b = 0, y_ref = 0 gives
// 1/2 (u^2 + u^2) = u^2.
struct ScalarSquare {
  AffinePlant plant{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1)};
  std::vector<LocalObjective> objectives{LocalObjective::tracking(0.0)};
  WeightMatrix weights = WeightMatrix::from_matrix(Eigen::MatrixXd::Ones(1, 1), 1);
};

ControllerConfig basic_config(int tau, long horizon, std::uint64_t seed = 1) {
  ControllerConfig cfg;
  cfg.eta = 1e-2;
  cfg.delta = 0.05;
  cfg.tau = tau;
  cfg.horizon = horizon;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("initialization stacks tau local evaluations") {
  ScalarSquare fx;
  ControllerConfig cfg = basic_config(1, 0);
  cfg.delta = 1.0;
  ExplorationOverride ex;
  ex.init = [](int) { return Eigen::VectorXd::Ones(1); };
  ex.online = [](long) { return Eigen::VectorXd::Ones(1); };
  const Swarm swarm(cfg, fx.plant, fx.objectives, fx.weights, Eigen::VectorXd::Zero(1), ex);
  REQUIRE(swarm.agent(0).queue.size() == 1);
  CHECK(swarm.agent(0).queue[0] == doctest::Approx(1.0));  // Phi(0 + 1*1) = 1
  CHECK(swarm.probe_count() == 1);
}

TEST_CASE("exactly tau probes happen before the main loop") {
  ScalarSquare fx;
  const ControllerConfig cfg = basic_config(3, 0);
  const Swarm swarm(cfg, fx.plant, fx.objectives, fx.weights, Eigen::VectorXd::Zero(1));
  CHECK(swarm.probe_count() == 3);
  CHECK(swarm.agent(0).queue.size() == 3);
  CHECK(swarm.agent(0).exploration.size() == 3);
}

TEST_CASE("same seed reproduces the initial state and the whole trace") {
  ScalarSquare fx;
  const ControllerConfig cfg = basic_config(2, 50, 42);
  AffinePlant plant_a = fx.plant, plant_b = fx.plant;
  const RunTrace a = run_controller(cfg, plant_a, fx.objectives, fx.weights,
                                    Eigen::VectorXd::Zero(1));
  const RunTrace b = run_controller(cfg, plant_b, fx.objectives, fx.weights,
                                    Eigen::VectorXd::Zero(1));
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].input(0) == b.rows[k].input(0));  // bitwise equality
  }
}

TEST_CASE("horizon zero leaves only the initial input") {
  ScalarSquare fx;
  const RunTrace trace = run_controller(basic_config(1, 0), fx.plant, fx.objectives, fx.weights,
                                        Eigen::VectorXd::Constant(1, 0.4));
  REQUIRE(trace.rows.size() == 1);
  CHECK(trace.rows[0].input(0) == 0.4);
  CHECK(trace.rows[0].probe.size() == 0);
}

TEST_CASE("single agent update reduces to the delayed residual rule") {
  // With N = 1 and tau = 1 the consensus is the identity, so for k >= 1 the
  // update must equal the one-point residual estimate delayed by one step:
  // u_{k+1} = u_k - (eta/delta)(phi_{k-1} - phi_{k-2}) v_{k-1}  (phi_{-1} = init).
  ScalarSquare fx;
  ControllerConfig cfg = basic_config(1, 0, 5);
  Swarm swarm(cfg, fx.plant, fx.objectives, fx.weights, Eigen::VectorXd::Constant(1, 0.3));
  std::vector<double> phis, vs, inputs;
  double phi_init = swarm.agent(0).queue[0];
  inputs.push_back(swarm.inputs()(0));
  for (int k = 0; k < 6; ++k) {
    swarm.step();
    phis.push_back(swarm.last_phi()(0));
    vs.push_back(swarm.v_history().back()(0));
    inputs.push_back(swarm.inputs()(0));
  }
  for (int k = 1; k < 6; ++k) {
    const double prev = k >= 2 ? phis[k - 2] : phi_init;
    const double expected = inputs[k] - (cfg.eta / cfg.delta) * (phis[k - 1] - prev) * vs[k - 1];
    CHECK(inputs[k + 1] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("two agents with exact averaging match the matrix form") {
  // Complete 2-node graph: W = 11^T/2. After the shift, the stored queue
  // front of iteration k equals (W phi_{k-1})_i for every agent.
  const int n = 2;
  Eigen::MatrixXd h(n, n);
  h << 0.8, 0.1, 0.1, 0.6;
  AffinePlant plant(h, Eigen::VectorXd::Zero(n));
  const auto objectives = tracking_objectives(Eigen::VectorXd::Constant(n, 0.3));
  const WeightMatrix w = metropolis_weights(CommGraph::complete(2), 1);
  ControllerConfig cfg = basic_config(1, 0, 31);
  Swarm swarm(cfg, plant, objectives, w, Eigen::VectorXd::Zero(n));
  Eigen::VectorXd prev_phi;
  for (int k = 0; k < 5; ++k) {
    swarm.step();
    if (k >= 1) {
      // prev_front holds the queue front consumed during iteration k
      const Eigen::VectorXd expect = w.w * prev_phi;
      for (int i = 0; i < n; ++i) {
        CHECK(swarm.agent(i).prev_front == doctest::Approx(expect(i)).epsilon(1e-12));
      }
    }
    prev_phi = swarm.last_phi();
  }
}

TEST_CASE("projected mode keeps every iterate inside the box") {
  const int n = 3;
  AffinePlant plant(Eigen::MatrixXd::Identity(n, n) * 0.5, Eigen::VectorXd::Zero(n));
  const auto objectives = tracking_objectives(Eigen::VectorXd::Constant(n, -2.0));
  const WeightMatrix w = metropolis_weights(CommGraph::path(n), 2);
  ControllerConfig cfg = basic_config(2, 200, 7);
  cfg.mode = UpdateMode::projected;
  cfg.constraint = BoxConstraint::uniform(n, 0.0, 1.0);
  AffinePlant p2 = plant;
  const RunTrace trace =
      run_controller(cfg, p2, objectives, w, Eigen::VectorXd::Constant(n, 0.5));
  CHECK(trace.meta.max_input_violation == 0.0);
  for (const auto& row : trace.rows) {
    CHECK(cfg.constraint.contains(row.input));
  }
  // exploration probes may leave the box; that is recorded, not clamped
  CHECK(trace.meta.max_probe_violation > 0.0);
}

TEST_CASE("protocol equals the weight-matrix power algebra") {
  // First queue element at iteration k >= tau+1 must equal (W^tau phi_{k-tau})_i.
  std::mt19937_64 gen(71);
  for (int trial = 0; trial < 8; ++trial) {
    const CommGraph g = test::random_connected_graph(gen);
    const int n = g.node_count();
    for (int tau : {1, 3, 5}) {
      const WeightMatrix w = metropolis_weights(g, tau);
      // bounded-away-from-zero custom objectives keep relative error meaningful
      std::vector<LocalObjective> objectives;
      for (int i = 0; i < n; ++i) {
        objectives.push_back(LocalObjective::custom(
            [i](double u, double y) { return 2.0 + std::sin(3.0 * u + y + i); }));
      }
      Eigen::MatrixXd h(n, n);
      for (int r = 0; r < n; ++r) h.row(r) = test::random_vector(gen, n, -0.4, 0.4).transpose();
      AffinePlant plant(h, test::random_vector(gen, n));
      ControllerConfig cfg = basic_config(tau, 0, 100 + trial);
      Swarm swarm(cfg, plant, objectives, w, test::random_vector(gen, n));
      const Eigen::MatrixXd wtau = test::matrix_power(w.w, tau);
      std::vector<Eigen::VectorXd> phis;
      for (int k = 0; k <= tau + 5; ++k) {
        swarm.step();
        phis.push_back(swarm.last_phi());
        if (k >= tau + 1) {
          const Eigen::VectorXd expect = wtau * phis[k - tau];
          for (int i = 0; i < n; ++i) {
            const double got = swarm.agent(i).prev_front;  // queue front of iteration k
            CHECK(std::abs(got - expect(i)) <= 1e-12 * std::max(1.0, std::abs(expect(i))));
          }
        }
      }
    }
  }
}

TEST_CASE("message budget is exactly tau scalars per neighbor per iteration") {
  std::mt19937_64 gen(73);
  const CommGraph g = CommGraph::tree8();
  long degree_sum = 0;
  for (int i = 0; i < 8; ++i) degree_sum += g.degree(i);
  for (int tau : {1, 4}) {
    const WeightMatrix w = metropolis_weights(g, tau);
    AffinePlant plant(Eigen::MatrixXd::Identity(8, 8), Eigen::VectorXd::Zero(8));
    const auto objectives = tracking_objectives(Eigen::VectorXd::Zero(8));
    Swarm swarm(basic_config(tau, 0, 3), plant, objectives, w, Eigen::VectorXd::Zero(8));
    const int iters = 7;
    for (int k = 0; k < iters; ++k) swarm.step();
    CHECK(swarm.scalars_transmitted() == static_cast<long>(tau) * degree_sum * iters);
  }
}

TEST_CASE("update decomposes into gradient estimate plus consensus error") {
  std::mt19937_64 gen(79);
  const CommGraph g = CommGraph::path(4);
  const int tau = 3;
  const WeightMatrix w = metropolis_weights(g, tau);
  Eigen::MatrixXd h(4, 4);
  for (int r = 0; r < 4; ++r) h.row(r) = test::random_vector(gen, 4, -0.4, 0.4).transpose();
  AffinePlant plant(h, test::random_vector(gen, 4));
  const auto objectives = tracking_objectives(test::random_vector(gen, 4));
  ControllerConfig cfg = basic_config(tau, 0, 11);
  Swarm swarm(cfg, plant, objectives, w, Eigen::VectorXd::Zero(4));
  Eigen::VectorXd before = swarm.inputs();
  for (int k = 0; k <= tau + 6; ++k) {
    swarm.step();
    const Eigen::VectorXd after = swarm.inputs();
    if (k >= tau + 1) {
      const auto dec = swarm.last_decomposition();
      REQUIRE(dec.has_value());
      const Eigen::VectorXd reconstructed =
          before - cfg.eta * (dec->grad_estimate + dec->consensus_error);
      CHECK((after - reconstructed).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(swarm.last_e_norm() == doctest::Approx(dec->consensus_error.norm()));
    }
    before = after;
  }
}

TEST_CASE("exact-averaging weights produce zero consensus error") {
  const int n = 4;
  const WeightMatrix w = WeightMatrix::complete_averaging(n, 1);
  AffinePlant plant(Eigen::MatrixXd::Identity(n, n) * 0.3, Eigen::VectorXd::Zero(n));
  const auto objectives = tracking_objectives(Eigen::VectorXd::Constant(n, 1.0));
  Swarm swarm(basic_config(1, 0, 13), plant, objectives, w, Eigen::VectorXd::Zero(n));
  for (int k = 0; k < 6; ++k) {
    swarm.step();
    if (k >= 2) CHECK(swarm.last_e_norm() == 0.0);
  }
}

TEST_CASE("doubling tau shrinks the time-averaged consensus error") {
  const CommGraph tree = CommGraph::tree8();
  auto mean_e2 = [&](int tau, std::uint64_t seed) {
    DcGridPlant plant(tree, DcGridParams::defaults(tree));
    const auto objectives = tracking_objectives(plant.reference_output());
    const WeightMatrix w = metropolis_weights(tree, tau);
    ControllerConfig cfg;
    cfg.eta = 1e-3;
    cfg.delta = 2e-3;
    cfg.tau = tau;
    cfg.horizon = 0;
    cfg.seed = seed;
    Swarm swarm(cfg, plant, objectives, w, Eigen::VectorXd::Zero(8));
    double acc = 0.0;
    int count = 0;
    for (int k = 0; k < 300; ++k) {
      swarm.step();
      if (std::isfinite(swarm.last_e_norm())) {
        acc += swarm.last_e_norm() * swarm.last_e_norm();
        ++count;
      }
    }
    return acc / count;
  };
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    small += mean_e2(5, seed);
    large += mean_e2(10, seed);
  }
  CHECK(large < small);
}

TEST_CASE("centralized runs share the exploration stream with distributed runs") {
  ScalarSquare fx;
  const int n = 4;
  AffinePlant plant(Eigen::MatrixXd::Identity(n, n) * 0.5, Eigen::VectorXd::Zero(n));
  const auto objectives = tracking_objectives(Eigen::VectorXd::Constant(n, 0.5));
  const WeightMatrix w = metropolis_weights(CommGraph::path(n), 2);
  ControllerConfig cfg = basic_config(2, 0, 17);
  AffinePlant p1 = plant, p2 = plant;
  Swarm dist(cfg, p1, objectives, w, Eigen::VectorXd::Zero(n));
  cfg.baseline = Baseline::centralized;
  Swarm cent(cfg, p2, objectives, w, Eigen::VectorXd::Zero(n));
  for (int k = 0; k < 5; ++k) {
    dist.step();
    cent.step();
    const Eigen::VectorXd& vd = dist.v_history().back();
    const Eigen::VectorXd& vc = cent.v_history().back();
    CHECK((vd - vc).cwiseAbs().maxCoeff() == 0.0);  // identical online streams
  }
}

TEST_CASE("centralized estimator drives a quadratic toward its optimum") {
  // Monte Carlo: with exact averaging and a small step, the mean squared
  // distance to the optimum decreases from start to finish.
  const int n = 2;
  AffinePlant plant(Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n));
  const auto objectives = tracking_objectives(Eigen::VectorXd::Zero(n),
                                              static_cast<double>(n));  // per-node u^2/2
  const WeightMatrix w = metropolis_weights(CommGraph::complete(n), 1);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Constant(n, 1.0);
  double start = 0.0, finish = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ControllerConfig cfg;
    cfg.eta = 5e-3;
    cfg.delta = 0.05;
    cfg.tau = 1;
    cfg.horizon = 400;
    cfg.seed = seed;
    cfg.baseline = Baseline::centralized;
    AffinePlant p = plant;
    const RunTrace tr = run_controller(cfg, p, objectives, w, u0);
    start += tr.rows.front().input.squaredNorm();
    finish += tr.rows.back().input.squaredNorm();
  }
  CHECK(finish < 0.25 * start);
}

TEST_CASE("queue-delay centralized variant matches exact averaging through the protocol") {
  const int n = 3;
  AffinePlant plant(Eigen::MatrixXd::Identity(n, n) * 0.4, Eigen::VectorXd::Zero(n));
  const auto objectives = tracking_objectives(Eigen::VectorXd::Constant(n, 0.2));
  ControllerConfig cfg = basic_config(2, 40, 19);
  cfg.baseline = Baseline::centralized;
  cfg.centralized_queue_delay = true;
  AffinePlant p1 = plant, p2 = plant;
  const RunTrace a = run_controller(cfg, p1, objectives,
                                    metropolis_weights(CommGraph::path(n), 2),
                                    Eigen::VectorXd::Zero(n));
  // same run with the averaging matrix supplied explicitly as a test double
  cfg.baseline = Baseline::distributed;
  cfg.centralized_queue_delay = false;
  const RunTrace b = run_controller(cfg, p2, objectives, WeightMatrix::complete_averaging(n, 2),
                                    Eigen::VectorXd::Zero(n));
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK((a.rows[k].input - b.rows[k].input).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("dimension and parameter validation") {
  ScalarSquare fx;
  ControllerConfig cfg = basic_config(0, 10);
  CHECK_THROWS_AS(Swarm(cfg, fx.plant, fx.objectives, fx.weights, Eigen::VectorXd::Zero(1)),
                  Error);
  cfg = basic_config(1, 10);
  cfg.eta = 0.0;
  CHECK_THROWS_AS(Swarm(cfg, fx.plant, fx.objectives, fx.weights, Eigen::VectorXd::Zero(1)),
                  Error);
  cfg = basic_config(1, 10);
  CHECK_THROWS_AS(Swarm(cfg, fx.plant, fx.objectives, fx.weights, Eigen::VectorXd::Zero(2)),
                  Error);
}
