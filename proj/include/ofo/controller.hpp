// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "ofo/graph.hpp"
#include "ofo/objective.hpp"
#include "ofo/plant.hpp"
#include "ofo/rng.hpp"
#include "ofo/trace.hpp"

namespace ofo {

enum class UpdateMode { unconstrained, projected };
enum class Baseline { distributed, centralized };

struct ControllerConfig {
  double eta = 1e-3;    // step size
  double delta = 2e-3;  // smoothing parameter
  int tau = 5;          // consensus depth / queue length
  long horizon = 20000;
  UpdateMode mode = UpdateMode::unconstrained;
  Baseline baseline = Baseline::distributed;
  BoxConstraint constraint;  // projected mode only
  std::uint64_t seed = 1;
  /// Centralized baseline variant that keeps the queue cadence (exact
  /// averaging through the same protocol, delay included). Default runs the
  /// residual estimator with no extra delay.
  bool centralized_queue_delay = false;
};

/// eta bound of the step-size condition eta < delta / sqrt(4 N L0^2 tr[W^2tau]).
double step_size_limit(double delta, double l0, double tr_w2tau, int n);
bool step_size_condition(const ControllerConfig& cfg, double l0, double tr_w2tau, int n);

/// Residual-feedback gradient estimate from two successive evaluations.
Eigen::VectorXd residual_feedback_estimate(double value_now, double value_prev, double delta,
                                           const Eigen::VectorXd& v_now);

/// One agent's local state: input component, objective-value queue, the
/// previous queue front (the shift destroys it), and a FIFO of own
/// exploration scalars. The FIFO is loaded with the init scalars and then
/// fed one online scalar per iteration, so its front is always the scalar
/// the current phase of the update consumes.
struct AgentState {
  double input = 0.0;
  std::vector<double> queue;
  double prev_front = 0.0;
  std::deque<double> exploration;
};

/// Test hook: replaces the Gaussian exploration streams with scripted ones.
struct ExplorationOverride {
  std::function<Eigen::VectorXd(long)> online;  // k -> v_k
  std::function<Eigen::VectorXd(int)> init;     // l -> v_init_l
};

/// Synchronous multi-agent controller state. One instance per simulation
/// run; the run is single-threaded and deterministic given the seed.
class Swarm {
 public:
  Swarm(const ControllerConfig& cfg, SteadyStateMap& plant,
        std::vector<LocalObjective> objectives, WeightMatrix weights, Eigen::VectorXd u0,
        std::optional<ExplorationOverride> exploration = std::nullopt);

  void step();

  long iteration() const { return k_; }
  int node_count() const { return n_; }
  const ControllerConfig& config() const { return cfg_; }
  Eigen::VectorXd inputs() const;
  const AgentState& agent(int i) const { return agents_.at(i); }

  const Eigen::VectorXd& last_probe() const { return last_probe_; }
  const Eigen::VectorXd& last_phi() const { return last_phi_; }
  const Eigen::VectorXd& last_delta() const { return last_delta_; }
  double last_objective(bool average) const;
  double last_e_norm() const { return last_e_norm_; }

  long probe_count() const { return probe_count_; }
  long scalars_transmitted() const { return scalars_transmitted_; }

  /// Recorded phi / v histories (diagnostic path; global knowledge allowed).
  const std::deque<Eigen::VectorXd>& phi_history() const { return phi_hist_; }
  const std::deque<Eigen::VectorXd>& v_history() const { return v_hist_; }

  /// Reconstruction of the update as u_{k+1} - u_k = -eta (grad_estimate +
  /// consensus_error); defined once k >= tau + 1 (always for centralized).
  struct Decomposition {
    Eigen::VectorXd grad_estimate;
    Eigen::VectorXd consensus_error;
  };
  std::optional<Decomposition> last_decomposition() const;

 private:
  void step_distributed();
  void step_centralized();
  Eigen::VectorXd draw_online();
  Eigen::VectorXd draw_init(int l);
  Eigen::VectorXd probe_and_evaluate(const Eigen::VectorXd& v);
  void push_history(const Eigen::VectorXd& phi, const Eigen::VectorXd& v);

  ControllerConfig cfg_;
  SteadyStateMap& plant_;
  std::vector<LocalObjective> objectives_;
  WeightMatrix weights_;
  int n_ = 0;
  bool queue_protocol_ = true;  // false only for the no-delay centralized baseline

  std::vector<AgentState> agents_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<GaussianStream> agent_streams_;
  GaussianStream init_stream_;
  std::optional<ExplorationOverride> exploration_;

  Eigen::MatrixXd deviation_;  // W^tau - 11^T/N (diagnostics only)
  std::deque<Eigen::VectorXd> phi_hist_;
  std::deque<Eigen::VectorXd> v_hist_;

  long k_ = 0;
  long probe_count_ = 0;
  long scalars_transmitted_ = 0;
  double prev_mean_ = 0.0;  // centralized residual memory
  Eigen::VectorXd last_probe_, last_phi_, last_delta_;
  double last_e_norm_;
  Eigen::VectorXd consensus_scratch_;
};

/// Runs the controller for cfg.horizon iterations and returns the trace.
/// u_star (when known) fills the relative-error column; it is a diagnostic
/// input only, never visible to the update.
RunTrace run_controller(const ControllerConfig& cfg, SteadyStateMap& plant,
                        std::vector<LocalObjective> objectives, const WeightMatrix& weights,
                        const Eigen::VectorXd& u0, const Eigen::VectorXd* u_star = nullptr,
                        bool average_objective = false);

}  // namespace ofo
