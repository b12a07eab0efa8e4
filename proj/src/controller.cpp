// SPDX-License-Identifier: Apache-2.0
#include "ofo/controller.hpp"

#include <cmath>

#include "ofo/errors.hpp"

namespace ofo {

double step_size_limit(double delta, double l0, double tr_w2tau, int n) {
  return delta / std::sqrt(4.0 * n * l0 * l0 * tr_w2tau);
}

bool step_size_condition(const ControllerConfig& cfg, double l0, double tr_w2tau, int n) {
  return cfg.eta > 0.0 && cfg.eta < step_size_limit(cfg.delta, l0, tr_w2tau, n);
}

Eigen::VectorXd residual_feedback_estimate(double value_now, double value_prev, double delta,
                                           const Eigen::VectorXd& v_now) {
  return ((value_now - value_prev) / delta) * v_now;
}

Swarm::Swarm(const ControllerConfig& cfg, SteadyStateMap& plant,
             std::vector<LocalObjective> objectives, WeightMatrix weights, Eigen::VectorXd u0,
             std::optional<ExplorationOverride> exploration)
    : cfg_(cfg),
      plant_(plant),
      objectives_(std::move(objectives)),
      weights_(std::move(weights)),
      init_stream_(derive_seed(cfg.seed, stream::kInit)),
      exploration_(std::move(exploration)),
      last_e_norm_(std::numeric_limits<double>::quiet_NaN()) {
  n_ = plant_.dimension();
  if (static_cast<int>(objectives_.size()) != n_) throw Error("one objective per agent required");
  if (u0.size() != n_) throw Error("u0 dimension mismatch");
  if (cfg_.tau < 1) throw Error("tau must be >= 1");
  if (cfg_.eta <= 0.0 || cfg_.delta <= 0.0) throw Error("eta and delta must be positive");
  if (cfg_.horizon < 0) throw Error("horizon must be nonnegative");
  if (cfg_.mode == UpdateMode::projected && cfg_.constraint.dimension() != n_) {
    throw Error("projected mode needs a constraint box of matching dimension");
  }

  queue_protocol_ = cfg_.baseline == Baseline::distributed || cfg_.centralized_queue_delay;
  if (cfg_.baseline == Baseline::centralized && cfg_.centralized_queue_delay) {
    // Queue cadence with exact averaging in place of the Metropolis weights.
    weights_ = WeightMatrix::complete_averaging(n_, cfg_.tau);
  }
  if (queue_protocol_ && weights_.node_count() != n_) {
    throw Error("weight matrix dimension mismatch");
  }

  if (cfg_.mode == UpdateMode::projected) u0 = cfg_.constraint.project(u0);

  agents_.resize(n_);
  neighbors_.assign(n_, {});
  agent_streams_.reserve(n_);
  for (int i = 0; i < n_; ++i) {
    agents_[i].input = u0(i);
    agent_streams_.emplace_back(derive_seed(cfg_.seed, stream::kAgent, i));
    if (queue_protocol_) {
      for (int j = 0; j < n_; ++j) {
        if (j != i && weights_.w(i, j) != 0.0) neighbors_[i].push_back(j);
      }
    }
  }

  if (queue_protocol_) {
    const Eigen::MatrixXd avg = Eigen::MatrixXd::Constant(n_, n_, 1.0 / n_);
    Eigen::MatrixXd wpow = Eigen::MatrixXd::Identity(n_, n_);
    for (int t = 0; t < cfg_.tau; ++t) wpow = wpow * weights_.w;
    deviation_ = wpow - avg;
    consensus_scratch_.resize(n_);

    // tau probes at u0 + delta v_init_l seed every queue in order l = 0..tau-1.
    for (int l = 0; l < cfg_.tau; ++l) {
      const Eigen::VectorXd v = draw_init(l);
      const Eigen::VectorXd phi = probe_and_evaluate(v);
      for (int i = 0; i < n_; ++i) {
        agents_[i].queue.push_back(phi(i));
        agents_[i].exploration.push_back(v(i));
      }
    }
  } else {
    // No-delay centralized baseline: one init evaluation anchors the residual.
    const Eigen::VectorXd v = draw_init(0);
    prev_mean_ = probe_and_evaluate(v).mean();
  }
}

Eigen::VectorXd Swarm::draw_online() {
  Eigen::VectorXd v(n_);
  if (exploration_ && exploration_->online) {
    v = exploration_->online(k_);
    if (v.size() != n_) throw Error("scripted online exploration has wrong dimension");
  } else {
    for (int i = 0; i < n_; ++i) v(i) = agent_streams_[i].next();
  }
  return v;
}

Eigen::VectorXd Swarm::draw_init(int l) {
  Eigen::VectorXd v(n_);
  if (exploration_ && exploration_->init) {
    v = exploration_->init(l);
    if (v.size() != n_) throw Error("scripted init exploration has wrong dimension");
  } else {
    for (int i = 0; i < n_; ++i) v(i) = init_stream_.next();
  }
  return v;
}

Eigen::VectorXd Swarm::probe_and_evaluate(const Eigen::VectorXd& v) {
  Eigen::VectorXd probe(n_);
  for (int i = 0; i < n_; ++i) probe(i) = agents_[i].input + cfg_.delta * v(i);
  const Eigen::VectorXd y = plant_.measure(probe);
  ++probe_count_;
  Eigen::VectorXd phi(n_);
  for (int i = 0; i < n_; ++i) phi(i) = objectives_[i](probe(i), y(i));
  last_probe_ = std::move(probe);
  last_phi_ = phi;
  return phi;
}

void Swarm::push_history(const Eigen::VectorXd& phi, const Eigen::VectorXd& v) {
  phi_hist_.push_back(phi);
  v_hist_.push_back(v);
  const std::size_t keep = static_cast<std::size_t>(cfg_.tau) + 2;
  while (phi_hist_.size() > keep) phi_hist_.pop_front();
  while (v_hist_.size() > keep) v_hist_.pop_front();
}

void Swarm::step() {
  if (queue_protocol_) {
    step_distributed();
  } else {
    step_centralized();
  }
  ++k_;
}

void Swarm::step_distributed() {
  const int tau = cfg_.tau;
  const Eigen::VectorXd v = draw_online();
  const Eigen::VectorXd phi = probe_and_evaluate(v);
  push_history(phi, v);

  // Consensus over the pre-append queues, synchronously for all agents.
  // Each agent transmits its tau queue entries to every neighbor.
  for (int l = 0; l < tau; ++l) {
    for (int i = 0; i < n_; ++i) {
      double acc = weights_.w(i, i) * agents_[i].queue[l];
      for (int j : neighbors_[i]) {
        acc += weights_.w(i, j) * agents_[j].queue[l];
        ++scalars_transmitted_;
      }
      consensus_scratch_(i) = acc;
    }
    for (int i = 0; i < n_; ++i) agents_[i].queue[l] = consensus_scratch_(i);
  }

  last_delta_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    AgentState& a = agents_[i];
    a.queue.push_back(phi(i));  // queue transiently holds tau + 1 entries
    const double front = a.queue.front();
    a.exploration.push_back(v(i));
    if (a.exploration.empty()) {
      throw Error("agent " + std::to_string(i) + " desynchronized: exploration scalar evicted");
    }
    const double s = a.exploration.front();
    a.exploration.pop_front();
    const double delta_i = (k_ == 0) ? front * s : (front - a.prev_front) * s;
    last_delta_(i) = delta_i;
    double next = a.input - (cfg_.eta / cfg_.delta) * delta_i;
    if (cfg_.mode == UpdateMode::projected) next = cfg_.constraint.project(i, next);
    a.input = next;
    a.prev_front = front;
    a.queue.erase(a.queue.begin());
  }

  last_e_norm_ = std::numeric_limits<double>::quiet_NaN();
  if (k_ >= tau + 1) {
    const auto dec = last_decomposition();
    last_e_norm_ = dec ? dec->consensus_error.norm() : last_e_norm_;
  }
}

void Swarm::step_centralized() {
  const Eigen::VectorXd v = draw_online();
  const Eigen::VectorXd phi = probe_and_evaluate(v);
  push_history(phi, v);
  const double mean = phi.mean();
  const Eigen::VectorXd grad = residual_feedback_estimate(mean, prev_mean_, cfg_.delta, v);
  last_delta_ = cfg_.delta * grad;  // Delta_k in the queue protocol's convention
  for (int i = 0; i < n_; ++i) {
    double next = agents_[i].input - cfg_.eta * grad(i);
    if (cfg_.mode == UpdateMode::projected) next = cfg_.constraint.project(i, next);
    agents_[i].input = next;
  }
  prev_mean_ = mean;
  last_e_norm_ = 0.0;  // exact averaging: the deviation operator vanishes
}

Eigen::VectorXd Swarm::inputs() const {
  Eigen::VectorXd u(n_);
  for (int i = 0; i < n_; ++i) u(i) = agents_[i].input;
  return u;
}

double Swarm::last_objective(bool average) const {
  if (last_phi_.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const double sum = last_phi_.sum();
  return average ? sum / n_ : sum;
}

std::optional<Swarm::Decomposition> Swarm::last_decomposition() const {
  // Values refer to the most recent completed or in-progress iteration k:
  // histories then hold phi_{k-tau-1} .. phi_k and v likewise.
  if (!queue_protocol_) {
    if (phi_hist_.size() < 2) return std::nullopt;
    const double diff = phi_hist_.back().mean() - phi_hist_[phi_hist_.size() - 2].mean();
    Decomposition dec;
    dec.grad_estimate = (diff / cfg_.delta) * v_hist_.back();
    dec.consensus_error = Eigen::VectorXd::Zero(n_);
    return dec;
  }
  const std::size_t need = static_cast<std::size_t>(cfg_.tau) + 2;
  if (phi_hist_.size() < need) return std::nullopt;
  const Eigen::VectorXd diff = phi_hist_[1] - phi_hist_[0];
  const Eigen::VectorXd& v = v_hist_[1];
  Decomposition dec;
  dec.grad_estimate = ((diff.mean() / cfg_.delta) * v);
  dec.consensus_error = (deviation_ * diff).cwiseProduct(v) / cfg_.delta;
  return dec;
}

RunTrace run_controller(const ControllerConfig& cfg, SteadyStateMap& plant,
                        std::vector<LocalObjective> objectives, const WeightMatrix& weights,
                        const Eigen::VectorXd& u0, const Eigen::VectorXd* u_star,
                        bool average_objective) {
  Swarm swarm(cfg, plant, std::move(objectives), weights, u0);
  const long horizon = cfg.horizon;
  const double star_norm = u_star ? u_star->norm() : 0.0;

  RunTrace trace;
  trace.rows.reserve(horizon + 1);
  trace.meta.seed = cfg.seed;
  if (u_star) {
    trace.meta.u_star = *u_star;
    trace.meta.u_star_norm = star_norm;
  }

  auto rel_err = [&](const Eigen::VectorXd& u) {
    if (!u_star) return std::numeric_limits<double>::quiet_NaN();
    const double dist = (u - *u_star).norm();
    return star_norm > 1e-15 ? dist / star_norm : dist;
  };

  for (long k = 0; k < horizon; ++k) {
    TraceRow row;
    row.k = k;
    row.input = swarm.inputs();
    row.rel_err = rel_err(row.input);
    swarm.step();
    row.probe = swarm.last_probe();
    row.objective = swarm.last_objective(average_objective);
    row.e_norm = swarm.last_e_norm();
    if (cfg.mode == UpdateMode::projected) {
      trace.meta.max_input_violation =
          std::max(trace.meta.max_input_violation, cfg.constraint.max_violation(row.input));
      trace.meta.max_probe_violation =
          std::max(trace.meta.max_probe_violation, cfg.constraint.max_violation(row.probe));
    }
    trace.rows.push_back(std::move(row));
  }
  TraceRow last;
  last.k = horizon;
  last.input = swarm.inputs();
  last.rel_err = rel_err(last.input);
  if (cfg.mode == UpdateMode::projected) {
    trace.meta.max_input_violation =
        std::max(trace.meta.max_input_violation, cfg.constraint.max_violation(last.input));
  }
  trace.rows.push_back(std::move(last));

  trace.meta.probe_count = swarm.probe_count();
  trace.meta.scalars_transmitted = swarm.scalars_transmitted();
  return trace;
}

double RunTrace::plateau_rel_err(double fraction) const {
  const long t = horizon();
  long window = std::max<long>(1, static_cast<long>(std::ceil(fraction * t)));
  window = std::min<long>(window, static_cast<long>(rows.size()));
  double sum = 0.0;
  long count = 0;
  for (std::size_t i = rows.size() - window; i < rows.size(); ++i) {
    sum += rows[i].rel_err;
    ++count;
  }
  return sum / count;
}

double RunTrace::final_rel_err() const { return rows.back().rel_err; }

}  // namespace ofo
