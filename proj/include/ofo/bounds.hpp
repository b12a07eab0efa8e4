// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ofo/graph.hpp"
#include "ofo/objective.hpp"
#include "ofo/plant.hpp"

namespace ofo {

/// Everything the closed-form bounds consume. Regularity constants are
/// post-scaling; e0 is an estimate of the initial second moment
/// E||grad_estimate(u0) + e0||^2.
struct BoundInputs {
  int n = 0;
  int tau = 1;
  double eta = 0.0;
  double delta = 0.0;
  double tr_w2tau = 1.0;
  double tr_dev2 = 0.0;
  double lambda2 = 0.0;
  Eigen::VectorXd w_spectrum;  // optional; enables re-evaluation at other tau
  double l0 = 0.0;
  double l1 = 0.0;
  double m = 0.0;
  double e0 = 0.0;
  double diameter = std::numeric_limits<double>::infinity();  // D_U

  double alpha() const;         // 4 N L0^2 eta^2 tr[W^2tau] / delta^2
  double eta_limit() const;     // delta / sqrt(4 N L0^2 tr[W^2tau])
  bool step_size_ok() const;    // alpha < 1
  BoundInputs with_tau(int tau) const;  // re-derives spectral scalars (needs w_spectrum)

  static BoundInputs from_weights(const WeightMatrix& w, const RegularityConstants& constants,
                                  double eta, double delta);
};

struct Lemma1Constants {
  double alpha = 0.0;
  double r = 0.0;    // bound on E||grad_estimate + e||^2
  double r_f = 0.0;  // bound on E||grad_estimate||^2
  double r_e = 0.0;  // bound on E||e||^2
};

/// Second-moment constants; requires the step-size condition (alpha < 1).
Lemma1Constants lemma1_constants(const BoundInputs& in);

struct Theorem1Bound {
  double rho = 0.0;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double p_eta = 0.0;
  double limit = 0.0;  // p(eta) / (1 - rho)
  bool vacuous = false;  // rho >= 1 (eta outside (0, (m-1)/m))
  int tau = 1;

  /// RHS of the squared-distance bound at iteration k >= tau + 1.
  double curve(long k, double init_gap_sq) const;
};

/// Unconstrained convergence bound; requires m > 1 and the step-size condition.
Theorem1Bound theorem1_bound(const BoundInputs& in);

struct CorollarySelection {
  double eta_eps = 0.0;
  double delta_eps = 0.0;
  int tau_min = 1;
  double achieved = 0.0;  // p(eta_eps)/(1 - rho) at the selected parameters
  int rounds = 0;         // fixed-point iterations used
};

/// Parameter selection driving the limiting error below epsilon. eta, delta
/// and tau are mutually coupled through tr[W^2tau] and R_f; the coupled
/// system is resolved by fixed-point iteration and verified a posteriori.
CorollarySelection corollary1_select(double epsilon, const BoundInputs& in);

struct Theorem2Bound {
  double rho_prime = 0.0;
  double r_prime = 0.0;
  double limit = 0.0;  // eta R' / (1 - rho')
  bool vacuous = false;
  int tau = 1;

  /// RHS of the first-moment bound at iteration k >= tau + 1.
  double curve(long k, double init_gap) const;
};

/// Constrained (projected) convergence bound; requires a bounded box.
Theorem2Bound theorem2_bound(const BoundInputs& in);

struct E0Estimate {
  double value = 0.0;      // max cell mean + 3 standard errors
  double max_mean = 0.0;   // max over (p, q) cells of the sample mean
  double max_se = 0.0;     // standard error of the max cell
  int samples = 0;
  std::string method = "monte_carlo";
};

/// Monte Carlo estimate of E||grad_estimate(u0) + e0||^2 =
/// max_{p,q in [tau]} E||(1/delta)(W^p phi0 - W^q phi0_init) (.) v0||^2 over
/// fresh (v0, v0_init) pairs.
E0Estimate estimate_e0(SteadyStateMap& plant, const std::vector<LocalObjective>& objectives,
                       const WeightMatrix& weights, const Eigen::VectorXd& u0, double delta,
                       int tau, int sample_count, std::uint64_t seed);

/// Full evaluation summary: Lemma 1 constants, both theorem bounds where
/// applicable, corollary selections, and provenance notes.
struct BoundReport {
  BoundInputs inputs;
  Lemma1Constants lemma1;
  bool has_theorem1 = false;
  Theorem1Bound theorem1;
  bool has_theorem2 = false;
  Theorem2Bound theorem2;
  std::vector<std::pair<double, CorollarySelection>> corollary;  // epsilon -> selection
  std::map<std::string, std::string> provenance;
  std::vector<std::string> violations;  // hypothesis failures, if any

  bool hypotheses_ok() const { return violations.empty(); }
  std::string to_text() const;  // key = value lines
};

}  // namespace ofo
