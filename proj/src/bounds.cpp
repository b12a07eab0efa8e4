// SPDX-License-Identifier: Apache-2.0
#include "ofo/bounds.hpp"

#include <cmath>
#include <sstream>

#include "ofo/errors.hpp"
#include "ofo/rng.hpp"

namespace ofo {

double BoundInputs::alpha() const {
  return 4.0 * n * l0 * l0 * eta * eta * tr_w2tau / (delta * delta);
}

double BoundInputs::eta_limit() const {
  return delta / std::sqrt(4.0 * n * l0 * l0 * tr_w2tau);
}

bool BoundInputs::step_size_ok() const { return eta > 0.0 && alpha() < 1.0; }

BoundInputs BoundInputs::with_tau(int new_tau) const {
  if (w_spectrum.size() == 0) {
    throw Error("with_tau needs the weight-matrix spectrum");
  }
  BoundInputs out = *this;
  out.tau = new_tau;
  out.tr_w2tau = 0.0;
  out.tr_dev2 = 0.0;
  for (int i = 0; i < w_spectrum.size(); ++i) {
    const double term = std::pow(w_spectrum(i), 2 * new_tau);
    out.tr_w2tau += term;
    if (i >= 1) out.tr_dev2 += term;
  }
  return out;
}

BoundInputs BoundInputs::from_weights(const WeightMatrix& w, const RegularityConstants& constants,
                                      double eta, double delta) {
  BoundInputs in;
  in.n = w.node_count();
  in.tau = w.tau;
  in.eta = eta;
  in.delta = delta;
  in.tr_w2tau = w.tr_w2tau;
  in.tr_dev2 = w.tr_dev2;
  in.lambda2 = w.lambda2;
  in.w_spectrum = w.spectrum;
  in.l0 = constants.l0;
  in.l1 = constants.l1;
  in.m = constants.m;
  return in;
}

Lemma1Constants lemma1_constants(const BoundInputs& in) {
  const double alpha = in.alpha();
  if (!(in.eta > 0.0) || alpha >= 1.0) {
    throw StepSizeConditionViolated("eta = " + std::to_string(in.eta) +
                                    " violates eta < " + std::to_string(in.eta_limit()) +
                                    " (alpha = " + std::to_string(alpha) + ")");
  }
  const double np4sq = (in.n + 4.0) * (in.n + 4.0);
  Lemma1Constants c;
  c.alpha = alpha;
  c.r = in.e0 / alpha + 16.0 * in.l0 * in.l0 * in.tr_w2tau * np4sq / (1.0 - alpha);
  c.r_f = alpha * c.r / (2.0 * in.tr_w2tau) + 8.0 * in.l0 * in.l0 * np4sq;
  c.r_e = in.tr_dev2 * c.r_f;
  return c;
}

namespace {

struct PolyConstants {
  double a1, a2, a3;
};

PolyConstants eq11_constants(const BoundInputs& in, const Lemma1Constants& c) {
  PolyConstants a;
  a.a1 = 2.0 * in.m * in.tau * c.r;
  a.a2 = 2.0 * in.tau * in.l0 * std::sqrt(c.r) + in.delta * in.delta * in.l1 * in.l1 * in.n +
         2.0 * in.tau * c.r + 4.0 * c.r_f + in.m * in.tau * c.r + c.r;
  a.a3 = c.r_e + in.l1 * in.delta * in.delta * in.n;
  return a;
}

}  // namespace

Theorem1Bound theorem1_bound(const BoundInputs& in) {
  if (!(in.m > 1.0)) {
    throw RequiresStrongConvexityAboveOne(
        "m = " + std::to_string(in.m) +
        " <= 1; rescale the objectives (the minimizer is scale-invariant)");
  }
  const Lemma1Constants c = lemma1_constants(in);
  const PolyConstants a = eq11_constants(in, c);
  Theorem1Bound b;
  b.tau = in.tau;
  b.rho = 1.0 - (in.m - 1.0) * in.eta + in.m * in.eta * in.eta;
  b.a1 = a.a1;
  b.a2 = a.a2;
  b.a3 = a.a3;
  b.p_eta = in.eta * (a.a3 + in.eta * (a.a2 + in.eta * a.a1));
  b.vacuous = !(b.rho < 1.0) || in.eta <= 0.0;
  b.limit = b.vacuous ? std::numeric_limits<double>::infinity() : b.p_eta / (1.0 - b.rho);
  return b;
}

double Theorem1Bound::curve(long k, double init_gap_sq) const {
  if (vacuous) return std::numeric_limits<double>::infinity();
  return std::pow(rho, static_cast<double>(k - tau - 1)) * init_gap_sq + limit;
}

CorollarySelection corollary1_select(double epsilon, const BoundInputs& in) {
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  if (!(in.m > 1.0)) {
    throw RequiresStrongConvexityAboveOne("corollary selection needs m > 1");
  }
  if (in.n < 2) throw Error("corollary selection needs N >= 2");

  // eta_eps, delta and tau are simultaneous conditions: tr[W^2tau] and R_f
  // feed eta_eps, which feeds delta, which feeds R_f again. Iterate to a
  // fixed point in tau (the outer coupling) with an inner pass for delta.
  int tau = std::max(1, in.tau);
  CorollarySelection sel;
  const int max_rounds = 100;
  for (int round = 1; round <= max_rounds; ++round) {
    BoundInputs cur = in.with_tau(tau);
    const double tr = cur.tr_w2tau;

    // delta enters a2/a3 only through delta^2 terms of order eta^2; start
    // from delta = 0 and refine.
    double eta_eps = 0.0;
    double delta_eps = 0.0;
    double r_f = 0.0;
    for (int pass = 0; pass < 25; ++pass) {
      cur.delta = delta_eps > 0.0 ? delta_eps : in.delta;
      // Fix alpha = 1/4 as the displayed delta formula implies, so the
      // Lemma constants do not depend on the provisional eta.
      cur.eta = cur.delta / (2.0 * std::sqrt(4.0 * cur.n * cur.l0 * cur.l0 * tr));
      const Lemma1Constants c = lemma1_constants(cur);
      const PolyConstants a = eq11_constants(cur, c);
      r_f = c.r_f;
      const double quad = 2.0 * a.a1 + 32.0 * cur.n * cur.n * cur.l1 * cur.l0 * cur.l0 * tr;
      const double b_lin = a.a2 + 0.5 * epsilon * cur.m;
      const double disc = b_lin * b_lin + quad * (cur.m - 1.0) * epsilon;
      if (disc < 0.0) throw EpsilonTooLarge("negative discriminant in eta selection");
      const double next_eta = (std::sqrt(disc) - b_lin) / quad;
      if (!(next_eta > 0.0)) throw EpsilonTooLarge("selected eta is not positive");
      const double next_delta = 2.0 * std::sqrt(4.0 * cur.n * cur.l0 * cur.l0 * tr) * next_eta;
      const bool settled = std::abs(next_eta - eta_eps) <= 1e-15 + 1e-12 * next_eta;
      eta_eps = next_eta;
      delta_eps = next_delta;
      if (settled) break;
    }
    if (!(in.m - 1.0 - in.m * eta_eps > 0.0)) {
      throw EpsilonTooLarge("epsilon admits no eta with m - 1 - m eta > 0");
    }

    // tau > ln((m-1-m eta) eps / (2 R_f (N-1))) / ln(lambda2^2)
    int next_tau = 1;
    const double arg = (in.m - 1.0 - in.m * eta_eps) * epsilon / (2.0 * r_f * (in.n - 1.0));
    if (in.lambda2 > 0.0 && arg < 1.0) {
      const double threshold = std::log(arg) / std::log(in.lambda2 * in.lambda2);
      next_tau = static_cast<int>(std::floor(threshold)) + 1;
      next_tau = std::max(next_tau, 1);
    }
    sel.eta_eps = eta_eps;
    sel.delta_eps = delta_eps;
    sel.tau_min = next_tau;
    sel.rounds = round;
    if (next_tau == tau) break;
    tau = next_tau;
    if (round == max_rounds) {
      throw FixedPointDiverged("tau selection did not stabilize in 100 rounds");
    }
  }

  // a-posteriori verification at the selected parameters
  BoundInputs chosen = in.with_tau(sel.tau_min);
  chosen.eta = sel.eta_eps;
  chosen.delta = sel.delta_eps;
  const Theorem1Bound verify = theorem1_bound(chosen);
  sel.achieved = verify.limit;
  if (!(sel.achieved < epsilon)) {
    throw EpsilonTooLarge("post-hoc check failed: p(eta)/(1-rho) = " +
                          std::to_string(sel.achieved) + " >= " + std::to_string(epsilon));
  }
  return sel;
}

Theorem2Bound theorem2_bound(const BoundInputs& in) {
  if (!std::isfinite(in.diameter)) {
    throw UnboundedConstraintSet("the projected bound needs a bounded constraint set");
  }
  if (!in.step_size_ok()) {
    throw StepSizeConditionViolated("eta = " + std::to_string(in.eta) + " violates eta < " +
                                    std::to_string(in.eta_limit()));
  }
  Theorem2Bound b;
  b.tau = in.tau;
  const double inner = 1.0 - 2.0 * in.m * in.eta + in.l1 * in.l1 * in.eta * in.eta;
  b.rho_prime = std::sqrt(std::max(inner, 0.0));
  b.r_prime =
      2.0 * in.l0 +
      4.0 * in.l0 *
          std::sqrt(in.tr_w2tau *
                    (in.n * in.diameter / (in.delta * in.delta) + 4.0 * (in.n + 4.0) * (in.n + 4.0)));
  b.vacuous = !(b.rho_prime < 1.0);
  b.limit = b.vacuous ? std::numeric_limits<double>::infinity()
                      : in.eta * b.r_prime / (1.0 - b.rho_prime);
  return b;
}

double Theorem2Bound::curve(long k, double init_gap) const {
  if (vacuous) return std::numeric_limits<double>::infinity();
  return std::pow(rho_prime, static_cast<double>(k - tau - 1)) * init_gap + limit;
}

E0Estimate estimate_e0(SteadyStateMap& plant, const std::vector<LocalObjective>& objectives,
                       const WeightMatrix& weights, const Eigen::VectorXd& u0, double delta,
                       int tau, int sample_count, std::uint64_t seed) {
  const int n = plant.dimension();
  if (static_cast<int>(objectives.size()) != n || u0.size() != n) {
    throw Error("dimension mismatch in e0 estimation");
  }
  if (tau < 1) throw Error("tau must be >= 1");
  if (sample_count < 2) throw Error("sample_count must be at least 2");

  GaussianStream stream(derive_seed(seed, stream::kSampler, 0xe0));
  auto evaluate = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd probe = u0 + delta * v;
    const Eigen::VectorXd y = plant.measure(probe);
    Eigen::VectorXd phi(n);
    for (int i = 0; i < n; ++i) phi(i) = objectives[i](probe(i), y(i));
    return phi;
  };

  // cell (p, q), p, q in 1..tau: mean/variance accumulators (Welford)
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(tau, tau);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(tau, tau);
  std::vector<Eigen::VectorXd> wp_phi(tau), wq_init(tau);
  for (int s = 1; s <= sample_count; ++s) {
    Eigen::VectorXd v0(n), v0_init(n);
    for (int i = 0; i < n; ++i) v0(i) = stream.next();
    for (int i = 0; i < n; ++i) v0_init(i) = stream.next();
    const Eigen::VectorXd phi0 = evaluate(v0);
    const Eigen::VectorXd phi0_init = evaluate(v0_init);
    Eigen::VectorXd acc_phi = phi0, acc_init = phi0_init;
    for (int p = 0; p < tau; ++p) {
      acc_phi = weights.w * acc_phi;
      acc_init = weights.w * acc_init;
      wp_phi[p] = acc_phi;
      wq_init[p] = acc_init;
    }
    for (int p = 0; p < tau; ++p) {
      for (int q = 0; q < tau; ++q) {
        const double norm2 = ((wp_phi[p] - wq_init[q]).cwiseProduct(v0) / delta).squaredNorm();
        const double d1 = norm2 - mean(p, q);
        mean(p, q) += d1 / s;
        m2(p, q) += d1 * (norm2 - mean(p, q));
      }
    }
  }

  E0Estimate out;
  out.samples = sample_count;
  for (int p = 0; p < tau; ++p) {
    for (int q = 0; q < tau; ++q) {
      if (mean(p, q) >= out.max_mean) {
        out.max_mean = mean(p, q);
        out.max_se = std::sqrt(m2(p, q) / (sample_count - 1.0) / sample_count);
      }
    }
  }
  out.value = out.max_mean + 3.0 * out.max_se;
  return out;
}

std::string BoundReport::to_text() const {
  std::ostringstream os;
  os.precision(12);
  auto line = [&os](const std::string& key, auto value) { os << key << " = " << value << "\n"; };
  line("n", inputs.n);
  line("tau", inputs.tau);
  line("eta", inputs.eta);
  line("delta", inputs.delta);
  line("l0", inputs.l0);
  line("l1", inputs.l1);
  line("m", inputs.m);
  line("e0", inputs.e0);
  line("tr_w2tau", inputs.tr_w2tau);
  line("tr_dev2", inputs.tr_dev2);
  line("lambda2", inputs.lambda2);
  line("alpha", lemma1.alpha);
  line("step_size_ok", inputs.step_size_ok() ? "true" : "false");
  line("eta_limit", inputs.eta_limit());
  line("r", lemma1.r);
  line("r_f", lemma1.r_f);
  line("r_e", lemma1.r_e);
  if (has_theorem1) {
    line("rho", theorem1.rho);
    line("a1", theorem1.a1);
    line("a2", theorem1.a2);
    line("a3", theorem1.a3);
    line("p_eta", theorem1.p_eta);
    line("limit_unconstrained", theorem1.limit);
  }
  if (has_theorem2) {
    line("rho_prime", theorem2.rho_prime);
    line("r_prime", theorem2.r_prime);
    line("d_u", inputs.diameter);
    line("limit_constrained", theorem2.limit);
  }
  for (const auto& [eps, sel] : corollary) {
    os << "corollary[eps=" << eps << "] = eta " << sel.eta_eps << ", delta " << sel.delta_eps
       << ", tau_min " << sel.tau_min << ", achieved " << sel.achieved << "\n";
  }
  for (const auto& [k, v] : provenance) line("provenance." + k, v);
  for (const auto& v : violations) line("violation", v);
  return os.str();
}

}  // namespace ofo
