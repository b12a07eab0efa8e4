// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ofo/plant.hpp"

namespace ofo {

/// Per-agent objective phi_i(u_i, y_i), evaluated from the agent's own input
/// component and measured output. Evaluators are pure and safe to share.
class LocalObjective {
 public:
  /// Quadratic tracking form scale * 1/2 (u^2 + (y - y_ref)^2).
  static LocalObjective tracking(double y_ref, double scale = 1.0);
  static LocalObjective custom(std::function<double(double, double)> eval, double scale = 1.0);

  double operator()(double u, double y) const { return scale_ * eval_(u, y); }
  double scale() const { return scale_; }
  void set_scale(double scale);
  bool is_tracking() const { return tracking_; }
  double y_ref() const { return y_ref_; }

 private:
  LocalObjective() = default;
  std::function<double(double, double)> eval_;
  double scale_ = 1.0;
  double y_ref_ = 0.0;
  bool tracking_ = false;
};

std::vector<LocalObjective> tracking_objectives(const Eigen::VectorXd& y_ref, double scale = 1.0);

/// Per-coordinate interval constraints [lo_i, hi_i]; entries may be infinite.
class BoxConstraint {
 public:
  BoxConstraint() = default;  // zero-dimensional placeholder
  BoxConstraint(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static BoxConstraint uniform(int n, double lower, double upper);
  static BoxConstraint unbounded(int n);

  int dimension() const { return static_cast<int>(lower_.size()); }
  bool bounded() const;
  /// D_U = sqrt(sum_i (hi_i - lo_i)^2); +inf when any interval is unbounded.
  double diameter() const;
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  double project(int i, double u) const;
  Eigen::VectorXd project(const Eigen::VectorXd& u) const;
  bool contains(const Eigen::VectorXd& u) const;
  /// Largest componentwise bound violation (0 when feasible).
  double max_violation(const Eigen::VectorXd& u) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

/// Reduced objective evaluated through plant measurements. Used for value
/// reporting and Monte Carlo checks, not by the controller's update path.
class ReducedObjective {
 public:
  ReducedObjective(SteadyStateMap& plant, std::vector<LocalObjective> locals, bool average);

  int dimension() const { return static_cast<int>(locals_.size()); }
  bool average() const { return average_; }

  Eigen::VectorXd per_agent(const Eigen::VectorXd& u);  // one plant probe
  double value(const Eigen::VectorXd& u);
  double value_from(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const;

 private:
  SteadyStateMap& plant_;
  std::vector<LocalObjective> locals_;
  bool average_ = false;
};

/// Closed-form reduced objective for the quadratic tracking family over an
/// affine plant y = H u + b:
///   phi_i(u) = scale * 1/2 (u_i^2 + ((H u + b)_i - y_ref_i)^2),
/// with global value (1/nu) sum_i phi_i, nu = N when averaged, else 1.
/// This is the oracle route used by tests, the bounds calculator, and the
/// optimum solver; the controller never touches it.
class QuadraticReduced {
 public:
  QuadraticReduced(Eigen::MatrixXd sensitivity, Eigen::VectorXd offset, Eigen::VectorXd y_ref,
                   double scale, bool average);

  int dimension() const { return static_cast<int>(offset_.size()); }
  double scale() const { return scale_; }
  bool average() const { return average_; }
  void set_scale(double scale);

  double value(const Eigen::VectorXd& u) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd hessian() const;  // (scale/nu)(I + H^T H)
  /// Gradient of a single agent's reduced objective in the full input
  /// (scale applied, no 1/nu).
  Eigen::VectorXd agent_gradient(int i, const Eigen::VectorXd& u) const;
  /// Gaussian-smoothed value: value + (delta^2/2) tr(hessian).
  double smoothed_value(const Eigen::VectorXd& u, double delta) const;
  Eigen::VectorXd minimizer_unconstrained() const;

  const Eigen::MatrixXd& sensitivity() const { return sensitivity_; }
  const Eigen::VectorXd& offset() const { return offset_; }
  const Eigen::VectorXd& y_ref() const { return y_ref_; }
  std::vector<LocalObjective> locals() const;

 private:
  Eigen::MatrixXd sensitivity_;
  Eigen::VectorXd offset_;
  Eigen::VectorXd y_ref_;
  double scale_ = 1.0;
  bool average_ = false;
};

/// Region over which Lipschitz/smoothness constants are certified.
struct Region {
  Eigen::VectorXd center;
  double radius = 0.0;
  static Region ball(Eigen::VectorXd center, double radius);
  /// Enclosing ball of a bounded box; throws UnboundedRegion otherwise.
  static Region enclosing(const BoxConstraint& box);
  std::string describe() const;
};

struct RegularityConstants {
  double l0 = 0.0;  // Lipschitz constant of the per-agent reduced objectives
  double l1 = 0.0;  // smoothness of the averaged reduced objective
  double m = 0.0;   // strong-convexity modulus of the averaged reduced objective
  double scale = 1.0;
  bool exact = true;
  std::string region;
};

/// Exact constants for the quadratic family. The region is inflated by
/// 6 delta sqrt(N) so exploration perturbations stay covered. m and L1 come
/// from the extreme eigenvalues of the averaged Hessian (1/N) scale (I+H^T H);
/// L0 bounds the per-agent gradients over the inflated region.
RegularityConstants estimate_constants(const QuadraticReduced& model, const Region& region,
                                       double delta);

/// Sampled estimates for black-box reduced objectives (finite differences at
/// random points in the region). Flagged exact = false.
RegularityConstants estimate_constants_sampled(
    const std::function<double(const Eigen::VectorXd&, int)>& local_reduced, int n,
    const Region& region, double delta, int sample_count, std::uint64_t seed);

/// Multiplier that lifts the strong-convexity modulus above 1 while leaving
/// the minimizer unchanged: ceil(1/m) + 1 when m <= 1, else 1.
double strong_convexity_rescale(double m);

}  // namespace ofo
