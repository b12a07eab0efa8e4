// SPDX-License-Identifier: Apache-2.0
#include "ofo/objective.hpp"

#include <cmath>
#include <limits>

#include "ofo/errors.hpp"
#include "ofo/rng.hpp"

namespace ofo {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LocalObjective LocalObjective::tracking(double y_ref, double scale) {
  LocalObjective obj;
  obj.eval_ = [y_ref](double u, double y) {
    const double r = y - y_ref;
    return 0.5 * (u * u + r * r);
  };
  obj.scale_ = scale;
  obj.y_ref_ = y_ref;
  obj.tracking_ = true;
  return obj;
}

LocalObjective LocalObjective::custom(std::function<double(double, double)> eval, double scale) {
  LocalObjective obj;
  obj.eval_ = std::move(eval);
  obj.scale_ = scale;
  return obj;
}

void LocalObjective::set_scale(double scale) {
  if (scale <= 0.0) throw Error("objective scale must be positive");
  scale_ = scale;
}

std::vector<LocalObjective> tracking_objectives(const Eigen::VectorXd& y_ref, double scale) {
  std::vector<LocalObjective> locals;
  locals.reserve(y_ref.size());
  for (int i = 0; i < y_ref.size(); ++i) locals.push_back(LocalObjective::tracking(y_ref(i), scale));
  return locals;
}

BoxConstraint::BoxConstraint(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw Error("box bounds have different lengths");
  for (int i = 0; i < lower_.size(); ++i) {
    if (lower_(i) > upper_(i)) {
      throw Error("box bound lo > hi at coordinate " + std::to_string(i));
    }
  }
}

BoxConstraint BoxConstraint::uniform(int n, double lower, double upper) {
  return BoxConstraint(Eigen::VectorXd::Constant(n, lower), Eigen::VectorXd::Constant(n, upper));
}

BoxConstraint BoxConstraint::unbounded(int n) {
  return BoxConstraint(Eigen::VectorXd::Constant(n, -kInf), Eigen::VectorXd::Constant(n, kInf));
}

bool BoxConstraint::bounded() const {
  if (dimension() == 0) return false;
  return lower_.allFinite() && upper_.allFinite();
}

double BoxConstraint::diameter() const {
  if (!bounded()) return kInf;
  return (upper_ - lower_).norm();
}

double BoxConstraint::project(int i, double u) const {
  return std::min(std::max(u, lower_(i)), upper_(i));
}

Eigen::VectorXd BoxConstraint::project(const Eigen::VectorXd& u) const {
  return u.cwiseMax(lower_).cwiseMin(upper_);
}

bool BoxConstraint::contains(const Eigen::VectorXd& u) const {
  return max_violation(u) == 0.0;
}

double BoxConstraint::max_violation(const Eigen::VectorXd& u) const {
  double v = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    v = std::max(v, std::max(lower_(i) - u(i), u(i) - upper_(i)));
  }
  return std::max(v, 0.0);
}

ReducedObjective::ReducedObjective(SteadyStateMap& plant, std::vector<LocalObjective> locals,
                                   bool average)
    : plant_(plant), locals_(std::move(locals)), average_(average) {
  if (static_cast<int>(locals_.size()) != plant_.dimension()) {
    throw Error("one local objective per plant node required");
  }
}

Eigen::VectorXd ReducedObjective::per_agent(const Eigen::VectorXd& u) {
  const Eigen::VectorXd y = plant_.measure(u);
  Eigen::VectorXd phi(dimension());
  for (int i = 0; i < dimension(); ++i) phi(i) = locals_[i](u(i), y(i));
  return phi;
}

double ReducedObjective::value(const Eigen::VectorXd& u) {
  const double sum = per_agent(u).sum();
  return average_ ? sum / dimension() : sum;
}

double ReducedObjective::value_from(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const {
  double sum = 0.0;
  for (int i = 0; i < dimension(); ++i) sum += locals_[i](u(i), y(i));
  return average_ ? sum / dimension() : sum;
}

QuadraticReduced::QuadraticReduced(Eigen::MatrixXd sensitivity, Eigen::VectorXd offset,
                                   Eigen::VectorXd y_ref, double scale, bool average)
    : sensitivity_(std::move(sensitivity)),
      offset_(std::move(offset)),
      y_ref_(std::move(y_ref)),
      scale_(scale),
      average_(average) {
  const int n = dimension();
  if (sensitivity_.rows() != n || sensitivity_.cols() != n || y_ref_.size() != n) {
    throw Error("quadratic model dimensions disagree");
  }
  if (scale_ <= 0.0) throw Error("objective scale must be positive");
}

void QuadraticReduced::set_scale(double scale) {
  if (scale <= 0.0) throw Error("objective scale must be positive");
  scale_ = scale;
}

double QuadraticReduced::value(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd r = sensitivity_ * u + offset_ - y_ref_;
  const double sum = 0.5 * scale_ * (u.squaredNorm() + r.squaredNorm());
  return average_ ? sum / dimension() : sum;
}

Eigen::VectorXd QuadraticReduced::gradient(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd r = sensitivity_ * u + offset_ - y_ref_;
  Eigen::VectorXd g = scale_ * (u + sensitivity_.transpose() * r);
  if (average_) g /= dimension();
  return g;
}

Eigen::MatrixXd QuadraticReduced::hessian() const {
  const int n = dimension();
  Eigen::MatrixXd h =
      scale_ * (Eigen::MatrixXd::Identity(n, n) + sensitivity_.transpose() * sensitivity_);
  if (average_) h /= n;
  return h;
}

Eigen::VectorXd QuadraticReduced::agent_gradient(int i, const Eigen::VectorXd& u) const {
  const double r = sensitivity_.row(i).dot(u) + offset_(i) - y_ref_(i);
  Eigen::VectorXd g = r * sensitivity_.row(i).transpose();
  g(i) += u(i);
  return scale_ * g;
}

double QuadraticReduced::smoothed_value(const Eigen::VectorXd& u, double delta) const {
  return value(u) + 0.5 * delta * delta * hessian().trace();
}

Eigen::VectorXd QuadraticReduced::minimizer_unconstrained() const {
  const int n = dimension();
  const Eigen::MatrixXd normal =
      Eigen::MatrixXd::Identity(n, n) + sensitivity_.transpose() * sensitivity_;
  return normal.ldlt().solve(sensitivity_.transpose() * (y_ref_ - offset_));
}

std::vector<LocalObjective> QuadraticReduced::locals() const {
  return tracking_objectives(y_ref_, scale_);
}

Region Region::ball(Eigen::VectorXd center, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw UnboundedRegion("region radius must be finite and nonnegative");
  }
  return Region{std::move(center), radius};
}

Region Region::enclosing(const BoxConstraint& box) {
  if (!box.bounded()) throw UnboundedRegion("constraint box is unbounded");
  return Region{(box.lower() + box.upper()) / 2.0, 0.5 * box.diameter()};
}

std::string Region::describe() const {
  return "ball(radius=" + std::to_string(radius) + ")";
}

RegularityConstants estimate_constants(const QuadraticReduced& model, const Region& region,
                                       double delta) {
  const int n = model.dimension();
  if (region.center.size() != n) throw Error("region center has wrong dimension");
  const double radius = region.radius + 6.0 * delta * std::sqrt(static_cast<double>(n));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.hessian());
  RegularityConstants out;
  out.m = eig.eigenvalues().minCoeff();
  out.l1 = eig.eigenvalues().maxCoeff();

  // Per-agent gradients are affine in u, so over a ball the norm is bounded
  // by the value at the center plus the agent Hessian norm times the radius.
  double l0 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g0 = model.agent_gradient(i, region.center).norm();
    const double row_sq = model.sensitivity().row(i).squaredNorm();
    const double hess_norm = model.scale() * (1.0 + row_sq);
    l0 = std::max(l0, g0 + hess_norm * radius);
  }
  out.l0 = l0;
  out.scale = model.scale();
  out.exact = true;
  out.region = region.describe() + "+6*delta*sqrt(N)";
  return out;
}

RegularityConstants estimate_constants_sampled(
    const std::function<double(const Eigen::VectorXd&, int)>& local_reduced, int n,
    const Region& region, double delta, int sample_count, std::uint64_t seed) {
  if (region.center.size() != n) throw Error("region center has wrong dimension");
  if (sample_count < 2) throw Error("sample_count must be at least 2");
  const double radius = region.radius + 6.0 * delta * std::sqrt(static_cast<double>(n));
  GaussianStream stream(derive_seed(seed, stream::kSampler));
  const double fd = std::max(1e-6, 1e-7 * radius);

  auto sample_point = [&] {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = stream.next();
    const double len = v.norm();
    const double r = radius * std::pow(stream.next_uniform(), 1.0 / n);
    return Eigen::VectorXd(region.center + (len > 0 ? (r / len) * v : v));
  };
  auto global = [&](const Eigen::VectorXd& u) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += local_reduced(u, i);
    return s / n;
  };
  auto fd_gradient = [&](auto&& f, const Eigen::VectorXd& u) {
    Eigen::VectorXd g(n), e = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      e(i) = fd;
      g(i) = (f(u + e) - f(u - e)) / (2.0 * fd);
      e(i) = 0.0;
    }
    return g;
  };

  double l0 = 0.0, l1 = 0.0, m = kInf;
  for (int s = 0; s < sample_count; ++s) {
    const Eigen::VectorXd x = sample_point();
    const Eigen::VectorXd y = sample_point();
    for (int i = 0; i < n; ++i) {
      l0 = std::max(l0, fd_gradient([&](const Eigen::VectorXd& u) { return local_reduced(u, i); }, x).norm());
    }
    const Eigen::VectorXd gx = fd_gradient(global, x);
    const Eigen::VectorXd gy = fd_gradient(global, y);
    const double dist2 = (x - y).squaredNorm();
    if (dist2 > 1e-16) {
      const double curvature = (gx - gy).dot(x - y) / dist2;
      l1 = std::max(l1, (gx - gy).norm() / std::sqrt(dist2));
      m = std::min(m, curvature);
    }
  }
  RegularityConstants out;
  out.l0 = l0;
  out.l1 = l1;
  out.m = std::isfinite(m) ? m : 0.0;
  out.exact = false;
  out.region = region.describe() + "+6*delta*sqrt(N) (sampled)";
  return out;
}

double strong_convexity_rescale(double m) {
  if (m <= 0.0) throw RequiresStrongConvexityAboveOne("objective is not strongly convex (m <= 0)");
  if (m > 1.0) return 1.0;
  return std::ceil(1.0 / m) + 1.0;
}

}  // namespace ofo
