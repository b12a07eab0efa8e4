// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "ofo/errors.hpp"
#include "ofo/harness.hpp"

namespace ofo {

namespace {

// Enumerates active sets over the box faces (lower/free/upper per
// coordinate) and returns the unique KKT point. Exponential in N; used as a
// cross-check for small problems only.
std::optional<Eigen::VectorXd> active_set_optimum(const Eigen::MatrixXd& q,
                                                  const Eigen::VectorXd& rhs,
                                                  const BoxConstraint& box) {
  const int n = static_cast<int>(rhs.size());
  const double tol = 1e-9;
  std::vector<int> state(n, 0);  // 0 free, 1 lower, 2 upper
  const long combos = static_cast<long>(std::pow(3.0, n));
  for (long code = 0; code < combos; ++code) {
    long c = code;
    for (int i = 0; i < n; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
    }
    std::vector<int> free_idx;
    Eigen::VectorXd u(n);
    bool valid = true;
    for (int i = 0; i < n; ++i) {
      if (state[i] == 1) {
        if (!std::isfinite(box.lower()(i))) { valid = false; break; }
        u(i) = box.lower()(i);
      } else if (state[i] == 2) {
        if (!std::isfinite(box.upper()(i))) { valid = false; break; }
        u(i) = box.upper()(i);
      } else {
        free_idx.push_back(i);
      }
    }
    if (!valid) continue;
    const int f = static_cast<int>(free_idx.size());
    if (f > 0) {
      Eigen::MatrixXd qff(f, f);
      Eigen::VectorXd b(f);
      for (int a = 0; a < f; ++a) {
        b(a) = rhs(free_idx[a]);
        for (int i = 0; i < n; ++i) {
          if (state[i] != 0) b(a) -= q(free_idx[a], i) * u(i);
        }
        for (int bcol = 0; bcol < f; ++bcol) qff(a, bcol) = q(free_idx[a], free_idx[bcol]);
      }
      const Eigen::VectorXd uf = qff.ldlt().solve(b);
      for (int a = 0; a < f; ++a) u(free_idx[a]) = uf(a);
    }
    // feasibility of the free block and multiplier signs on the active one
    bool kkt = true;
    const Eigen::VectorXd g = q * u - rhs;
    for (int i = 0; i < n && kkt; ++i) {
      if (state[i] == 0) {
        kkt = u(i) >= box.lower()(i) - tol && u(i) <= box.upper()(i) + tol &&
              std::abs(g(i)) <= tol * (1.0 + g.cwiseAbs().maxCoeff());
      } else if (state[i] == 1) {
        kkt = g(i) >= -tol;
      } else {
        kkt = g(i) <= tol;
      }
    }
    if (kkt) return u;
  }
  return std::nullopt;
}

}  // namespace

OptimumResult solve_optimum(const QuadraticReduced& model, const BoxConstraint& box) {
  const int n = model.dimension();
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) +
                            model.sensitivity().transpose() * model.sensitivity();
  const Eigen::VectorXd rhs = model.sensitivity().transpose() * (model.y_ref() - model.offset());

  const bool constrained = box.dimension() == n &&
                           (box.lower().maxCoeff() > -std::numeric_limits<double>::infinity() ||
                            box.upper().minCoeff() < std::numeric_limits<double>::infinity());

  OptimumResult out;
  if (!constrained) {
    out.u_star = q.ldlt().solve(rhs);
    out.residual = model.gradient(out.u_star).norm();
    out.method = "normal_equations";
    if (!(out.residual <= 1e-10)) {
      throw SolverStalled("unconstrained optimum residual " + std::to_string(out.residual));
    }
    return out;
  }

  // Projected gradient with the exact model gradient; step 1/L1.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  const double step = 1.0 / eig.eigenvalues().maxCoeff();
  Eigen::VectorXd u = box.project(Eigen::VectorXd::Zero(n));
  const long max_iters = 2000000;
  long it = 0;
  for (; it < max_iters; ++it) {
    const Eigen::VectorXd g = q * u - rhs;
    const Eigen::VectorXd next = box.project(u - step * g);
    const double move = (next - u).cwiseAbs().maxCoeff();
    u = next;
    if (move <= 1e-15 * (1.0 + u.cwiseAbs().maxCoeff())) break;
  }
  const double kkt = (u - box.project(u - (q * u - rhs))).norm();
  if (it >= max_iters || !(kkt <= 1e-8)) {
    throw SolverStalled("projected gradient stalled, KKT residual " + std::to_string(kkt));
  }
  out.u_star = u;
  out.residual = kkt;
  out.method = "projected_gradient";

  if (n <= 10) {
    const auto enumerated = active_set_optimum(q, rhs, box);
    if (!enumerated) {
      throw SolverStalled("active-set enumeration found no KKT point");
    }
    if ((*enumerated - u).cwiseAbs().maxCoeff() > 1e-8) {
      throw SolverStalled("projected-gradient and active-set optima disagree by " +
                          std::to_string((*enumerated - u).cwiseAbs().maxCoeff()));
    }
    out.method = "projected_gradient+active_set";
  }
  return out;
}

}  // namespace ofo
