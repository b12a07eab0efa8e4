// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>

#include "ofo/affine_plant.hpp"
#include "ofo/dc_grid.hpp"
#include "ofo/errors.hpp"

namespace ofo {

AffinePlant::AffinePlant(Eigen::MatrixXd sensitivity, Eigen::VectorXd offset)
    : sensitivity_(std::move(sensitivity)), offset_(std::move(offset)) {
  if (sensitivity_.rows() != offset_.size() || sensitivity_.cols() != offset_.size()) {
    throw Error("affine plant dimensions disagree");
  }
}

Eigen::VectorXd AffinePlant::measure(const Eigen::VectorXd& input) {
  if (input.size() != offset_.size()) throw Error("input dimension mismatch");
  return sensitivity_ * input + offset_;
}

DcGridParams DcGridParams::defaults(const CommGraph& tree) {
  const int n = tree.node_count();
  DcGridParams p;
  p.node_capacitance = Eigen::VectorXd::Ones(n);
  p.node_conductance = Eigen::VectorXd::Ones(n);
  p.line_inductance = Eigen::VectorXd::Ones(n - 1);
  p.line_resistance = Eigen::VectorXd::Constant(n - 1, 10.0);
  p.reference_injection = Eigen::VectorXd::Ones(n);
  p.load_change = Eigen::VectorXd::Ones(n);
  p.measurement_noise = Eigen::VectorXd::Constant(n, 0.1);
  return p;
}

namespace {

double spectral_radius_of(const Eigen::MatrixXd& m) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

DcGridPlant::DcGridPlant(const CommGraph& tree, DcGridParams params)
    : n_(tree.node_count()), params_(std::move(params)) {
  if (!tree.is_tree()) {
    throw NotATree("grid topology must be a tree (" + std::to_string(tree.node_count()) +
                   " nodes need " + std::to_string(tree.node_count() - 1) + " lines)");
  }
  const int lines = n_ - 1;
  auto expect = [](const Eigen::VectorXd& v, int len, const char* name) {
    if (v.size() != len) throw Error(std::string("grid parameter ") + name + " has wrong length");
  };
  expect(params_.node_capacitance, n_, "node_capacitance");
  expect(params_.node_conductance, n_, "node_conductance");
  expect(params_.line_inductance, lines, "line_inductance");
  expect(params_.line_resistance, lines, "line_resistance");
  expect(params_.reference_injection, n_, "reference_injection");
  expect(params_.load_change, n_, "load_change");
  expect(params_.measurement_noise, n_, "measurement_noise");

  // Incidence with a fixed orientation: each line leaves its lower-index node.
  incidence_ = Eigen::MatrixXd::Zero(n_, lines);
  for (int e = 0; e < lines; ++e) {
    const auto& [i, j] = tree.edges()[e];
    incidence_(i, e) = 1.0;
    incidence_(j, e) = -1.0;
  }

  const int dim = n_ + lines;
  const Eigen::MatrixXd g = params_.node_conductance.asDiagonal();
  const Eigen::MatrixXd r = params_.line_resistance.asDiagonal();
  Eigen::VectorXd mass(dim);
  mass << params_.node_capacitance, params_.line_inductance;

  auto euler_matrix = [&](double voltage_feedback_sign) {
    Eigen::MatrixXd sys(dim, dim);
    sys.topLeftCorner(n_, n_) = voltage_feedback_sign * g;
    sys.topRightCorner(n_, lines) = -incidence_;
    sys.bottomLeftCorner(lines, n_) = incidence_.transpose();
    sys.bottomRightCorner(lines, lines) = -r;
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(dim, dim) +
                           params_.step * mass.cwiseInverse().asDiagonal() * sys);
  };

  // The positive-feedback sign convention first; it fails the Schur check for
  // any dissipative G, in which case the droop form -G V is the realization.
  Eigen::MatrixXd cand = euler_matrix(+1.0);
  double radius = spectral_radius_of(cand);
  if (radius < 1.0) {
    realization_ = Realization::as_written;
  } else {
    cand = euler_matrix(-1.0);
    radius = spectral_radius_of(cand);
    if (radius >= 1.0) {
      throw UnstableDiscretization("Euler matrix spectral radius " + std::to_string(radius) +
                                   " >= 1 for step " + std::to_string(params_.step));
    }
    realization_ = Realization::droop_stabilized;
  }
  euler_ = std::move(cand);
  spectral_radius_ = radius;

  // Injection enters the voltage rows only.
  input_map_ = Eigen::MatrixXd::Zero(dim, n_);
  for (int i = 0; i < n_; ++i) {
    input_map_(i, i) = params_.step / params_.node_capacitance(i);
  }

  // Steady-state sensitivity of the realized dynamics: x* solves
  // (I - E) x* = input_map * injection, so H = [I 0](I - E)^{-1} input_map.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(dim, dim) - euler_);
  if (!lu.isInvertible()) {
    throw SingularSystemMatrix("steady-state system matrix is singular");
  }
  sensitivity_ = lu.solve(input_map_).topRows(n_);

  // Start at the pre-control operating point (u = 0) and verify the settled
  // dynamics against the exact steady state.
  state_ = Eigen::VectorXd::Zero(dim);
  scratch_.resize(dim);
  const Eigen::VectorXd v0 = measure(Eigen::VectorXd::Zero(n_));
  const Eigen::VectorXd v0_exact =
      sensitivity_ * (params_.reference_injection - params_.load_change) + params_.measurement_noise;
  if ((v0 - v0_exact).cwiseAbs().maxCoeff() > 1e-8) {
    throw UnstableDiscretization("settled dynamics disagree with the steady-state solution");
  }
}

void DcGridPlant::settle(const Eigen::VectorXd& input) {
  Eigen::VectorXd drive = input_map_ * (params_.reference_injection - params_.load_change + input);
  long steps = 0;
  while (true) {
    scratch_.noalias() = euler_ * state_;
    scratch_ += drive;
    ++steps;
    const double delta = (scratch_ - state_).cwiseAbs().maxCoeff();
    state_.swap(scratch_);
    if (delta <= params_.settle_tol) break;
    if (steps >= params_.max_settle_steps) {
      throw NotSettled("plant did not settle within " + std::to_string(params_.max_settle_steps) +
                       " steps (last delta " + std::to_string(delta) + ")");
    }
  }
  last_settle_steps_ = steps;
  total_euler_steps_ += steps;
}

Eigen::VectorXd DcGridPlant::measure(const Eigen::VectorXd& input) {
  if (input.size() != n_) throw Error("input dimension mismatch");
  if (!input.allFinite()) throw Error("input must be finite");
  settle(input);
  return state_.head(n_) + params_.measurement_noise;
}

Eigen::VectorXd DcGridPlant::reference_output() const {
  return sensitivity_ * params_.reference_injection + params_.measurement_noise;
}

AffinePlant DcGridPlant::affine_oracle() const {
  return AffinePlant(sensitivity_,
                     sensitivity_ * (params_.reference_injection - params_.load_change) +
                         params_.measurement_noise);
}

std::string DcGridPlant::provenance() const {
  return std::string("dc_grid realization=") +
         (realization_ == Realization::as_written ? "as_written" : "droop_stabilized") +
         " spectral_radius=" + std::to_string(spectral_radius_);
}

void DcGridPlant::reset_state() {
  state_.setZero();
  last_settle_steps_ = 0;
}

}  // namespace ofo
