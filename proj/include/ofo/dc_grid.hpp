// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>

#include "ofo/affine_plant.hpp"
#include "ofo/graph.hpp"
#include "ofo/plant.hpp"

namespace ofo {

/// Parameters of the tree-shaped DC grid. All element matrices are diagonal;
/// node quantities have length N, line quantities length N-1.
struct DcGridParams {
  Eigen::VectorXd node_capacitance;     // diag C
  Eigen::VectorXd node_conductance;     // diag G (droop conductance to ground)
  Eigen::VectorXd line_inductance;      // diag L
  Eigen::VectorXd line_resistance;      // diag R
  Eigen::VectorXd reference_injection;  // I*
  Eigen::VectorXd load_change;          // unknown load step subtracted from I*
  Eigen::VectorXd measurement_noise;    // constant sensor offset d
  double step = 0.1;                    // forward-Euler step size
  double settle_tol = 1e-10;            // ||x_{t+1} - x_t||_inf threshold
  long max_settle_steps = 100000;

  /// Benchmark defaults: C = G = L = I, R = 10 I, I* = load_change = 1, d = 0.1.
  static DcGridParams defaults(const CommGraph& tree);
};

/// Forward-Euler discretization of a droop-controlled DC grid on a tree.
///
/// State x = (V, f): node voltages and line currents. measure() holds the
/// controllable injection constant, steps the discrete dynamics until the
/// state settles, and returns the noisy voltage measurement V + d.
///
/// The voltage dynamics are realized in the dissipative droop form
///   C dV/dt = -G V - B f + I* + u - dI,   L df/dt = B^T V - R f,
/// chosen at construction because the alternative sign convention with +G
/// feedback fails the Schur stability check (see realization()). Either way
/// the steady state is V = H (I* + u - dI) with H = (G + B R^-1 B^T)^-1.
class DcGridPlant final : public SteadyStateMap {
 public:
  enum class Realization { as_written, droop_stabilized };

  DcGridPlant(const CommGraph& tree, DcGridParams params);

  int dimension() const override { return n_; }
  Eigen::VectorXd measure(const Eigen::VectorXd& input) override;

  // Exact steady-state linear algebra. Test oracles and the optimum solver
  // use these; they are not reachable through the SteadyStateMap interface
  // the controller is restricted to.
  const Eigen::MatrixXd& sensitivity() const { return sensitivity_; }
  Eigen::VectorXd reference_output() const;       // V_ref = H I* + d
  AffinePlant affine_oracle() const;              // y = H u + H(I* - dI) + d

  const Eigen::MatrixXd& incidence() const { return incidence_; }
  const DcGridParams& params() const { return params_; }
  double spectral_radius() const { return spectral_radius_; }
  Realization realization() const { return realization_; }
  std::string provenance() const;

  long last_settle_steps() const { return last_settle_steps_; }
  long total_euler_steps() const { return total_euler_steps_; }
  void reset_state();                              // cold start from x = 0

 private:
  void settle(const Eigen::VectorXd& input);

  int n_ = 0;
  DcGridParams params_;
  Eigen::MatrixXd incidence_;      // N x (N-1), +1 at the low node of each edge
  Eigen::MatrixXd euler_;          // x <- euler_ x + drive
  Eigen::MatrixXd input_map_;      // drive contribution of the injection
  Eigen::MatrixXd sensitivity_;    // H
  Eigen::VectorXd state_;
  Eigen::VectorXd scratch_;
  double spectral_radius_ = 0.0;
  Realization realization_ = Realization::droop_stabilized;
  long last_settle_steps_ = 0;
  long total_euler_steps_ = 0;
};

}  // namespace ofo
