// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "ofo/plant.hpp"

namespace ofo {

/// Affine steady-state map y = H u + b. The disturbance is folded into b.
class AffinePlant final : public SteadyStateMap {
 public:
  AffinePlant(Eigen::MatrixXd sensitivity, Eigen::VectorXd offset);

  int dimension() const override { return static_cast<int>(offset_.size()); }
  Eigen::VectorXd measure(const Eigen::VectorXd& input) override;

  const Eigen::MatrixXd& sensitivity() const { return sensitivity_; }
  const Eigen::VectorXd& offset() const { return offset_; }

 private:
  Eigen::MatrixXd sensitivity_;
  Eigen::VectorXd offset_;
};

}  // namespace ofo
