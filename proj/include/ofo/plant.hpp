// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace ofo {

/// Measurable steady-state input/output map y = h(u, d).
///
/// This is the only plant surface the controller sees: it applies an input,
/// lets the plant settle, and reads the measured output. Sensitivities and
/// disturbance values are not part of the interface.
class SteadyStateMap {
 public:
  virtual ~SteadyStateMap() = default;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd measure(const Eigen::VectorXd& input) = 0;
};

}  // namespace ofo
