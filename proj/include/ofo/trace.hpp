// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ofo {

/// One iteration record: the nominal input, the input actually applied to
/// the plant (nominal plus exploration), the realized global objective, the
/// relative error against u*, and the reconstructed consensus-error norm.
struct TraceRow {
  long k = 0;
  Eigen::VectorXd input;
  Eigen::VectorXd probe;  // empty on the final row (no probe after the last update)
  double objective = std::numeric_limits<double>::quiet_NaN();
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  double e_norm = std::numeric_limits<double>::quiet_NaN();
};

struct TraceMeta {
  std::string config_hash;
  std::string arm;
  std::uint64_t seed = 0;
  Eigen::VectorXd u_star;           // empty when unknown
  double u_star_norm = 0.0;
  std::string plant_provenance;
  long probe_count = 0;
  long scalars_transmitted = 0;
  double max_input_violation = 0.0;  // over nominal iterates (exact 0 in projected mode)
  double max_probe_violation = 0.0;  // exploration may leave the feasible set
  bool step_size_condition_checked = false;
  bool step_size_condition_ok = false;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  TraceMeta meta;

  long horizon() const { return static_cast<long>(rows.size()) - 1; }
  /// Mean relative error over the final `fraction` of the horizon.
  double plateau_rel_err(double fraction = 0.1) const;
  double final_rel_err() const;
};

}  // namespace ofo
