// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ofo {

struct GraphConfig {
  std::string kind = "tree8";  // path | star | complete | tree8
  int n = 8;
  std::string file;  // edge-list file; overrides kind when set
};

struct PlantConfig {
  std::string type = "dc_grid";  // dc_grid | affine
  // dc_grid: scalars fill the diagonal, arrays give explicit diagonals
  nlohmann::json capacitance = 1.0;
  nlohmann::json conductance = 1.0;
  nlohmann::json inductance = 1.0;
  nlohmann::json line_resistance = 10.0;
  nlohmann::json reference_injection = 1.0;
  nlohmann::json load_change = 1.0;
  nlohmann::json noise = 0.1;
  double step = 0.1;
  double settle_tol = 1e-10;
  long max_settle_steps = 100000;
  // affine
  std::optional<Eigen::MatrixXd> sensitivity;
  std::optional<Eigen::VectorXd> offset;
  std::optional<Eigen::VectorXd> y_ref;  // affine plants need an explicit reference
};

struct ObjectiveConfig {
  double scale = 1.0;
  bool scale_auto = false;  // lift m above 1, minimizer unchanged
  bool average = false;     // report sum (default) or mean of the local objectives
};

struct ConstraintConfig {
  bool enabled = false;
  nlohmann::json lower = -5.0;  // scalar fill or array
  nlohmann::json upper = 5.0;
  // Optional derived active bound: upper[active_node] =
  // active_fraction * unconstrained u*[active_node].
  std::optional<int> active_node;
  double active_fraction = 0.9;
};

struct ControllerBlock {
  double eta = 1e-3;
  double delta = 2e-3;
  int tau = 5;
  long horizon = 20000;
  std::string mode = "unconstrained";  // unconstrained | projected
  nlohmann::json u0 = 0.0;             // scalar fill or array
  bool centralized_queue_delay = false;
};

struct ArmConfig {
  std::string name;
  int tau = 5;
  std::string baseline = "distributed";  // distributed | centralized
};

struct ExperimentBlock {
  int replicas = 20;
  std::uint64_t base_seed = 1;
  std::vector<ArmConfig> arms;  // empty -> default {tau5, tau50, centralized}
  std::string output_dir = "out";
  long trace_stride = 0;  // 0 = auto (~2000 exported rows per trace)
};

struct BoundsBlock {
  std::vector<double> epsilons{1e-2, 1e-3};
  int e0_samples = 20000;
  double region_radius = 2.0;  // L0 certification ball around u0 (unconstrained case)
  std::uint64_t seed = 99;
};

struct RunConfig {
  GraphConfig graph;
  PlantConfig plant;
  ObjectiveConfig objective;
  ConstraintConfig constraint;
  ControllerBlock controller;
  ExperimentBlock experiment;
  BoundsBlock bounds;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

/// Scalar fill or explicit array.
Eigen::VectorXd json_to_vector(const nlohmann::json& j, int length, const std::string& name);

}  // namespace ofo
