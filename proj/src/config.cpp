// SPDX-License-Identifier: Apache-2.0
#include "ofo/config.hpp"

#include <fstream>
#include <set>

#include "ofo/errors.hpp"

namespace ofo {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& block, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config block '" + block + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in config block '" + block + "'");
    }
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      j.at(key).get_to(out);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

Eigen::MatrixXd json_to_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ConfigError(name + " must be an array of rows");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (static_cast<int>(row.size()) != cols) throw ConfigError(name + " rows differ in length");
    for (int c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

}  // namespace

Eigen::VectorXd json_to_vector(const json& j, int length, const std::string& name) {
  if (j.is_number()) return Eigen::VectorXd::Constant(length, j.get<double>());
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != length) {
      throw ConfigError(name + " has length " + std::to_string(j.size()) + ", expected " +
                        std::to_string(length));
    }
    Eigen::VectorXd v(length);
    for (int i = 0; i < length; ++i) v(i) = j.at(i).get<double>();
    return v;
  }
  throw ConfigError(name + " must be a number or an array");
}

RunConfig parse_config(const json& j) {
  check_keys(j, "root",
             {"graph", "plant", "objective", "constraint", "controller", "experiment", "bounds"});
  RunConfig cfg;

  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    check_keys(g, "graph", {"kind", "n", "file"});
    get_to(g, "kind", cfg.graph.kind);
    get_to(g, "n", cfg.graph.n);
    get_to(g, "file", cfg.graph.file);
  }

  if (j.contains("plant")) {
    const auto& p = j.at("plant");
    check_keys(p, "plant",
               {"type", "capacitance", "conductance", "inductance", "line_resistance",
                "reference_injection", "load_change", "noise", "step", "settle_tol",
                "max_settle_steps", "sensitivity", "offset", "y_ref"});
    get_to(p, "type", cfg.plant.type);
    if (cfg.plant.type != "dc_grid" && cfg.plant.type != "affine") {
      throw ConfigError("plant.type must be dc_grid or affine");
    }
    for (const char* key : {"capacitance", "conductance", "inductance", "line_resistance",
                            "reference_injection", "load_change", "noise"}) {
      if (p.contains(key)) {
        const auto& v = p.at(key);
        if (!v.is_number() && !v.is_array()) throw ConfigError(std::string(key) + " must be a number or array");
        if (key == std::string("capacitance")) cfg.plant.capacitance = v;
        else if (key == std::string("conductance")) cfg.plant.conductance = v;
        else if (key == std::string("inductance")) cfg.plant.inductance = v;
        else if (key == std::string("line_resistance")) cfg.plant.line_resistance = v;
        else if (key == std::string("reference_injection")) cfg.plant.reference_injection = v;
        else if (key == std::string("load_change")) cfg.plant.load_change = v;
        else cfg.plant.noise = v;
      }
    }
    get_to(p, "step", cfg.plant.step);
    get_to(p, "settle_tol", cfg.plant.settle_tol);
    get_to(p, "max_settle_steps", cfg.plant.max_settle_steps);
    if (p.contains("sensitivity")) cfg.plant.sensitivity = json_to_matrix(p.at("sensitivity"), "plant.sensitivity");
    if (p.contains("offset")) {
      const auto& o = p.at("offset");
      if (!cfg.plant.sensitivity) throw ConfigError("plant.offset needs plant.sensitivity");
      cfg.plant.offset = json_to_vector(o, static_cast<int>(cfg.plant.sensitivity->rows()), "plant.offset");
    }
    if (p.contains("y_ref")) {
      if (!cfg.plant.sensitivity) throw ConfigError("plant.y_ref needs plant.sensitivity");
      cfg.plant.y_ref = json_to_vector(p.at("y_ref"), static_cast<int>(cfg.plant.sensitivity->rows()), "plant.y_ref");
    }
    if (cfg.plant.type == "affine" && !cfg.plant.sensitivity) {
      throw ConfigError("affine plants need plant.sensitivity");
    }
  }

  if (j.contains("objective")) {
    const auto& o = j.at("objective");
    check_keys(o, "objective", {"scale", "average"});
    if (o.contains("scale")) {
      if (o.at("scale").is_string()) {
        if (o.at("scale").get<std::string>() != "auto") throw ConfigError("objective.scale: number or \"auto\"");
        cfg.objective.scale_auto = true;
      } else {
        cfg.objective.scale = o.at("scale").get<double>();
        if (cfg.objective.scale <= 0.0) throw ConfigError("objective.scale must be positive");
      }
    }
    get_to(o, "average", cfg.objective.average);
  }

  if (j.contains("constraint")) {
    const auto& c = j.at("constraint");
    check_keys(c, "constraint", {"enabled", "lower", "upper", "active_node", "active_fraction"});
    get_to(c, "enabled", cfg.constraint.enabled);
    if (c.contains("lower")) cfg.constraint.lower = c.at("lower");
    if (c.contains("upper")) cfg.constraint.upper = c.at("upper");
    if (c.contains("active_node")) cfg.constraint.active_node = c.at("active_node").get<int>();
    get_to(c, "active_fraction", cfg.constraint.active_fraction);
  }

  if (j.contains("controller")) {
    const auto& c = j.at("controller");
    check_keys(c, "controller",
               {"eta", "delta", "tau", "horizon", "mode", "u0", "centralized_queue_delay"});
    get_to(c, "eta", cfg.controller.eta);
    get_to(c, "delta", cfg.controller.delta);
    get_to(c, "tau", cfg.controller.tau);
    get_to(c, "horizon", cfg.controller.horizon);
    get_to(c, "mode", cfg.controller.mode);
    if (c.contains("u0")) cfg.controller.u0 = c.at("u0");
    get_to(c, "centralized_queue_delay", cfg.controller.centralized_queue_delay);
    if (cfg.controller.mode != "unconstrained" && cfg.controller.mode != "projected") {
      throw ConfigError("controller.mode must be unconstrained or projected");
    }
    if (cfg.controller.eta <= 0 || cfg.controller.delta <= 0 || cfg.controller.tau < 1 ||
        cfg.controller.horizon < 0) {
      throw ConfigError("controller block: eta, delta, tau must be positive, horizon >= 0");
    }
  }
  if (cfg.controller.mode == "projected" && !cfg.constraint.enabled) {
    throw ConfigError("projected mode needs constraint.enabled = true");
  }

  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    check_keys(e, "experiment", {"replicas", "base_seed", "arms", "output_dir", "trace_stride"});
    get_to(e, "replicas", cfg.experiment.replicas);
    get_to(e, "base_seed", cfg.experiment.base_seed);
    get_to(e, "output_dir", cfg.experiment.output_dir);
    get_to(e, "trace_stride", cfg.experiment.trace_stride);
    if (cfg.experiment.replicas < 1) throw ConfigError("experiment.replicas must be >= 1");
    if (e.contains("arms")) {
      for (const auto& a : e.at("arms")) {
        check_keys(a, "experiment.arms[]", {"name", "tau", "baseline"});
        ArmConfig arm;
        get_to(a, "name", arm.name);
        get_to(a, "tau", arm.tau);
        get_to(a, "baseline", arm.baseline);
        if (arm.baseline != "distributed" && arm.baseline != "centralized") {
          throw ConfigError("arm baseline must be distributed or centralized");
        }
        if (arm.name.empty()) throw ConfigError("arm needs a name");
        cfg.experiment.arms.push_back(std::move(arm));
      }
    }
  }
  if (cfg.experiment.arms.empty()) {
    cfg.experiment.arms = {{"tau5", 5, "distributed"},
                           {"tau50", 50, "distributed"},
                           {"centralized", 1, "centralized"}};
  }

  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    check_keys(b, "bounds", {"epsilons", "e0_samples", "region_radius", "seed"});
    if (b.contains("epsilons")) {
      cfg.bounds.epsilons.clear();
      for (const auto& eps : b.at("epsilons")) cfg.bounds.epsilons.push_back(eps.get<double>());
    }
    get_to(b, "e0_samples", cfg.bounds.e0_samples);
    get_to(b, "region_radius", cfg.bounds.region_radius);
    get_to(b, "seed", cfg.bounds.seed);
  }

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  json j;
  j["graph"] = {{"kind", cfg.graph.kind}, {"n", cfg.graph.n}, {"file", cfg.graph.file}};
  json p = {{"type", cfg.plant.type},
            {"capacitance", cfg.plant.capacitance},
            {"conductance", cfg.plant.conductance},
            {"inductance", cfg.plant.inductance},
            {"line_resistance", cfg.plant.line_resistance},
            {"reference_injection", cfg.plant.reference_injection},
            {"load_change", cfg.plant.load_change},
            {"noise", cfg.plant.noise},
            {"step", cfg.plant.step},
            {"settle_tol", cfg.plant.settle_tol},
            {"max_settle_steps", cfg.plant.max_settle_steps}};
  if (cfg.plant.sensitivity) p["sensitivity"] = matrix_to_json(*cfg.plant.sensitivity);
  if (cfg.plant.offset) p["offset"] = vector_to_json(*cfg.plant.offset);
  if (cfg.plant.y_ref) p["y_ref"] = vector_to_json(*cfg.plant.y_ref);
  j["plant"] = std::move(p);
  j["objective"] = {{"scale", cfg.objective.scale_auto ? json("auto") : json(cfg.objective.scale)},
                    {"average", cfg.objective.average}};
  json c = {{"enabled", cfg.constraint.enabled},
            {"lower", cfg.constraint.lower},
            {"upper", cfg.constraint.upper},
            {"active_fraction", cfg.constraint.active_fraction}};
  if (cfg.constraint.active_node) c["active_node"] = *cfg.constraint.active_node;
  j["constraint"] = std::move(c);
  j["controller"] = {{"eta", cfg.controller.eta},
                     {"delta", cfg.controller.delta},
                     {"tau", cfg.controller.tau},
                     {"horizon", cfg.controller.horizon},
                     {"mode", cfg.controller.mode},
                     {"u0", cfg.controller.u0},
                     {"centralized_queue_delay", cfg.controller.centralized_queue_delay}};
  json arms = json::array();
  for (const auto& a : cfg.experiment.arms) {
    arms.push_back({{"name", a.name}, {"tau", a.tau}, {"baseline", a.baseline}});
  }
  j["experiment"] = {{"replicas", cfg.experiment.replicas},
                     {"base_seed", cfg.experiment.base_seed},
                     {"arms", std::move(arms)},
                     {"output_dir", cfg.experiment.output_dir},
                     {"trace_stride", cfg.experiment.trace_stride}};
  j["bounds"] = {{"epsilons", cfg.bounds.epsilons},
                 {"e0_samples", cfg.bounds.e0_samples},
                 {"region_radius", cfg.bounds.region_radius},
                 {"seed", cfg.bounds.seed}};
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  // FNV-1a 64
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace ofo
