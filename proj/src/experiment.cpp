// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <thread>

#include "ofo/affine_plant.hpp"
#include "ofo/dc_grid.hpp"
#include "ofo/errors.hpp"
#include "ofo/harness.hpp"

namespace ofo {

namespace {

CommGraph graph_from_config(const GraphConfig& g) {
  if (!g.file.empty()) return CommGraph::load_edge_list(g.file);
  return CommGraph::standard(g.kind, g.n);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

Fixture build_fixture(const RunConfig& cfg) {
  CommGraph graph = graph_from_config(cfg.graph);
  const int n = graph.node_count();

  // Plant factory plus the affine description (H, b, y_ref) behind it.
  std::function<std::unique_ptr<SteadyStateMap>()> make_plant;
  Eigen::MatrixXd sensitivity;
  Eigen::VectorXd offset, y_ref;
  std::string provenance;
  if (cfg.plant.type == "dc_grid") {
    DcGridParams params;
    params.node_capacitance = json_to_vector(cfg.plant.capacitance, n, "plant.capacitance");
    params.node_conductance = json_to_vector(cfg.plant.conductance, n, "plant.conductance");
    params.line_inductance = json_to_vector(cfg.plant.inductance, n - 1, "plant.inductance");
    params.line_resistance = json_to_vector(cfg.plant.line_resistance, n - 1, "plant.line_resistance");
    params.reference_injection =
        json_to_vector(cfg.plant.reference_injection, n, "plant.reference_injection");
    params.load_change = json_to_vector(cfg.plant.load_change, n, "plant.load_change");
    params.measurement_noise = json_to_vector(cfg.plant.noise, n, "plant.noise");
    params.step = cfg.plant.step;
    params.settle_tol = cfg.plant.settle_tol;
    params.max_settle_steps = cfg.plant.max_settle_steps;
    DcGridPlant reference(graph, params);
    sensitivity = reference.sensitivity();
    offset = reference.affine_oracle().offset();
    y_ref = reference.reference_output();
    provenance = reference.provenance();
    make_plant = [graph, params] { return std::make_unique<DcGridPlant>(graph, params); };
  } else {
    sensitivity = *cfg.plant.sensitivity;
    if (sensitivity.rows() != n) throw ConfigError("plant.sensitivity must match the graph size");
    offset = cfg.plant.offset ? *cfg.plant.offset : Eigen::VectorXd::Zero(n);
    y_ref = cfg.plant.y_ref ? *cfg.plant.y_ref : Eigen::VectorXd::Zero(n);
    provenance = "affine";
    make_plant = [sensitivity, offset] { return std::make_unique<AffinePlant>(sensitivity, offset); };
  }

  // The analytic model uses the averaged convention (the one the consensus
  // protocol tracks); the normalization flag only affects reported values.
  double scale = cfg.objective.scale;
  QuadraticReduced model(sensitivity, offset, y_ref, 1.0, true);
  if (cfg.objective.scale_auto) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.hessian());
    scale = strong_convexity_rescale(eig.eigenvalues().minCoeff());
  }
  model.set_scale(scale);

  Fixture fx{std::move(graph), std::move(make_plant), std::move(model), {},
             Eigen::VectorXd(),  false, BoxConstraint(), std::numeric_limits<double>::quiet_NaN(),
             -1, scale, RegularityConstants{}, OptimumResult{}, provenance};
  fx.objectives = fx.model.locals();
  fx.u0 = json_to_vector(cfg.controller.u0, n, "controller.u0");

  fx.projected = cfg.controller.mode == "projected";
  if (cfg.constraint.enabled) {
    Eigen::VectorXd lo = json_to_vector(cfg.constraint.lower, n, "constraint.lower");
    Eigen::VectorXd hi = json_to_vector(cfg.constraint.upper, n, "constraint.upper");
    if (cfg.constraint.active_node) {
      const int node = *cfg.constraint.active_node;
      if (node < 0 || node >= n) throw ConfigError("constraint.active_node out of range");
      // Derived bound guaranteeing an active constraint: a fraction of the
      // unconstrained optimum at that node.
      const OptimumResult unc = solve_optimum(fx.model, BoxConstraint());
      hi(node) = cfg.constraint.active_fraction * unc.u_star(node);
      fx.active_bound = hi(node);
      fx.active_node = node;
    }
    fx.box = BoxConstraint(std::move(lo), std::move(hi));
  }

  // Regularity constants over the constraint box when bounded, else over a
  // configured ball around u0; both inflated by the exploration radius.
  const Region region = (cfg.constraint.enabled && fx.box.bounded())
                            ? Region::enclosing(fx.box)
                            : Region::ball(fx.u0, cfg.bounds.region_radius);
  fx.constants = estimate_constants(fx.model, region, cfg.controller.delta);

  fx.optimum = solve_optimum(fx.model, fx.projected ? fx.box : BoxConstraint());
  return fx;
}

namespace {

ControllerConfig arm_controller_config(const RunConfig& cfg, const Fixture& fx,
                                       const ArmConfig& arm, long horizon, std::uint64_t seed) {
  ControllerConfig cc;
  cc.eta = cfg.controller.eta;
  cc.delta = cfg.controller.delta;
  cc.tau = std::max(1, arm.tau);
  cc.horizon = horizon;
  cc.mode = fx.projected ? UpdateMode::projected : UpdateMode::unconstrained;
  cc.baseline = arm.baseline == "centralized" ? Baseline::centralized : Baseline::distributed;
  cc.constraint = fx.projected ? fx.box : BoxConstraint();
  cc.seed = seed;
  cc.centralized_queue_delay = cfg.controller.centralized_queue_delay;
  return cc;
}

struct ReplicaOutcome {
  RunTrace trace;
  std::string error;
};

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg, const ExperimentOptions& opt) {
  const Fixture fx = build_fixture(cfg);
  const int n = fx.graph.node_count();
  const long horizon = opt.horizon.value_or(cfg.controller.horizon);
  const int replicas = opt.replicas.value_or(cfg.experiment.replicas);
  if (replicas < 1) throw ConfigError("replica count must be >= 1");

  std::vector<ArmConfig> arms;
  for (const auto& arm : cfg.experiment.arms) {
    if (opt.arm_filter.empty() ||
        std::find(opt.arm_filter.begin(), opt.arm_filter.end(), arm.name) != opt.arm_filter.end()) {
      arms.push_back(arm);
    }
  }
  if (arms.empty()) throw ConfigError("no arms selected");

  ExperimentResult result;
  result.config_hash = config_hash(cfg);
  result.optimum = fx.optimum;
  result.u_star_norm = fx.optimum.u_star.norm();
  result.active_bound = fx.active_bound;
  result.active_node = fx.active_node;
  result.output_dir = opt.output_dir;

  const bool writing = !opt.output_dir.empty();
  long stride = cfg.experiment.trace_stride;
  if (stride <= 0) stride = std::max<long>(1, (horizon + 1) / 2001);
  if (writing) std::filesystem::create_directories(opt.output_dir);

  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), static_cast<unsigned>(replicas)));

  for (const auto& arm : arms) {
    const WeightMatrix weights = metropolis_weights(fx.graph, std::max(1, arm.tau));
    const bool step_ok =
        cfg.controller.eta < step_size_limit(cfg.controller.delta, fx.constants.l0,
                                             weights.tr_w2tau, n);

    const std::string arm_dir = writing ? opt.output_dir + "/" + arm.name : "";
    if (writing) std::filesystem::create_directories(arm_dir);

    ArmSummary summary;
    summary.name = arm.name;
    summary.tau = arm.tau;
    summary.baseline = arm.baseline;

    MeanTrace mean;
    mean.arm = arm.name;
    const long rows = horizon + 1;
    mean.mean_input = Eigen::MatrixXd::Zero(rows, n);
    mean.mean_probe = Eigen::MatrixXd::Zero(rows, n);
    mean.mean_objective = Eigen::VectorXd::Zero(rows);
    mean.mean_rel_err = Eigen::VectorXd::Zero(rows);
    mean.mean_e_norm = Eigen::VectorXd::Zero(rows);
    mean.k.resize(rows);
    for (long k = 0; k < rows; ++k) mean.k[k] = k;
    Eigen::VectorXd e_counts = Eigen::VectorXd::Zero(rows);
    int completed = 0;

    auto run_replica = [&](int replica) {
      ReplicaOutcome out;
      try {
        const ControllerConfig cc =
            arm_controller_config(cfg, fx, arm, horizon, cfg.experiment.base_seed + replica);
        auto plant = fx.make_plant();
        out.trace = run_controller(cc, *plant, fx.objectives, weights, fx.u0,
                                   &fx.optimum.u_star, cfg.objective.average);
        out.trace.meta.config_hash = result.config_hash;
        out.trace.meta.arm = arm.name;
        out.trace.meta.plant_provenance = fx.plant_provenance;
        out.trace.meta.step_size_condition_checked = true;
        out.trace.meta.step_size_condition_ok = step_ok;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      return out;
    };

    // Waves of independent replicas; aggregation strictly in replica order.
    for (int wave = 0; wave < replicas; wave += static_cast<int>(workers)) {
      const int count = std::min<int>(workers, replicas - wave);
      std::vector<std::future<ReplicaOutcome>> futures;
      futures.reserve(count);
      for (int r = 0; r < count; ++r) {
        futures.push_back(std::async(std::launch::async, run_replica, wave + r));
      }
      for (int r = 0; r < count; ++r) {
        ReplicaOutcome out = futures[r].get();
        const int replica = wave + r;
        if (!out.error.empty()) {
          result.failures.push_back({arm.name, replica, out.error});
          continue;
        }
        const RunTrace& tr = out.trace;
        for (long k = 0; k < rows; ++k) {
          const TraceRow& row = tr.rows[k];
          mean.mean_input.row(k) += row.input.transpose();
          if (row.probe.size() == n) mean.mean_probe.row(k) += row.probe.transpose();
          if (std::isfinite(row.objective)) mean.mean_objective(k) += row.objective;
          mean.mean_rel_err(k) += row.rel_err;
          if (std::isfinite(row.e_norm)) {
            mean.mean_e_norm(k) += row.e_norm;
            e_counts(k) += 1.0;
          }
        }
        summary.replica_plateaus.push_back(tr.plateau_rel_err(0.1));
        summary.replica_final_rel_errs.push_back(tr.final_rel_err());
        summary.max_input_violation =
            std::max(summary.max_input_violation, tr.meta.max_input_violation);
        summary.max_probe_violation =
            std::max(summary.max_probe_violation, tr.meta.max_probe_violation);
        summary.probe_count_per_replica = tr.meta.probe_count;
        ++completed;
        if (writing) {
          char name[32];
          std::snprintf(name, sizeof(name), "replica_%03d.csv", replica);
          export_trace_csv(tr, arm_dir + "/" + name, stride);
        }
      }
    }

    if (completed > 0) {
      mean.mean_input /= completed;
      mean.mean_probe /= completed;
      mean.mean_objective /= completed;
      mean.mean_rel_err /= completed;
      for (long k = 0; k < rows; ++k) {
        mean.mean_e_norm(k) = e_counts(k) > 0 ? mean.mean_e_norm(k) / e_counts(k)
                                              : std::numeric_limits<double>::quiet_NaN();
        if (k == rows - 1) {
          mean.mean_probe.row(k).setConstant(std::numeric_limits<double>::quiet_NaN());
          mean.mean_objective(k) = std::numeric_limits<double>::quiet_NaN();
        }
      }
      summary.initial_mean_rel_err = mean.mean_rel_err(0);
      summary.final_mean_rel_err = mean.mean_rel_err(rows - 1);
      const long window = std::max<long>(1, static_cast<long>(std::ceil(0.1 * horizon)));
      summary.plateau_of_mean = mean.mean_rel_err.tail(std::min(window, rows)).mean();
      summary.decay_factor = summary.plateau_of_mean > 0.0
                                 ? summary.initial_mean_rel_err / summary.plateau_of_mean
                                 : std::numeric_limits<double>::infinity();
      summary.plateau_median = median(summary.replica_plateaus);
      if (fx.active_node >= 0) {
        summary.active_input_final_mean = mean.mean_input(rows - 1, fx.active_node);
      }
      if (writing) export_mean_trace_csv(mean, arm_dir + "/mean.csv", stride);
    }

    result.arms.push_back(std::move(summary));
    result.mean_traces.push_back(std::move(mean));
  }

  if (writing) {
    export_summary_json(result, cfg, opt.output_dir + "/summary.json");
  }
  return result;
}

BoundComparison compare_bounds(const std::vector<RunTrace>& traces, const BoundReport& report,
                               int moment) {
  if (traces.empty()) throw EmptyInput("no traces to compare against the bound");
  if (moment != 1 && moment != 2) throw Error("moment must be 1 or 2");

  BoundComparison cmp;
  cmp.moment = moment;
  cmp.hypotheses_ok = report.hypotheses_ok() &&
                      ((moment == 2 && report.has_theorem1 && !report.theorem1.vacuous) ||
                       (moment == 1 && report.has_theorem2 && !report.theorem2.vacuous));
  if (!cmp.hypotheses_ok) {
    cmp.banner = "hypotheses violated: bound curve not evaluable as stated";
    for (const auto& v : report.violations) cmp.banner += "; " + v;
  }

  const int tau = report.inputs.tau;
  const long horizon = traces.front().horizon();
  if (horizon < tau + 1) throw Error("traces shorter than tau + 1");
  const double replicas = static_cast<double>(traces.size());

  auto gap = [&](const RunTrace& tr, long k) {
    const double denom = tr.meta.u_star_norm > 1e-15 ? tr.meta.u_star_norm : 1.0;
    const double dist = tr.rows[k].rel_err * denom;
    return moment == 2 ? dist * dist : dist;
  };

  cmp.init_gap = 0.0;
  for (const auto& tr : traces) cmp.init_gap += gap(tr, tau + 1);
  cmp.init_gap /= replicas;

  cmp.dominated_everywhere = cmp.hypotheses_ok;
  for (long k = tau + 1; k <= horizon; ++k) {
    BoundComparisonRow row;
    row.k = k;
    double sum = 0.0, sumsq = 0.0;
    for (const auto& tr : traces) {
      const double g = gap(tr, k);
      sum += g;
      sumsq += g * g;
    }
    row.empirical = sum / replicas;
    const double var = std::max(0.0, (sumsq - sum * sum / replicas) / (replicas - 1.0));
    row.std_error = std::sqrt(var / replicas);
    if (cmp.hypotheses_ok) {
      row.bound = moment == 2 ? report.theorem1.curve(k, cmp.init_gap)
                              : report.theorem2.curve(k, cmp.init_gap);
      row.dominated = row.empirical <= row.bound + 3.0 * row.std_error;
      cmp.dominated_everywhere = cmp.dominated_everywhere && row.dominated;
    } else {
      row.bound = std::numeric_limits<double>::quiet_NaN();
    }
    cmp.rows.push_back(row);
  }
  return cmp;
}

BoundReport evaluate_bounds(const RunConfig& cfg) {
  const Fixture fx = build_fixture(cfg);
  const WeightMatrix weights = metropolis_weights(fx.graph, cfg.controller.tau);

  BoundReport report;
  report.inputs = BoundInputs::from_weights(weights, fx.constants, cfg.controller.eta,
                                            cfg.controller.delta);
  report.inputs.diameter = fx.box.dimension() > 0 ? fx.box.diameter()
                                                  : std::numeric_limits<double>::infinity();

  auto plant = fx.make_plant();
  const E0Estimate e0 = estimate_e0(*plant, fx.objectives, weights, fx.u0, cfg.controller.delta,
                                    cfg.controller.tau, cfg.bounds.e0_samples, cfg.bounds.seed);
  report.inputs.e0 = e0.value;

  report.provenance["metropolis_variant"] = "lazy_max_degree_plus_one";
  report.provenance["e0_method"] = e0.method + "(" + std::to_string(e0.samples) + " samples, +3se)";
  report.provenance["scale_c"] = std::to_string(fx.scale);
  report.provenance["constants_region"] = fx.constants.region;
  report.provenance["plant"] = fx.plant_provenance;
  if (report.inputs.alpha() < 1e-8) {
    report.provenance["small_eta_flag"] =
        "alpha below 1e-8: the e0/alpha term dominates R as written";
  }

  if (!report.inputs.step_size_ok()) {
    report.violations.push_back("step-size condition violated: eta >= " +
                                std::to_string(report.inputs.eta_limit()));
  }
  if (!(report.inputs.m > 1.0)) {
    report.violations.push_back("strong convexity m = " + std::to_string(report.inputs.m) +
                                " <= 1 (set objective.scale = \"auto\" to rescale)");
  }
  if (!report.violations.empty()) return report;

  report.lemma1 = lemma1_constants(report.inputs);
  report.theorem1 = theorem1_bound(report.inputs);
  report.has_theorem1 = true;
  if (std::isfinite(report.inputs.diameter)) {
    report.theorem2 = theorem2_bound(report.inputs);
    report.has_theorem2 = true;
  }
  for (double eps : cfg.bounds.epsilons) {
    report.corollary.emplace_back(eps, corollary1_select(eps, report.inputs));
  }
  return report;
}

}  // namespace ofo
