// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ofo/bounds.hpp"
#include "ofo/config.hpp"
#include "ofo/controller.hpp"
#include "ofo/objective.hpp"
#include "ofo/plant.hpp"
#include "ofo/trace.hpp"

namespace ofo {

struct OptimumResult {
  Eigen::VectorXd u_star;
  double residual = 0.0;  // gradient norm (unconstrained) or KKT residual
  std::string method;
};

/// Ground-truth optimum of the reduced problem. Unconstrained: normal
/// equations with a residual check. Constrained: projected gradient to a
/// fixed point, cross-checked by active-set enumeration for N <= 10.
OptimumResult solve_optimum(const QuadraticReduced& model, const BoxConstraint& box);

/// Everything one experiment needs, assembled from a RunConfig: graph,
/// plant factory, scaled objectives, analytic model, constraint box with the
/// derived active bound, initial input, and the ground-truth optimum.
struct Fixture {
  CommGraph graph;
  std::function<std::unique_ptr<SteadyStateMap>()> make_plant;
  QuadraticReduced model;
  std::vector<LocalObjective> objectives;
  Eigen::VectorXd u0;
  bool projected = false;
  BoxConstraint box;
  double active_bound = std::numeric_limits<double>::quiet_NaN();
  int active_node = -1;
  double scale = 1.0;
  RegularityConstants constants;
  OptimumResult optimum;
  std::string plant_provenance;
};

Fixture build_fixture(const RunConfig& cfg);

struct MeanTrace {
  std::string arm;
  std::vector<long> k;
  Eigen::MatrixXd mean_input;  // (T+1) x N
  Eigen::MatrixXd mean_probe;  // (T+1) x N, NaN on the final row
  Eigen::VectorXd mean_objective;
  Eigen::VectorXd mean_rel_err;
  Eigen::VectorXd mean_e_norm;
};

struct ArmSummary {
  std::string name;
  int tau = 0;
  std::string baseline;
  double initial_mean_rel_err = 0.0;
  double final_mean_rel_err = 0.0;
  double plateau_of_mean = 0.0;        // mean curve averaged over the last 10%
  double decay_factor = 0.0;           // initial / plateau
  double plateau_median = 0.0;         // median across replicas of per-replica plateaus
  double max_input_violation = 0.0;
  double max_probe_violation = 0.0;
  double active_input_final_mean = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> replica_plateaus;
  std::vector<double> replica_final_rel_errs;
  long probe_count_per_replica = 0;
};

struct ReplicaFailure {
  std::string arm;
  int replica = 0;
  std::string message;
};

struct ExperimentResult {
  std::string config_hash;
  OptimumResult optimum;
  double u_star_norm = 0.0;
  double active_bound = std::numeric_limits<double>::quiet_NaN();
  int active_node = -1;
  std::vector<ArmSummary> arms;
  std::vector<MeanTrace> mean_traces;
  std::vector<ReplicaFailure> failures;
  std::string output_dir;  // empty when nothing was written
};

struct ExperimentOptions {
  std::vector<std::string> arm_filter;  // empty = all configured arms
  std::optional<int> replicas;
  std::optional<long> horizon;
  std::string output_dir;  // empty = no files
};

/// Runs all configured arms x replicas (paired seeds base_seed + replica),
/// streams per-replica traces to disk when an output directory is given,
/// aggregates mean traces and summaries, and persists partial results plus a
/// failure ledger if a replica throws.
ExperimentResult run_experiment(const RunConfig& cfg, const ExperimentOptions& opt = {});

/// Theoretical-vs-empirical comparison table.
struct BoundComparisonRow {
  long k = 0;
  double empirical = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool dominated = false;
};

struct BoundComparison {
  std::vector<BoundComparisonRow> rows;
  bool hypotheses_ok = true;
  std::string banner;           // set when hypotheses are violated
  bool dominated_everywhere = false;  // verdict; meaningful only when hypotheses_ok
  int moment = 2;               // 2: squared distances, 1: first moment
  double init_gap = 0.0;        // measured E-gap at k = tau + 1
};

/// Compares per-replica distance trajectories against the squared-distance
/// bound (moment = 2) or the first-moment bound (moment = 1). The initial
/// gap at k = tau + 1 is measured from the traces. Dominance uses a
/// one-sided 3-standard-error slack.
BoundComparison compare_bounds(const std::vector<RunTrace>& traces, const BoundReport& report,
                               int moment);

/// Bound calculator: regularity constants (with optional auto-rescaling),
/// Monte Carlo e0, Lemma 1 constants, both theorem limits, corollary
/// selections, and provenance notes.
BoundReport evaluate_bounds(const RunConfig& cfg);

// --- exports (byte-stable for fixed inputs) ---

void export_trace_csv(const RunTrace& trace, const std::string& path, long stride = 1);
void export_trace_json(const RunTrace& trace, const std::string& path, long stride = 1);
void export_mean_trace_csv(const MeanTrace& mean, const std::string& path, long stride = 1);
void export_summary_json(const ExperimentResult& result, const RunConfig& cfg,
                         const std::string& path);
void export_bound_report(const BoundReport& report, const std::string& text_path,
                         const std::string& json_path);
void export_comparison_csv(const BoundComparison& cmp, const std::string& path);
nlohmann::json bound_report_to_json(const BoundReport& report);

}  // namespace ofo
