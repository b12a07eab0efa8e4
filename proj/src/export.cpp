// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ofo/errors.hpp"
#include "ofo/harness.hpp"

namespace ofo {

namespace {

using nlohmann::json;

// Fixed round-trip formatting keeps output files byte-stable.
void append_double(std::string& buf, double v) {
  char tmp[32];
  if (std::isnan(v)) {
    buf += "nan";
    return;
  }
  std::snprintf(tmp, sizeof(tmp), "%.17g", v);
  buf += tmp;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << content;
}

std::string trace_header(int n) {
  std::string head = "k";
  for (int i = 0; i < n; ++i) head += ",u_" + std::to_string(i);
  for (int i = 0; i < n; ++i) head += ",probe_" + std::to_string(i);
  head += ",objective,rel_err,e_norm\n";
  return head;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void export_trace_csv(const RunTrace& trace, const std::string& path, long stride) {
  if (trace.rows.empty()) throw EmptyInput("trace has no rows");
  if (stride < 1) throw Error("stride must be >= 1");
  const int n = static_cast<int>(trace.rows.front().input.size());
  std::string buf = trace_header(n);
  auto emit = [&](const TraceRow& row) {
    buf += std::to_string(row.k);
    for (int i = 0; i < n; ++i) {
      buf += ',';
      append_double(buf, row.input(i));
    }
    for (int i = 0; i < n; ++i) {
      buf += ',';
      append_double(buf, row.probe.size() == n ? row.probe(i)
                                               : std::numeric_limits<double>::quiet_NaN());
    }
    buf += ',';
    append_double(buf, row.objective);
    buf += ',';
    append_double(buf, row.rel_err);
    buf += ',';
    append_double(buf, row.e_norm);
    buf += '\n';
  };
  const long last = static_cast<long>(trace.rows.size()) - 1;
  for (long k = 0; k <= last; k += stride) emit(trace.rows[k]);
  if (last % stride != 0) emit(trace.rows[last]);  // the final row is always present
  write_file(path, buf);
}

void export_trace_json(const RunTrace& trace, const std::string& path, long stride) {
  if (trace.rows.empty()) throw EmptyInput("trace has no rows");
  const int n = static_cast<int>(trace.rows.front().input.size());
  json j;
  j["meta"] = {{"config_hash", trace.meta.config_hash},
               {"arm", trace.meta.arm},
               {"seed", trace.meta.seed},
               {"u_star_norm", trace.meta.u_star_norm},
               {"plant", trace.meta.plant_provenance},
               {"probe_count", trace.meta.probe_count},
               {"scalars_transmitted", trace.meta.scalars_transmitted},
               {"max_input_violation", trace.meta.max_input_violation},
               {"max_probe_violation", trace.meta.max_probe_violation},
               {"stride", stride}};
  if (trace.meta.u_star.size() > 0) {
    j["meta"]["u_star"] = std::vector<double>(trace.meta.u_star.begin(), trace.meta.u_star.end());
  }
  json rows = json::array();
  const long last = static_cast<long>(trace.rows.size()) - 1;
  for (long k = 0; k <= last; k += stride) {
    const TraceRow& row = trace.rows[k];
    json r;
    r["k"] = row.k;
    r["u"] = std::vector<double>(row.input.begin(), row.input.end());
    if (row.probe.size() == n) {
      r["probe"] = std::vector<double>(row.probe.begin(), row.probe.end());
    }
    r["objective"] = finite_or_null(row.objective);
    r["rel_err"] = finite_or_null(row.rel_err);
    r["e_norm"] = finite_or_null(row.e_norm);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  write_file(path, j.dump(2) + "\n");
}

void export_mean_trace_csv(const MeanTrace& mean, const std::string& path, long stride) {
  const long rows = static_cast<long>(mean.k.size());
  if (rows == 0) throw EmptyInput("mean trace has no rows");
  if (stride < 1) throw Error("stride must be >= 1");
  const int n = static_cast<int>(mean.mean_input.cols());
  std::string buf = trace_header(n);
  auto emit = [&](long k) {
    buf += std::to_string(mean.k[k]);
    for (int i = 0; i < n; ++i) {
      buf += ',';
      append_double(buf, mean.mean_input(k, i));
    }
    for (int i = 0; i < n; ++i) {
      buf += ',';
      append_double(buf, mean.mean_probe(k, i));
    }
    buf += ',';
    append_double(buf, mean.mean_objective(k));
    buf += ',';
    append_double(buf, mean.mean_rel_err(k));
    buf += ',';
    append_double(buf, mean.mean_e_norm(k));
    buf += '\n';
  };
  for (long k = 0; k < rows; k += stride) emit(k);
  if ((rows - 1) % stride != 0) emit(rows - 1);
  write_file(path, buf);
}

void export_summary_json(const ExperimentResult& result, const RunConfig& cfg,
                         const std::string& path) {
  json j;
  j["config_hash"] = result.config_hash;
  j["config"] = config_to_json(cfg);
  j["optimum"] = {{"u_star", std::vector<double>(result.optimum.u_star.begin(),
                                                 result.optimum.u_star.end())},
                  {"residual", result.optimum.residual},
                  {"method", result.optimum.method},
                  {"norm", result.u_star_norm}};
  if (result.active_node >= 0) {
    j["constraint"] = {{"active_node", result.active_node}, {"active_bound", result.active_bound}};
  }
  json arms = json::array();
  for (const auto& a : result.arms) {
    arms.push_back({{"name", a.name},
                    {"tau", a.tau},
                    {"baseline", a.baseline},
                    {"initial_mean_rel_err", finite_or_null(a.initial_mean_rel_err)},
                    {"final_mean_rel_err", finite_or_null(a.final_mean_rel_err)},
                    {"plateau_of_mean", finite_or_null(a.plateau_of_mean)},
                    {"decay_factor", finite_or_null(a.decay_factor)},
                    {"plateau_median", finite_or_null(a.plateau_median)},
                    {"max_input_violation", a.max_input_violation},
                    {"max_probe_violation", a.max_probe_violation},
                    {"active_input_final_mean", finite_or_null(a.active_input_final_mean)},
                    {"probe_count_per_replica", a.probe_count_per_replica},
                    {"replica_plateaus", a.replica_plateaus},
                    {"replica_final_rel_errs", a.replica_final_rel_errs}});
  }
  j["arms"] = std::move(arms);
  json failures = json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"arm", f.arm}, {"replica", f.replica}, {"message", f.message}});
  }
  j["failures"] = std::move(failures);
  write_file(path, j.dump(2) + "\n");
}

nlohmann::json bound_report_to_json(const BoundReport& report) {
  json j;
  j["inputs"] = {{"n", report.inputs.n},         {"tau", report.inputs.tau},
                 {"eta", report.inputs.eta},     {"delta", report.inputs.delta},
                 {"l0", report.inputs.l0},       {"l1", report.inputs.l1},
                 {"m", report.inputs.m},         {"e0", report.inputs.e0},
                 {"tr_w2tau", report.inputs.tr_w2tau}, {"tr_dev2", report.inputs.tr_dev2},
                 {"lambda2", report.inputs.lambda2},
                 {"diameter", finite_or_null(report.inputs.diameter)},
                 {"alpha", report.inputs.alpha()},
                 {"eta_limit", report.inputs.eta_limit()},
                 {"step_size_ok", report.inputs.step_size_ok()}};
  if (report.hypotheses_ok()) {
    j["lemma1"] = {{"alpha", report.lemma1.alpha},
                   {"r", report.lemma1.r},
                   {"r_f", report.lemma1.r_f},
                   {"r_e", report.lemma1.r_e}};
  }
  if (report.has_theorem1) {
    j["theorem1"] = {{"rho", report.theorem1.rho},     {"a1", report.theorem1.a1},
                     {"a2", report.theorem1.a2},       {"a3", report.theorem1.a3},
                     {"p_eta", report.theorem1.p_eta}, {"limit", finite_or_null(report.theorem1.limit)},
                     {"vacuous", report.theorem1.vacuous}};
  }
  if (report.has_theorem2) {
    j["theorem2"] = {{"rho_prime", report.theorem2.rho_prime},
                     {"r_prime", report.theorem2.r_prime},
                     {"limit", finite_or_null(report.theorem2.limit)},
                     {"vacuous", report.theorem2.vacuous}};
  }
  json cors = json::array();
  for (const auto& [eps, sel] : report.corollary) {
    cors.push_back({{"epsilon", eps},
                    {"eta", sel.eta_eps},
                    {"delta", sel.delta_eps},
                    {"tau_min", sel.tau_min},
                    {"achieved", sel.achieved},
                    {"rounds", sel.rounds}});
  }
  j["corollary"] = std::move(cors);
  j["provenance"] = report.provenance;
  j["violations"] = report.violations;
  return j;
}

void export_bound_report(const BoundReport& report, const std::string& text_path,
                         const std::string& json_path) {
  if (!text_path.empty()) write_file(text_path, report.to_text());
  if (!json_path.empty()) write_file(json_path, bound_report_to_json(report).dump(2) + "\n");
}

void export_comparison_csv(const BoundComparison& cmp, const std::string& path) {
  std::string buf;
  if (!cmp.banner.empty()) buf += "# " + cmp.banner + "\n";
  buf += "k,empirical,std_error,bound,dominated\n";
  for (const auto& row : cmp.rows) {
    buf += std::to_string(row.k);
    buf += ',';
    append_double(buf, row.empirical);
    buf += ',';
    append_double(buf, row.std_error);
    buf += ',';
    append_double(buf, row.bound);
    buf += cmp.hypotheses_ok ? (row.dominated ? ",1\n" : ",0\n") : ",\n";
  }
  write_file(path, buf);
}

}  // namespace ofo
