// SPDX-License-Identifier: Apache-2.0
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ofo/affine_plant.hpp"
#include "ofo/bounds.hpp"
#include "ofo/controller.hpp"
#include "ofo/dc_grid.hpp"
#include "ofo/errors.hpp"
#include "ofo/graph.hpp"
#include "ofo/harness.hpp"
#include "ofo/objective.hpp"

namespace py = pybind11;
using namespace ofo;

namespace {

py::dict trace_to_dict(const RunTrace& trace) {
  const long rows = static_cast<long>(trace.rows.size());
  const int n = rows > 0 ? static_cast<int>(trace.rows.front().input.size()) : 0;
  Eigen::MatrixXd input(rows, n), probe(rows, n);
  Eigen::VectorXd objective(rows), rel_err(rows), e_norm(rows);
  probe.setConstant(std::numeric_limits<double>::quiet_NaN());
  for (long k = 0; k < rows; ++k) {
    const TraceRow& row = trace.rows[k];
    input.row(k) = row.input.transpose();
    if (row.probe.size() == n) probe.row(k) = row.probe.transpose();
    objective(k) = row.objective;
    rel_err(k) = row.rel_err;
    e_norm(k) = row.e_norm;
  }
  py::dict d;
  d["input"] = input;
  d["probe"] = probe;
  d["objective"] = objective;
  d["rel_err"] = rel_err;
  d["e_norm"] = e_norm;
  d["seed"] = trace.meta.seed;
  d["probe_count"] = trace.meta.probe_count;
  d["scalars_transmitted"] = trace.meta.scalars_transmitted;
  d["max_input_violation"] = trace.meta.max_input_violation;
  d["max_probe_violation"] = trace.meta.max_probe_violation;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed model-free online feedback optimization over networks";

  py::register_exception<Error>(m, "OfoError");

  py::class_<CommGraph>(m, "CommGraph")
      .def_static("build",
                  [](int n, const std::vector<std::pair<int, int>>& edges) {
                    return CommGraph::build(n, edges);
                  },
                  py::arg("node_count"), py::arg("edges"))
      .def_static("path", &CommGraph::path, py::arg("n"))
      .def_static("star", &CommGraph::star, py::arg("n"))
      .def_static("complete", &CommGraph::complete, py::arg("n"))
      .def_static("tree8", &CommGraph::tree8)
      .def_static("load_edge_list", &CommGraph::load_edge_list, py::arg("path"))
      .def_property_readonly("node_count", &CommGraph::node_count)
      .def_property_readonly("edges", [](const CommGraph& g) { return g.edges(); })
      .def("degree", &CommGraph::degree, py::arg("node"))
      .def("neighbors", [](const CommGraph& g, int i) { return g.neighbors(i); })
      .def("is_tree", &CommGraph::is_tree)
      .def_property_readonly("duplicates_removed", &CommGraph::duplicates_removed);

  py::class_<WeightMatrix>(m, "WeightMatrix")
      .def_static("complete_averaging", &WeightMatrix::complete_averaging, py::arg("n"),
                  py::arg("tau"))
      .def_static("from_matrix", &WeightMatrix::from_matrix, py::arg("w"), py::arg("tau"))
      .def_readonly("w", &WeightMatrix::w)
      .def_readonly("tau", &WeightMatrix::tau)
      .def_readonly("spectrum", &WeightMatrix::spectrum)
      .def_readonly("lambda2", &WeightMatrix::lambda2)
      .def_readonly("tr_w2tau", &WeightMatrix::tr_w2tau)
      .def_readonly("tr_dev2", &WeightMatrix::tr_dev2);

  m.def("metropolis_weights", &metropolis_weights, py::arg("graph"), py::arg("tau"));
  m.def("consensus_deviation", &consensus_deviation, py::arg("weights"), py::arg("tau"));

  py::class_<SteadyStateMap>(m, "SteadyStateMap")
      .def_property_readonly("dimension", &SteadyStateMap::dimension)
      .def("measure", &SteadyStateMap::measure, py::arg("u"));

  py::class_<AffinePlant, SteadyStateMap>(m, "AffinePlant")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd>(), py::arg("sensitivity"), py::arg("offset"))
      .def_property_readonly("sensitivity", &AffinePlant::sensitivity)
      .def_property_readonly("offset", &AffinePlant::offset);

  py::class_<DcGridParams>(m, "DcGridParams")
      .def_static("defaults", &DcGridParams::defaults, py::arg("tree"))
      .def_readwrite("node_capacitance", &DcGridParams::node_capacitance)
      .def_readwrite("node_conductance", &DcGridParams::node_conductance)
      .def_readwrite("line_inductance", &DcGridParams::line_inductance)
      .def_readwrite("line_resistance", &DcGridParams::line_resistance)
      .def_readwrite("reference_injection", &DcGridParams::reference_injection)
      .def_readwrite("load_change", &DcGridParams::load_change)
      .def_readwrite("measurement_noise", &DcGridParams::measurement_noise)
      .def_readwrite("step", &DcGridParams::step)
      .def_readwrite("settle_tol", &DcGridParams::settle_tol)
      .def_readwrite("max_settle_steps", &DcGridParams::max_settle_steps);

  py::class_<DcGridPlant, SteadyStateMap>(m, "DcGridPlant")
      .def(py::init<const CommGraph&, DcGridParams>(), py::arg("tree"), py::arg("params"))
      .def_property_readonly("sensitivity", &DcGridPlant::sensitivity)
      .def_property_readonly("reference_output", &DcGridPlant::reference_output)
      .def_property_readonly("spectral_radius", &DcGridPlant::spectral_radius)
      .def_property_readonly("provenance", &DcGridPlant::provenance)
      .def("reset_state", &DcGridPlant::reset_state);

  py::class_<LocalObjective>(m, "LocalObjective")
      .def_static("tracking", &LocalObjective::tracking, py::arg("y_ref"), py::arg("scale") = 1.0)
      .def_static("custom", &LocalObjective::custom, py::arg("eval"), py::arg("scale") = 1.0)
      .def("__call__", &LocalObjective::operator(), py::arg("u"), py::arg("y"))
      .def_property_readonly("scale", &LocalObjective::scale);

  m.def("tracking_objectives", &tracking_objectives, py::arg("y_ref"), py::arg("scale") = 1.0);

  py::class_<BoxConstraint>(m, "BoxConstraint")
      .def(py::init<>())
      .def(py::init<Eigen::VectorXd, Eigen::VectorXd>(), py::arg("lower"), py::arg("upper"))
      .def_static("uniform", &BoxConstraint::uniform, py::arg("n"), py::arg("lower"),
                  py::arg("upper"))
      .def_static("unbounded", &BoxConstraint::unbounded, py::arg("n"))
      .def_property_readonly("dimension", &BoxConstraint::dimension)
      .def_property_readonly("bounded", &BoxConstraint::bounded)
      .def_property_readonly("diameter", &BoxConstraint::diameter)
      .def("project", py::overload_cast<const Eigen::VectorXd&>(&BoxConstraint::project, py::const_),
           py::arg("u"))
      .def("contains", &BoxConstraint::contains, py::arg("u"))
      .def("max_violation", &BoxConstraint::max_violation, py::arg("u"));

  py::class_<QuadraticReduced>(m, "QuadraticReduced")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd, Eigen::VectorXd, double, bool>(),
           py::arg("sensitivity"), py::arg("offset"), py::arg("y_ref"), py::arg("scale") = 1.0,
           py::arg("average") = true)
      .def("value", &QuadraticReduced::value, py::arg("u"))
      .def("gradient", &QuadraticReduced::gradient, py::arg("u"))
      .def("hessian", &QuadraticReduced::hessian)
      .def("agent_gradient", &QuadraticReduced::agent_gradient, py::arg("i"), py::arg("u"))
      .def("smoothed_value", &QuadraticReduced::smoothed_value, py::arg("u"), py::arg("delta"))
      .def("minimizer_unconstrained", &QuadraticReduced::minimizer_unconstrained)
      .def_property("scale", &QuadraticReduced::scale, &QuadraticReduced::set_scale);

  py::class_<Region>(m, "Region")
      .def_static("ball", &Region::ball, py::arg("center"), py::arg("radius"));

  py::class_<RegularityConstants>(m, "RegularityConstants")
      .def_readonly("l0", &RegularityConstants::l0)
      .def_readonly("l1", &RegularityConstants::l1)
      .def_readonly("m", &RegularityConstants::m)
      .def_readonly("scale", &RegularityConstants::scale)
      .def_readonly("exact", &RegularityConstants::exact)
      .def_readonly("region", &RegularityConstants::region);

  m.def("estimate_constants", &estimate_constants, py::arg("model"), py::arg("region"),
        py::arg("delta"));
  m.def("strong_convexity_rescale", &strong_convexity_rescale, py::arg("m"));

  py::enum_<UpdateMode>(m, "UpdateMode")
      .value("unconstrained", UpdateMode::unconstrained)
      .value("projected", UpdateMode::projected);
  py::enum_<Baseline>(m, "Baseline")
      .value("distributed", Baseline::distributed)
      .value("centralized", Baseline::centralized);

  py::class_<ControllerConfig>(m, "ControllerConfig")
      .def(py::init<>())
      .def_readwrite("eta", &ControllerConfig::eta)
      .def_readwrite("delta", &ControllerConfig::delta)
      .def_readwrite("tau", &ControllerConfig::tau)
      .def_readwrite("horizon", &ControllerConfig::horizon)
      .def_readwrite("mode", &ControllerConfig::mode)
      .def_readwrite("baseline", &ControllerConfig::baseline)
      .def_readwrite("constraint", &ControllerConfig::constraint)
      .def_readwrite("seed", &ControllerConfig::seed)
      .def_readwrite("centralized_queue_delay", &ControllerConfig::centralized_queue_delay);

  m.def("step_size_limit", &step_size_limit, py::arg("delta"), py::arg("l0"), py::arg("tr_w2tau"),
        py::arg("n"));

  m.def(
      "run_controller",
      [](const ControllerConfig& cfg, SteadyStateMap& plant,
         const std::vector<LocalObjective>& objectives, const WeightMatrix& weights,
         const Eigen::VectorXd& u0, std::optional<Eigen::VectorXd> u_star, bool average) {
        const RunTrace trace = run_controller(cfg, plant, objectives, weights, u0,
                                              u_star ? &*u_star : nullptr, average);
        return trace_to_dict(trace);
      },
      py::arg("config"), py::arg("plant"), py::arg("objectives"), py::arg("weights"),
      py::arg("u0"), py::arg("u_star") = std::nullopt, py::arg("average") = false);

  py::class_<BoundInputs>(m, "BoundInputs")
      .def(py::init<>())
      .def_readwrite("n", &BoundInputs::n)
      .def_readwrite("tau", &BoundInputs::tau)
      .def_readwrite("eta", &BoundInputs::eta)
      .def_readwrite("delta", &BoundInputs::delta)
      .def_readwrite("tr_w2tau", &BoundInputs::tr_w2tau)
      .def_readwrite("tr_dev2", &BoundInputs::tr_dev2)
      .def_readwrite("lambda2", &BoundInputs::lambda2)
      .def_readwrite("w_spectrum", &BoundInputs::w_spectrum)
      .def_readwrite("l0", &BoundInputs::l0)
      .def_readwrite("l1", &BoundInputs::l1)
      .def_readwrite("m", &BoundInputs::m)
      .def_readwrite("e0", &BoundInputs::e0)
      .def_readwrite("diameter", &BoundInputs::diameter)
      .def("alpha", &BoundInputs::alpha)
      .def("eta_limit", &BoundInputs::eta_limit)
      .def("step_size_ok", &BoundInputs::step_size_ok)
      .def_static("from_weights", &BoundInputs::from_weights, py::arg("weights"),
                  py::arg("constants"), py::arg("eta"), py::arg("delta"));

  py::class_<Lemma1Constants>(m, "Lemma1Constants")
      .def_readonly("alpha", &Lemma1Constants::alpha)
      .def_readonly("r", &Lemma1Constants::r)
      .def_readonly("r_f", &Lemma1Constants::r_f)
      .def_readonly("r_e", &Lemma1Constants::r_e);
  m.def("lemma1_constants", &lemma1_constants, py::arg("inputs"));

  py::class_<Theorem1Bound>(m, "Theorem1Bound")
      .def_readonly("rho", &Theorem1Bound::rho)
      .def_readonly("a1", &Theorem1Bound::a1)
      .def_readonly("a2", &Theorem1Bound::a2)
      .def_readonly("a3", &Theorem1Bound::a3)
      .def_readonly("p_eta", &Theorem1Bound::p_eta)
      .def_readonly("limit", &Theorem1Bound::limit)
      .def_readonly("vacuous", &Theorem1Bound::vacuous)
      .def("curve", &Theorem1Bound::curve, py::arg("k"), py::arg("init_gap_sq"));
  m.def("theorem1_bound", &theorem1_bound, py::arg("inputs"));

  py::class_<CorollarySelection>(m, "CorollarySelection")
      .def_readonly("eta_eps", &CorollarySelection::eta_eps)
      .def_readonly("delta_eps", &CorollarySelection::delta_eps)
      .def_readonly("tau_min", &CorollarySelection::tau_min)
      .def_readonly("achieved", &CorollarySelection::achieved)
      .def_readonly("rounds", &CorollarySelection::rounds);
  m.def("corollary1_select", &corollary1_select, py::arg("epsilon"), py::arg("inputs"));

  py::class_<Theorem2Bound>(m, "Theorem2Bound")
      .def_readonly("rho_prime", &Theorem2Bound::rho_prime)
      .def_readonly("r_prime", &Theorem2Bound::r_prime)
      .def_readonly("limit", &Theorem2Bound::limit)
      .def_readonly("vacuous", &Theorem2Bound::vacuous)
      .def("curve", &Theorem2Bound::curve, py::arg("k"), py::arg("init_gap"));
  m.def("theorem2_bound", &theorem2_bound, py::arg("inputs"));

  py::class_<E0Estimate>(m, "E0Estimate")
      .def_readonly("value", &E0Estimate::value)
      .def_readonly("max_mean", &E0Estimate::max_mean)
      .def_readonly("max_se", &E0Estimate::max_se)
      .def_readonly("samples", &E0Estimate::samples)
      .def_readonly("method", &E0Estimate::method);
  m.def("estimate_e0", &estimate_e0, py::arg("plant"), py::arg("objectives"), py::arg("weights"),
        py::arg("u0"), py::arg("delta"), py::arg("tau"), py::arg("sample_count"), py::arg("seed"));

  py::class_<OptimumResult>(m, "OptimumResult")
      .def_readonly("u_star", &OptimumResult::u_star)
      .def_readonly("residual", &OptimumResult::residual)
      .def_readonly("method", &OptimumResult::method);
  m.def("solve_optimum", &solve_optimum, py::arg("model"), py::arg("box") = BoxConstraint());

  m.def(
      "run_experiment_file",
      [](const std::string& config_path, const std::string& out_dir,
         const std::vector<std::string>& arms, int replicas, long horizon) {
        RunConfig cfg = load_config(config_path);
        ExperimentOptions opt;
        opt.output_dir = out_dir;
        opt.arm_filter = arms;
        if (replicas > 0) opt.replicas = replicas;
        if (horizon >= 0) opt.horizon = horizon;
        const ExperimentResult result = run_experiment(cfg, opt);
        py::dict d;
        d["config_hash"] = result.config_hash;
        d["u_star_norm"] = result.u_star_norm;
        py::list arms_out;
        for (const auto& a : result.arms) {
          py::dict ad;
          ad["name"] = a.name;
          ad["tau"] = a.tau;
          ad["baseline"] = a.baseline;
          ad["initial_mean_rel_err"] = a.initial_mean_rel_err;
          ad["final_mean_rel_err"] = a.final_mean_rel_err;
          ad["plateau_of_mean"] = a.plateau_of_mean;
          ad["decay_factor"] = a.decay_factor;
          ad["plateau_median"] = a.plateau_median;
          ad["max_input_violation"] = a.max_input_violation;
          arms_out.append(ad);
        }
        d["arms"] = arms_out;
        d["failures"] = result.failures.size();
        return d;
      },
      py::arg("config_path"), py::arg("out_dir") = std::string(),
      py::arg("arms") = std::vector<std::string>{}, py::arg("replicas") = -1,
      py::arg("horizon") = -1);
}
