#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cogalloc/allocator.hpp"
#include "cogalloc/economics.hpp"
#include "cogalloc/error.hpp"
#include "cogalloc/optimizer.hpp"
#include "cogalloc/probe.hpp"
#include "cogalloc/sensing.hpp"
#include "cogalloc/simkit.hpp"

namespace py = pybind11;
using namespace cogalloc;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cooperative sensing design, SU selection and airtime allocation";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConstraintViolation>(m, "ConstraintViolation", base.ptr());
  py::register_exception<PreconditionViolation>(m, "PreconditionViolation", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<SensingGeometry>(m, "SensingGeometry")
      .def(py::init<double, int, double>(), py::arg("gamma"), py::arg("n_samples"),
           py::arg("noise_var") = 1.0)
      .def_static("from_db", &SensingGeometry::from_db, py::arg("gamma_db"),
                  py::arg("n_samples"), py::arg("noise_var") = 1.0)
      .def_property_readonly("gamma", &SensingGeometry::gamma)
      .def_property_readonly("n_samples", &SensingGeometry::n_samples)
      .def_property_readonly("noise_var", &SensingGeometry::noise_var);

  py::class_<SensingDesign>(m, "SensingDesign")
      .def(py::init<double, int>(), py::arg("pfa"), py::arg("k"))
      .def_property_readonly("pfa", &SensingDesign::pfa)
      .def_property_readonly("k", &SensingDesign::k)
      .def("__repr__", [](const SensingDesign& d) {
        return "SensingDesign(pfa=" + std::to_string(d.pfa()) + ", k=" + std::to_string(d.k()) + ")";
      });

  py::class_<SystemParams>(m, "SystemParams")
      .def(py::init<>())
      .def_readwrite("n_samples", &SystemParams::n_samples)
      .def_readwrite("sample_interval", &SystemParams::sample_interval)
      .def_readwrite("frame_duration", &SystemParams::frame_duration)
      .def_readwrite("tau2", &SystemParams::tau2)
      .def_readwrite("tau5", &SystemParams::tau5)
      .def_readwrite("tau_r", &SystemParams::tau_r)
      .def_readwrite("tau_r_prime", &SystemParams::tau_r_prime)
      .def_readwrite("p_st", &SystemParams::p_st)
      .def_readwrite("p_pt", &SystemParams::p_pt)
      .def_readwrite("bandwidth", &SystemParams::bandwidth)
      .def_readwrite("noise_power", &SystemParams::noise_power)
      .def_readwrite("sense_cost", &SystemParams::sense_cost)
      .def_readwrite("report_cost", &SystemParams::report_cost)
      .def_readwrite("p_h0", &SystemParams::p_h0)
      .def_readwrite("zeta", &SystemParams::zeta)
      .def_readwrite("gamma_db", &SystemParams::gamma_db)
      .def_readwrite("noise_var", &SystemParams::noise_var)
      .def("validate", &SystemParams::validate)
      .def("sensing_cost", &SystemParams::sensing_cost)
      .def("geometry", &SystemParams::geometry);

  py::class_<SecondaryUser>(m, "SecondaryUser")
      .def(py::init([](std::uint32_t id, double gain, std::uint64_t buffer, double pay,
                       double earn) { return SecondaryUser{id, gain, buffer, pay, earn}; }),
           py::arg("id"), py::arg("gain_to_fc") = 1.0, py::arg("buffer_bits") = 0,
           py::arg("pay_rate") = 0.1, py::arg("earn_rate") = 10.0)
      .def_readwrite("id", &SecondaryUser::id)
      .def_readwrite("gain_to_fc", &SecondaryUser::gain_to_fc)
      .def_readwrite("buffer_bits", &SecondaryUser::buffer_bits)
      .def_readwrite("pay_rate", &SecondaryUser::pay_rate)
      .def_readwrite("earn_rate", &SecondaryUser::earn_rate);

  py::enum_<CaseLabel>(m, "CaseLabel")
      .value("Case1", CaseLabel::Case1)
      .value("Case2", CaseLabel::Case2)
      .value("Case3", CaseLabel::Case3);

  py::class_<AllocationResult>(m, "AllocationResult")
      .def_readonly("active", &AllocationResult::active)
      .def_readonly("times", &AllocationResult::times)
      .def_readonly("rates", &AllocationResult::rates)
      .def_readonly("fc_utility", &AllocationResult::fc_utility)
      .def_readonly("su_utilities", &AllocationResult::su_utilities)
      .def_readonly("case_label", &AllocationResult::case_label)
      .def_readonly("feasible", &AllocationResult::feasible)
      .def("selected", &AllocationResult::selected);

  py::class_<DesignGrid>(m, "DesignGrid")
      .def(py::init<std::vector<double>, std::optional<int>>(), py::arg("pfa_values"),
           py::arg("k_max") = py::none())
      .def_static("uniform", &DesignGrid::uniform, py::arg("divisions") = 10,
                  py::arg("k_max") = py::none())
      .def_property_readonly("pfa_values", &DesignGrid::pfa_values);

  py::class_<GridPoint>(m, "GridPoint")
      .def_readonly("pfa", &GridPoint::pfa)
      .def_readonly("k", &GridPoint::k)
      .def_readonly("feasible", &GridPoint::feasible)
      .def_readonly("fc_utility", &GridPoint::fc_utility);

  py::class_<OptimizationOutcome>(m, "OptimizationOutcome")
      .def_readonly("feasible", &OptimizationOutcome::feasible)
      .def_readonly("best_design", &OptimizationOutcome::best_design)
      .def_readonly("best_allocation", &OptimizationOutcome::best_allocation)
      .def_readonly("utility_surface", &OptimizationOutcome::utility_surface)
      .def_readonly("wall_time", &OptimizationOutcome::wall_time);

  py::class_<NonJointOutcome>(m, "NonJointOutcome")
      .def_readonly("outcome", &NonJointOutcome::outcome)
      .def_readonly("su_utilities", &NonJointOutcome::su_utilities);

  m.def("q_function", &q_function, py::arg("x"));
  m.def("q_inverse", &q_inverse, py::arg("p"));
  m.def("threshold_from_pfa", &threshold_from_pfa, py::arg("pfa"), py::arg("geom"));
  m.def("local_pd", &local_pd, py::arg("pfa"), py::arg("geom"));
  m.def("binomial_upper_tail", &binomial_upper_tail, py::arg("p"), py::arg("k"), py::arg("n"));
  m.def("global_pfa", &global_pfa, py::arg("design"), py::arg("l_active"));
  m.def("global_pd", &global_pd, py::arg("design"), py::arg("geom"), py::arg("l_active"));
  m.def("min_active_users", &min_active_users, py::arg("design"), py::arg("geom"),
        py::arg("zeta"), py::arg("m_total"));

  m.def("rate_idle", &rate_idle, py::arg("su"), py::arg("params"));
  m.def("rate_interfered", &rate_interfered, py::arg("su"), py::arg("params"));
  m.def("effective_time", &effective_time, py::arg("params"), py::arg("l_active"));

  m.def(
      "select_and_allocate",
      [](const std::vector<SecondaryUser>& users, const SensingDesign& design,
         const SensingGeometry& geom, const SystemParams& params) {
        return select_and_allocate(users, design, geom, params);
      },
      py::arg("users"), py::arg("design"), py::arg("geom"), py::arg("params"));
  m.def(
      "joint_optimize",
      [](const std::vector<SecondaryUser>& users, const SensingGeometry& geom,
         const SystemParams& params, const DesignGrid& grid) {
        py::gil_scoped_release release;
        return joint_optimize(users, geom, params, grid);
      },
      py::arg("users"), py::arg("geom"), py::arg("params"), py::arg("grid"));
  m.def(
      "exhaustive_oracle",
      [](const std::vector<SecondaryUser>& users, const SensingGeometry& geom,
         const SystemParams& params, const DesignGrid& grid, std::size_t cap) {
        py::gil_scoped_release release;
        return exhaustive_oracle(users, geom, params, grid, cap);
      },
      py::arg("users"), py::arg("geom"), py::arg("params"), py::arg("grid"),
      py::arg("cap") = 12);
  m.def(
      "nonjoint_baseline",
      [](const std::vector<SecondaryUser>& users, const SensingGeometry& geom,
         const SystemParams& params, const DesignGrid& grid) {
        return nonjoint_baseline(users, geom, params, grid);
      },
      py::arg("users"), py::arg("geom"), py::arg("params"), py::arg("grid"));
  m.def("count_negative_utility",
        [](const std::vector<double>& u) { return count_negative_utility(u); },
        py::arg("su_utilities"));

  py::class_<ProbeParams>(m, "ProbeParams")
      .def(py::init<>())
      .def_static("reference_example", &ProbeParams::reference_example)
      .def_readwrite("m_users", &ProbeParams::m_users)
      .def_readwrite("k", &ProbeParams::k)
      .def_readwrite("p_h0", &ProbeParams::p_h0)
      .def_readwrite("gamma_db", &ProbeParams::gamma_db)
      .def_readwrite("n_samples", &ProbeParams::n_samples)
      .def_readwrite("r0", &ProbeParams::r0)
      .def_readwrite("r1", &ProbeParams::r1)
      .def_readwrite("airtime", &ProbeParams::airtime);
  py::class_<ProbeRow>(m, "ProbeRow")
      .def_readonly("pfa", &ProbeRow::pfa)
      .def_readonly("det_h", &ProbeRow::det_h)
      .def_readonly("det_ha", &ProbeRow::det_ha)
      .def_readonly("du_dpfa", &ProbeRow::du_dpfa)
      .def_readonly("du_dk", &ProbeRow::du_dk);
  m.def(
      "quasiconcavity_probe",
      [](const ProbeParams& p, const std::vector<double>& grid) {
        return quasiconcavity_probe(p, grid);
      },
      py::arg("params"), py::arg("pfa_grid") = default_probe_grid());

  py::class_<TrafficModel>(m, "TrafficModel")
      .def(py::init<>())
      .def_readwrite("shape", &TrafficModel::shape)
      .def_readwrite("scale", &TrafficModel::scale)
      .def_readwrite("batch_bits", &TrafficModel::batch_bits)
      .def_readwrite("accumulation_time", &TrafficModel::accumulation_time)
      .def_readwrite("initial_bits", &TrafficModel::initial_bits);
  py::class_<SuTemplate>(m, "SuTemplate")
      .def(py::init([](std::uint32_t id, double pay, double earn, double gain_mean) {
             return SuTemplate{id, pay, earn, gain_mean};
           }),
           py::arg("id"), py::arg("pay_rate") = 0.1, py::arg("earn_rate") = 10.0,
           py::arg("gain_mean") = 1.0);
  py::class_<SimulationSetup>(m, "SimulationSetup")
      .def(py::init<>())
      .def_readwrite("params", &SimulationSetup::params)
      .def_readwrite("traffic", &SimulationSetup::traffic)
      .def_readwrite("users", &SimulationSetup::users)
      .def_readwrite("grid", &SimulationSetup::grid);
  py::class_<DelayStats>(m, "DelayStats")
      .def_readonly("per_su_mean_delay", &DelayStats::per_su_mean_delay)
      .def_readonly("completed_batches", &DelayStats::completed_batches)
      .def_readonly("incomplete_batches", &DelayStats::incomplete_batches)
      .def_readonly("mean_delay", &DelayStats::mean_delay)
      .def_readonly("jain_index", &DelayStats::jain_index);
  py::class_<EpisodeResult>(m, "EpisodeResult")
      .def_readonly("stats", &EpisodeResult::stats)
      .def_readonly("trace", &EpisodeResult::trace);
  m.def(
      "run_episode",
      [](std::uint64_t frames, const SimulationSetup& setup, std::uint64_t seed,
         std::uint64_t trial, bool keep_trace) {
        py::gil_scoped_release release;
        return run_episode(frames, setup, seed, trial, keep_trace);
      },
      py::arg("n_frames"), py::arg("setup"), py::arg("seed"), py::arg("trial") = 0,
      py::arg("keep_trace") = false);
  m.def("jain_index", [](const std::vector<double>& v) { return jain_index(v); },
        py::arg("values"));
}
