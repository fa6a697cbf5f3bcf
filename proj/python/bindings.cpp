// SPDX-License-Identifier: Apache-2.0
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "she/driver.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_she, m) {
    m.doc() = "Secure hybrid beamforming for dual-function radar-communication";

    py::class_<she::ArrayGeometry>(m, "ArrayGeometry")
        .def(py::init<>())
        .def_readwrite("num_tx", &she::ArrayGeometry::num_tx)
        .def_readwrite("num_rx", &she::ArrayGeometry::num_rx)
        .def_readwrite("spacing_ratio", &she::ArrayGeometry::spacing_ratio);

    py::class_<she::SystemConfig>(m, "SystemConfig")
        .def(py::init<>())
        .def_readwrite("geometry", &she::SystemConfig::geometry)
        .def_readwrite("num_rf", &she::SystemConfig::num_rf)
        .def_readwrite("num_users", &she::SystemConfig::num_users)
        .def_readwrite("power_budget", &she::SystemConfig::power_budget)
        .def_readwrite("noise_user", &she::SystemConfig::noise_user)
        .def_readwrite("noise_eue", &she::SystemConfig::noise_eue)
        .def_readwrite("noise_radar", &she::SystemConfig::noise_radar)
        .def_readwrite("target_angle", &she::SystemConfig::target_angle)
        .def_readwrite("angle_uncertainty", &she::SystemConfig::angle_uncertainty)
        .def_readwrite("grid_step", &she::SystemConfig::grid_step)
        .def_readwrite("clutter_angles", &she::SystemConfig::clutter_angles)
        .def_readwrite("csi_error_var", &she::SystemConfig::csi_error_var)
        .def_readwrite("num_samples", &she::SystemConfig::num_samples)
        .def_readwrite("eue_rate_caps", &she::SystemConfig::eue_rate_caps)
        .def_readwrite("radar_sinr_target", &she::SystemConfig::radar_sinr_target)
        .def_readwrite("false_alarm", &she::SystemConfig::false_alarm)
        .def("validate", &she::SystemConfig::validate);

    py::class_<she::BeamformerSet>(m, "BeamformerSet")
        .def(py::init<>())
        .def_readwrite("analog", &she::BeamformerSet::analog)
        .def_readwrite("digital_comm", &she::BeamformerSet::digital_comm)
        .def_readwrite("digital_i2s", &she::BeamformerSet::digital_i2s)
        .def("effective", &she::BeamformerSet::effective)
        .def("total_power", &she::BeamformerSet::total_power);

    py::class_<she::MetricsReport>(m, "MetricsReport")
        .def_readonly("lue_sinr", &she::MetricsReport::lue_sinr)
        .def_readonly("lue_rate", &she::MetricsReport::lue_rate)
        .def_readonly("eue_rate_worst", &she::MetricsReport::eue_rate_worst)
        .def_readonly("secrecy_rate_worst", &she::MetricsReport::secrecy_rate_worst)
        .def_readonly("radar_sinr_grid", &she::MetricsReport::radar_sinr_grid)
        .def_readonly("min_radar_sinr", &she::MetricsReport::min_radar_sinr)
        .def_readonly("detection_probability",
                      &she::MetricsReport::detection_probability)
        .def("to_json", &she::MetricsReport::to_json);

    py::enum_<she::RunStatus>(m, "RunStatus")
        .value("Converged", she::RunStatus::Converged)
        .value("IterationCap", she::RunStatus::IterationCap)
        .value("InfeasibleRelaxed", she::RunStatus::InfeasibleRelaxed)
        .value("Failed", she::RunStatus::Failed);

    py::class_<she::RunResult>(m, "RunResult")
        .def_readonly("beamformers", &she::RunResult::beamformers)
        .def_readonly("metrics", &she::RunResult::metrics)
        .def_readonly("status", &she::RunResult::status)
        .def_readonly("error", &she::RunResult::error)
        .def_readonly("seed", &she::RunResult::seed)
        .def_readonly("wall_time_s", &she::RunResult::wall_time_s)
        .def_readonly("achieved_gamma", &she::RunResult::achieved_gamma)
        .def_property_readonly("receive_filter", [](const she::RunResult& r) {
            return r.filter.w;
        });

    m.def("desk_config", &she::desk_config);
    m.def("paper_config", &she::paper_config);
    m.def("load_config", &she::load_config, py::arg("path"));
    m.def("parse_config", &she::parse_config, py::arg("json_text"));
    m.def("transmit_steering", &she::transmit_steering, py::arg("theta_deg"),
          py::arg("geometry"));
    m.def("angle_grid", &she::angle_grid, py::arg("target_angle"),
          py::arg("angle_uncertainty"), py::arg("grid_step"));
    m.def("detection_probability", &she::detection_probability, py::arg("radar_sinr"),
          py::arg("false_alarm"));
    m.def("marcum_q1", &she::marcum_q1, py::arg("a"), py::arg("b"));
    m.def(
        "transmit_beampattern",
        [](const she::BeamformerSet& bf, const std::vector<double>& grid,
           const she::ArrayGeometry& geo) {
            return she::transmit_beampattern(bf, grid, geo);
        },
        py::arg("beamformers"), py::arg("grid_deg"), py::arg("geometry"));
    m.def(
        "run",
        [](const she::SystemConfig& config, std::uint64_t seed, int max_outer) {
            she::RunOptions opts;
            opts.max_outer = max_outer;
            return she::run_she(config, seed, opts);
        },
        py::arg("config"), py::arg("seed") = 1, py::arg("max_outer") = 30,
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "baseline",
        [](const she::SystemConfig& config, const std::string& variant,
           std::uint64_t seed, int max_outer) {
            she::RunOptions opts;
            opts.max_outer = max_outer;
            return she::run_baseline(config, she::variant_from_name(variant), seed,
                                     opts);
        },
        py::arg("config"), py::arg("variant"), py::arg("seed") = 1,
        py::arg("max_outer") = 30, py::call_guard<py::gil_scoped_release>());
    m.def(
        "compute_metrics",
        [](const she::SystemConfig& config, const she::BeamformerSet& bf,
           const Eigen::VectorXcd& w, std::uint64_t seed) {
            return she::compute_metrics(she::channels_for_run(config, seed), bf, w,
                                        config);
        },
        py::arg("config"), py::arg("beamformers"), py::arg("receive_filter"),
        py::arg("seed") = 1);
}
