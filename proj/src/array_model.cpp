// SPDX-License-Identifier: Apache-2.0
#include "she/array_model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace she {

using json = nlohmann::json;

void ArrayGeometry::validate() const {
    if (num_tx < 1 || num_rx < 1)
        throw std::invalid_argument("array: antenna counts must be >= 1");
    if (spacing_ratio <= 0.0)
        throw std::invalid_argument("array: spacing_ratio must be > 0");
}

void SystemConfig::validate() const {
    geometry.validate();
    if (num_users < 1) throw std::invalid_argument("config: num_users must be >= 1");
    if (num_rf < num_users + 1)
        throw std::invalid_argument("config: num_rf must be >= num_users + 1");
    if (num_rf > geometry.num_tx)
        throw std::invalid_argument("config: num_rf must be <= num_tx");
    if (power_budget <= 0.0) throw std::invalid_argument("config: power_budget must be > 0");
    if (noise_user <= 0.0 || noise_eue <= 0.0 || noise_radar <= 0.0)
        throw std::invalid_argument("config: noise powers must be > 0");
    if (clutter_angles.size() != clutter_amplitudes.size())
        throw std::invalid_argument("config: clutter angle/amplitude lengths differ");
    if (static_cast<int>(eue_rate_caps.size()) != num_users)
        throw std::invalid_argument("config: eue_rate_caps must have one entry per user");
    for (double cap : eue_rate_caps)
        if (cap < 0.0) throw std::invalid_argument("config: eue_rate_caps must be >= 0");
    if (angle_uncertainty < 0.0)
        throw std::invalid_argument("config: angle_uncertainty must be >= 0");
    if (grid_step <= 0.0) throw std::invalid_argument("config: grid_step must be > 0");
    if (csi_error_var < 0.0) throw std::invalid_argument("config: csi_error_var must be >= 0");
    if (num_samples < 1) throw std::invalid_argument("config: num_samples must be >= 1");
    if (radar_sinr_target <= 0.0)
        throw std::invalid_argument("config: radar_sinr_target must be > 0");
    if (false_alarm <= 0.0 || false_alarm > 1.0)
        throw std::invalid_argument("config: false_alarm must be in (0, 1]");
    if (eue_estimate.size() != 0 && eue_estimate.size() != geometry.num_tx)
        throw std::invalid_argument("config: eue_estimate length must equal num_tx");
}

namespace {

Eigen::VectorXcd steering(double theta_deg, int elements, double spacing_ratio) {
    const double theta = theta_deg * std::numbers::pi / 180.0;
    const double phase_step = 2.0 * std::numbers::pi * spacing_ratio * std::sin(theta);
    Eigen::VectorXcd a(elements);
    for (int m = 0; m < elements; ++m)
        a(m) = std::polar(1.0, phase_step * m);
    return a;
}

} // namespace

Eigen::VectorXcd transmit_steering(double theta_deg, const ArrayGeometry& geo) {
    return steering(theta_deg, geo.num_tx, geo.spacing_ratio);
}

Eigen::VectorXcd receive_steering(double theta_deg, const ArrayGeometry& geo) {
    return steering(theta_deg, geo.num_rx, geo.spacing_ratio);
}

Eigen::MatrixXcd radar_channel(double theta_deg, const ArrayGeometry& geo) {
    return receive_steering(theta_deg, geo) * transmit_steering(theta_deg, geo).adjoint();
}

Eigen::MatrixXcd generate_lue_channels(const SystemConfig& config, int path_count,
                                       Rng& rng) {
    if (path_count < 1) throw std::invalid_argument("path_count must be >= 1");
    const int mt = config.geometry.num_tx;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(mt, config.num_users);
    const double scale = std::sqrt(static_cast<double>(mt) / path_count);
    for (int u = 0; u < config.num_users; ++u) {
        for (int l = 0; l < path_count; ++l) {
            const std::complex<double> gain = rng.cgaussian();
            const double angle = rng.uniform(-90.0, 90.0);
            h.col(u) += gain * transmit_steering(angle, config.geometry);
        }
        h.col(u) *= scale;
    }
    return h;
}

std::vector<Eigen::VectorXcd> sample_eue_channels(const Eigen::VectorXcd& eue_estimate,
                                                  double csi_error_var, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample count must be >= 1");
    if (csi_error_var < 0.0) throw std::invalid_argument("csi_error_var must be >= 0");
    std::vector<Eigen::VectorXcd> samples;
    samples.reserve(n);
    samples.push_back(eue_estimate);
    const double sigma = std::sqrt(csi_error_var);
    for (int i = 1; i < n; ++i) {
        Eigen::VectorXcd s = eue_estimate;
        if (csi_error_var > 0.0) {
            for (Eigen::Index m = 0; m < s.size(); ++m)
                s(m) += sigma * rng.cgaussian();
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<double> angle_grid(double target_angle, double angle_uncertainty,
                               double grid_step) {
    if (grid_step <= 0.0) throw std::invalid_argument("grid_step must be > 0");
    const int half = static_cast<int>(std::lround(angle_uncertainty / grid_step));
    std::vector<double> grid;
    grid.reserve(2 * half + 1);
    for (int k = -half; k <= half; ++k)
        grid.push_back(target_angle + k * grid_step);
    return grid;
}

ChannelSet build_channels(const SystemConfig& config, Rng& rng) {
    ChannelSet ch;
    ch.lue = generate_lue_channels(config, config.lue_path_count, rng);
    Eigen::VectorXcd estimate = config.eue_estimate;
    if (estimate.size() == 0) {
        SystemConfig one = config;
        one.num_users = 1;
        // needs num_rf >= num_users+1 only for validate(); generation ignores it
        estimate = generate_lue_channels(one, config.lue_path_count, rng).col(0);
    }
    ch.eue_samples = sample_eue_channels(estimate, config.csi_error_var,
                                         config.num_samples, rng);
    return ch;
}

namespace {

std::complex<double> amplitude_from_db(double power_db) {
    return {std::sqrt(db_to_linear(power_db)), 0.0};
}

} // namespace

SystemConfig parse_config(const std::string& json_text) {
    const json j = json::parse(json_text);
    SystemConfig c;
    const json& arr = j.at("array");
    c.geometry.num_tx = arr.at("num_tx").get<int>();
    c.geometry.num_rx = arr.at("num_rx").get<int>();
    c.geometry.spacing_ratio = arr.value("spacing_ratio", 0.5);

    const json& sys = j.at("system");
    c.num_rf = sys.at("num_rf").get<int>();
    c.num_users = sys.at("num_users").get<int>();
    c.power_budget = sys.at("power_budget").get<double>();
    c.noise_user = db_to_linear(sys.at("noise_user_db").get<double>());
    c.noise_eue = db_to_linear(sys.at("noise_eue_db").get<double>());
    c.noise_radar = db_to_linear(sys.at("noise_radar_db").get<double>());

    const json& radar = j.at("radar");
    c.target_angle = radar.at("target_angle_deg").get<double>();
    c.angle_uncertainty = radar.value("angle_uncertainty_deg", 0.0);
    c.grid_step = radar.value("grid_step_deg", 0.5);
    c.clutter_angles = radar.value("clutter_angles_deg", std::vector<double>{});
    c.target_amplitude = amplitude_from_db(radar.at("target_amplitude_db").get<double>());
    for (double db : radar.value("clutter_amplitudes_db", std::vector<double>{}))
        c.clutter_amplitudes.push_back(amplitude_from_db(db));
    c.radar_sinr_target = db_to_linear(radar.at("sinr_target_db").get<double>());
    c.false_alarm = radar.value("false_alarm", 1e-4);

    const json& eve = j.at("eavesdropper");
    c.csi_error_var = eve.value("csi_error_var", 0.0);
    c.num_samples = eve.value("num_samples", 1);
    c.eue_rate_caps = eve.at("rate_caps").get<std::vector<double>>();
    if (eve.contains("estimate")) {
        const json& est = eve.at("estimate");
        c.eue_estimate.resize(static_cast<Eigen::Index>(est.size()));
        for (Eigen::Index i = 0; i < c.eue_estimate.size(); ++i)
            c.eue_estimate(i) = {est.at(i).at(0).get<double>(),
                                 est.at(i).at(1).get<double>()};
    }

    if (j.contains("channel"))
        c.lue_path_count = j.at("channel").value("path_count", 4);

    c.validate();
    return c;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

SystemConfig desk_config() {
    SystemConfig c;
    c.geometry = {16, 4, 0.5};
    c.num_rf = 4;
    c.num_users = 2;
    c.power_budget = 1.0;
    c.noise_user = db_to_linear(-10.0);
    c.noise_eue = db_to_linear(-20.0);
    c.noise_radar = db_to_linear(-20.0);
    c.target_angle = 0.0;
    c.angle_uncertainty = 1.0; // K = 5 with the default 0.5 deg step
    c.grid_step = 0.5;
    c.clutter_angles = {-45.0, 30.0, 60.0};
    c.target_amplitude = amplitude_from_db(10.0);
    c.clutter_amplitudes = {amplitude_from_db(15.0), amplitude_from_db(15.0),
                            amplitude_from_db(15.0)};
    c.csi_error_var = 0.01;
    c.num_samples = 10;
    c.eue_rate_caps = {0.5, 0.5};
    c.radar_sinr_target = db_to_linear(10.0);
    c.false_alarm = 1e-4;
    c.validate();
    return c;
}

SystemConfig paper_config() {
    SystemConfig c = desk_config();
    c.geometry = {32, 8, 0.5};
    c.num_rf = 8;
    c.num_users = 4;
    c.angle_uncertainty = 5.0;
    c.num_samples = 20;
    c.eue_rate_caps = {0.5, 0.5, 0.5, 0.5};
    c.validate();
    return c;
}

} // namespace she
