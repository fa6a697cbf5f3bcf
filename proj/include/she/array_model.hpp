// SPDX-License-Identifier: Apache-2.0
//
// Antenna array geometry, steering vectors, radar channels, user channels,
// sampled eavesdropper channels and the target-angle uncertainty grid.
#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "she/rng.hpp"

namespace she {

struct ArrayGeometry {
    int num_tx = 1;             // transmit antennas M_t
    int num_rx = 1;             // receive antennas M_r
    double spacing_ratio = 0.5; // element spacing over wavelength d/lambda

    void validate() const;
};

/// All scenario constants. Powers and amplitudes are linear internally;
/// dB appears only in the configuration file (fields suffixed _db).
struct SystemConfig {
    ArrayGeometry geometry;
    int num_rf = 1;      // RF chains N_RF
    int num_users = 1;   // downlink users U
    double power_budget = 1.0;
    double noise_user = 0.1;
    double noise_eue = 0.01;
    double noise_radar = 0.01;

    double target_angle = 0.0;       // degrees
    double angle_uncertainty = 0.0;  // degrees
    double grid_step = 0.5;          // degrees
    std::vector<double> clutter_angles; // degrees
    std::complex<double> target_amplitude{1.0, 0.0};
    std::vector<std::complex<double>> clutter_amplitudes;

    Eigen::VectorXcd eue_estimate;  // length M_t; empty = draw per run
    double csi_error_var = 0.0;
    int num_samples = 1;
    std::vector<double> eue_rate_caps; // bits/s/Hz, length U
    double radar_sinr_target = 1.0;    // linear
    double false_alarm = 1e-4;

    int lue_path_count = 4; // multipath components per user channel

    void validate() const;
};

struct ChannelSet {
    Eigen::MatrixXcd lue;                     // M_t x U, columns h_u
    std::vector<Eigen::VectorXcd> eue_samples; // N vectors of length M_t
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Phasor e^{j theta} renormalized so std::abs(result) == 1.0 exactly;
/// std::polar alone can land one ulp off the unit circle.
inline std::complex<double> unit_phasor(double theta) {
    std::complex<double> z = std::polar(1.0, theta);
    for (int pass = 0; pass < 4 && std::abs(z) != 1.0; ++pass) z /= std::abs(z);
    return z;
}

/// a_t(theta): m-th entry exp(j*2*pi*(d/lambda)*m*sin(theta)), m = 0..M_t-1.
Eigen::VectorXcd transmit_steering(double theta_deg, const ArrayGeometry& geo);

/// a_r(theta), same phase law over the M_r receive elements.
Eigen::VectorXcd receive_steering(double theta_deg, const ArrayGeometry& geo);

/// Rank-one radar channel a_r(theta) * a_t(theta)^H.
Eigen::MatrixXcd radar_channel(double theta_deg, const ArrayGeometry& geo);

/// Geometric multipath user channels: each column is
/// sqrt(M_t/P) * sum_l alpha_l a_t(phi_l), alpha_l ~ CN(0,1), phi_l uniform.
Eigen::MatrixXcd generate_lue_channels(const SystemConfig& config, int path_count,
                                       Rng& rng);

/// i.i.d. eavesdropper channel samples h_e^n = h_hat + dh^n,
/// dh^n ~ CN(0, sigma_v^2 I). Sample 0 is the estimate itself so the
/// robustness set always contains the nominal channel.
std::vector<Eigen::VectorXcd> sample_eue_channels(const Eigen::VectorXcd& eue_estimate,
                                                  double csi_error_var, int n, Rng& rng);

/// Uniform endpoint-inclusive grid on [theta0 - dtheta, theta0 + dtheta],
/// K = round(2*dtheta/step) + 1 points.
std::vector<double> angle_grid(double target_angle, double angle_uncertainty,
                               double grid_step);

/// Channels for one run: user channels from the multipath model plus the
/// eavesdropper sample set (estimate drawn from the same model when the
/// config does not pin one).
ChannelSet build_channels(const SystemConfig& config, Rng& rng);

/// Load a SystemConfig from a JSON file; *_db fields are converted to linear.
SystemConfig load_config(const std::string& path);
SystemConfig parse_config(const std::string& json_text);

/// Default CI-speed scenario (M_t=16, M_r=4, N_RF=4, U=2, K=5, N=10).
SystemConfig desk_config();

/// Full simulation scenario (M_t=32, M_r=8, N_RF=8, U=4).
SystemConfig paper_config();

} // namespace she
