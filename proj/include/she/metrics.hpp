// SPDX-License-Identifier: Apache-2.0
//
// Performance quantities: communication SINRs and rates, worst-case secrecy
// rate, radar SINR over the angle grid, WMMSE error, detection probability
// and diagnostic beampatterns.
#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "she/array_model.hpp"
#include "she/rng.hpp"

namespace she {

/// Analog stage A (unit-modulus entries), communication digital stage D_C and
/// the integrated sensing-and-security digital vector d_I.
struct BeamformerSet {
    Eigen::MatrixXcd analog;       // M_t x N_RF
    Eigen::MatrixXcd digital_comm; // N_RF x U
    Eigen::VectorXcd digital_i2s;  // N_RF

    /// Stacked digital stage [d_I | D_C], N_RF x (U+1). Column 0 carries the
    /// sensing-and-security stream.
    Eigen::MatrixXcd stacked() const;

    /// Effective transmit beamformer A * [d_I | D_C], M_t x (U+1).
    Eigen::MatrixXcd effective() const;

    double total_power() const; // ||A D_C||_F^2 + ||A d_I||_F^2
};

struct MetricsReport {
    std::vector<double> lue_sinr;       // linear, per user
    std::vector<double> lue_rate;       // bits/s/Hz
    std::vector<double> eue_rate_worst; // max over channel samples, per user
    double secrecy_rate_worst = 0.0;
    std::vector<double> radar_sinr_grid; // linear, per grid angle
    double min_radar_sinr = 0.0;
    double detection_probability = 0.0;

    std::string to_json() const;
};

// --- effective-beamformer forms (Y = [y_0 | y_1 .. y_U]) ------------------

double lue_sinr_effective(int u, const Eigen::VectorXcd& channel,
                          const Eigen::MatrixXcd& effective, double noise_user);

double eue_sinr_effective(int u, const Eigen::VectorXcd& eue_channel,
                          const Eigen::MatrixXcd& effective, double noise_eue);

double radar_sinr_effective(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& effective,
                            double theta_deg, const SystemConfig& config);

/// WMMSE error for user u at equalizer kappa; equals 1/(1+SINR_u) at the
/// MMSE equalizer.
double mse(int u, std::complex<double> kappa, const Eigen::VectorXcd& channel,
           const Eigen::MatrixXcd& effective, double noise_user);

// --- BeamformerSet wrappers ------------------------------------------------

double lue_sinr(int u, const ChannelSet& channels, const BeamformerSet& bf,
                double noise_user);

double eue_sinr(int u, const Eigen::VectorXcd& eue_channel, const BeamformerSet& bf,
                double noise_eue);

double radar_sinr(const Eigen::VectorXcd& w, const BeamformerSet& bf, double theta_deg,
                  const SystemConfig& config);

inline double rate(double sinr) { return std::log2(1.0 + sinr); }

/// Worst-case secrecy rate: sum_u [lue_rate_u - max_n eue_rate_{u,n}]^+.
double worst_case_sr(const std::vector<double>& lue_rates,
                     const std::vector<std::vector<double>>& eue_rates_per_sample);

/// Marcum Q of order 1.
double marcum_q1(double a, double b);

/// GLRT detection probability Q1(sqrt(2 SINR), sqrt(-2 ln Pfa)).
double detection_probability(double radar_sinr, double false_alarm);

/// Random transmit block x = A (D_C s_C + d_I s_I) per column.
Eigen::MatrixXcd synthesize_transmit_block(const BeamformerSet& bf, int num_symbols,
                                           Rng& rng);

/// P(theta) = ||a_t(theta)^H A D_CI||^2 per grid angle.
std::vector<double> transmit_beampattern(const BeamformerSet& bf,
                                         const std::vector<double>& grid_deg,
                                         const ArrayGeometry& geo);

/// Full report for one design point.
MetricsReport compute_metrics(const ChannelSet& channels, const BeamformerSet& bf,
                              const Eigen::VectorXcd& w, const SystemConfig& config);

} // namespace she
