// SPDX-License-Identifier: Apache-2.0
#include "she/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace she {

Eigen::MatrixXcd BeamformerSet::stacked() const {
    Eigen::MatrixXcd d(digital_i2s.size(), digital_comm.cols() + 1);
    d.col(0) = digital_i2s;
    d.rightCols(digital_comm.cols()) = digital_comm;
    return d;
}

Eigen::MatrixXcd BeamformerSet::effective() const { return analog * stacked(); }

double BeamformerSet::total_power() const { return effective().squaredNorm(); }

double lue_sinr_effective(int u, const Eigen::VectorXcd& channel,
                          const Eigen::MatrixXcd& effective, double noise_user) {
    if (noise_user <= 0.0) throw std::invalid_argument("noise_user must be > 0");
    const int users = static_cast<int>(effective.cols()) - 1;
    if (u < 0 || u >= users) throw std::out_of_range("user index");
    const Eigen::RowVectorXcd rx = channel.adjoint() * effective;
    const double signal = std::norm(rx(u + 1));
    double interference = std::norm(rx(0)); // I2S stream
    for (int v = 1; v <= users; ++v)
        if (v != u + 1) interference += std::norm(rx(v));
    return signal / (interference + noise_user);
}

double eue_sinr_effective(int u, const Eigen::VectorXcd& eue_channel,
                          const Eigen::MatrixXcd& effective, double noise_eue) {
    const int users = static_cast<int>(effective.cols()) - 1;
    if (u < 0 || u >= users) throw std::out_of_range("user index");
    // The eavesdropper strips multi-user interference; only the I2S stream
    // and thermal noise remain in the denominator.
    const double signal = std::norm(eue_channel.dot(effective.col(u + 1)));
    const double jamming = std::norm(eue_channel.dot(effective.col(0)));
    return signal / (jamming + noise_eue);
}

double radar_sinr_effective(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& effective,
                            double theta_deg, const SystemConfig& config) {
    if (w.norm() == 0.0) throw std::invalid_argument("radar_sinr: zero receive filter");
    const Eigen::RowVectorXcd wt = w.adjoint() * radar_channel(theta_deg, config.geometry);
    const double numerator =
        std::norm(config.target_amplitude) * (wt * effective).squaredNorm();
    double denom = config.noise_radar * w.squaredNorm();
    for (std::size_t i = 0; i < config.clutter_angles.size(); ++i) {
        const Eigen::RowVectorXcd wc =
            w.adjoint() * radar_channel(config.clutter_angles[i], config.geometry);
        denom += std::norm(config.clutter_amplitudes[i]) * (wc * effective).squaredNorm();
    }
    return numerator / denom;
}

double mse(int u, std::complex<double> kappa, const Eigen::VectorXcd& channel,
           const Eigen::MatrixXcd& effective, double noise_user) {
    const int users = static_cast<int>(effective.cols()) - 1;
    if (u < 0 || u >= users) throw std::out_of_range("user index");
    const Eigen::RowVectorXcd rx = channel.adjoint() * effective;
    const double total = rx.squaredNorm() + noise_user;
    return std::norm(kappa) * total - 2.0 * std::real(kappa * rx(u + 1)) + 1.0;
}

double lue_sinr(int u, const ChannelSet& channels, const BeamformerSet& bf,
                double noise_user) {
    return lue_sinr_effective(u, channels.lue.col(u), bf.effective(), noise_user);
}

double eue_sinr(int u, const Eigen::VectorXcd& eue_channel, const BeamformerSet& bf,
                double noise_eue) {
    return eue_sinr_effective(u, eue_channel, bf.effective(), noise_eue);
}

double radar_sinr(const Eigen::VectorXcd& w, const BeamformerSet& bf, double theta_deg,
                  const SystemConfig& config) {
    return radar_sinr_effective(w, bf.effective(), theta_deg, config);
}

double worst_case_sr(const std::vector<double>& lue_rates,
                     const std::vector<std::vector<double>>& eue_rates_per_sample) {
    if (lue_rates.size() != eue_rates_per_sample.size())
        throw std::invalid_argument("worst_case_sr: dimension mismatch");
    double sr = 0.0;
    for (std::size_t u = 0; u < lue_rates.size(); ++u) {
        const auto& samples = eue_rates_per_sample[u];
        if (samples.empty()) throw std::invalid_argument("worst_case_sr: empty sample set");
        const double worst = *std::max_element(samples.begin(), samples.end());
        sr += std::max(lue_rates[u] - worst, 0.0);
    }
    return sr;
}

double marcum_q1(double a, double b) {
    if (a < 0.0 || b < 0.0) throw std::invalid_argument("marcum_q1: negative argument");
    if (b == 0.0) return 1.0;
    // Noncentral chi-square (2 dof) tail: Q1(a,b) =
    //   sum_k Pois(k; a^2/2) * exp(-b^2/2) * sum_{m<=k} (b^2/2)^m / m!
    const double la = 0.5 * a * a;
    const double lb = 0.5 * b * b;
    if (la <= 600.0 && lb <= 600.0) {
        double pois = std::exp(-la);       // Poisson(k) weight
        double chi_term = std::exp(-lb);   // (lb)^k/k! * exp(-lb)
        double chi_tail = chi_term;        // partial sum_{m<=k}
        double q = pois * chi_tail;
        double tail = 1.0 - pois; // remaining Poisson mass, bounds truncation error
        for (int k = 1; k < 100000 && tail > 1e-17; ++k) {
            pois *= la / k;
            chi_term *= lb / k;
            chi_tail += chi_term;
            q += pois * chi_tail;
            tail -= pois;
        }
        return std::min(q, 1.0);
    }
    // Large arguments: exp(-la) or exp(-lb) underflows, so start both series in
    // the log domain at the left edge of the Poisson(la) mass window.
    const int k0 = static_cast<int>(
        std::max(0.0, std::floor(la - 12.0 * std::sqrt(la) - 10.0)));
    double chi_tail; // P(Poisson(lb) <= k0)
    if (static_cast<double>(k0) > lb + 12.0 * std::sqrt(lb) + 10.0) {
        chi_tail = 1.0;
    } else if (lb <= 600.0) {
        double term = std::exp(-lb);
        chi_tail = term;
        for (int m = 1; m <= k0; ++m) {
            term *= lb / m;
            chi_tail += term;
        }
    } else {
        // both parameters huge and comparable: normal approximation of the
        // Poisson CDF (continuity-corrected), plenty for detection curves
        chi_tail = 0.5 * std::erfc(-(k0 + 0.5 - lb) / std::sqrt(2.0 * lb));
    }
    double log_pois = -la + k0 * std::log(la) - std::lgamma(k0 + 1.0);
    double pois = std::exp(log_pois);
    double chi_term =
        (lb > 0.0) ? std::exp(-lb + k0 * std::log(lb) - std::lgamma(k0 + 1.0)) : 0.0;
    double q = pois * chi_tail;
    double seen = pois;
    for (int k = k0 + 1; k < k0 + 2000000 && 1.0 - seen > 1e-17; ++k) {
        pois *= la / k;
        chi_term *= lb / k;
        chi_tail = std::min(chi_tail + chi_term, 1.0);
        q += pois * chi_tail;
        seen += pois;
    }
    return std::min(q, 1.0);
}

double detection_probability(double radar_sinr, double false_alarm) {
    if (radar_sinr < 0.0) throw std::invalid_argument("radar_sinr must be >= 0");
    if (false_alarm <= 0.0 || false_alarm > 1.0)
        throw std::invalid_argument("false_alarm must be in (0, 1]");
    const double a = std::sqrt(2.0 * radar_sinr);
    const double b = std::sqrt(-2.0 * std::log(false_alarm));
    return marcum_q1(a, b);
}

Eigen::MatrixXcd synthesize_transmit_block(const BeamformerSet& bf, int num_symbols,
                                           Rng& rng) {
    if (num_symbols < 1) throw std::invalid_argument("num_symbols must be >= 1");
    const int users = static_cast<int>(bf.digital_comm.cols());
    Eigen::MatrixXcd block(bf.analog.rows(), num_symbols);
    Eigen::VectorXcd sc(users);
    for (int t = 0; t < num_symbols; ++t) {
        for (int u = 0; u < users; ++u) sc(u) = rng.cgaussian();
        const std::complex<double> si = rng.cgaussian();
        block.col(t) = bf.analog * (bf.digital_comm * sc + bf.digital_i2s * si);
    }
    return block;
}

std::vector<double> transmit_beampattern(const BeamformerSet& bf,
                                         const std::vector<double>& grid_deg,
                                         const ArrayGeometry& geo) {
    if (grid_deg.empty()) throw std::invalid_argument("beampattern: empty grid");
    const Eigen::MatrixXcd y = bf.effective();
    std::vector<double> pattern;
    pattern.reserve(grid_deg.size());
    for (double theta : grid_deg)
        pattern.push_back((transmit_steering(theta, geo).adjoint() * y).squaredNorm());
    return pattern;
}

MetricsReport compute_metrics(const ChannelSet& channels, const BeamformerSet& bf,
                              const Eigen::VectorXcd& w, const SystemConfig& config) {
    MetricsReport r;
    const Eigen::MatrixXcd y = bf.effective();
    std::vector<std::vector<double>> eue_rates(config.num_users);
    for (int u = 0; u < config.num_users; ++u) {
        const double s = lue_sinr_effective(u, channels.lue.col(u), y, config.noise_user);
        r.lue_sinr.push_back(s);
        r.lue_rate.push_back(rate(s));
        for (const auto& he : channels.eue_samples)
            eue_rates[u].push_back(rate(eue_sinr_effective(u, he, y, config.noise_eue)));
        r.eue_rate_worst.push_back(
            *std::max_element(eue_rates[u].begin(), eue_rates[u].end()));
    }
    r.secrecy_rate_worst = worst_case_sr(r.lue_rate, eue_rates);
    const auto grid =
        angle_grid(config.target_angle, config.angle_uncertainty, config.grid_step);
    for (double theta : grid)
        r.radar_sinr_grid.push_back(radar_sinr_effective(w, y, theta, config));
    r.min_radar_sinr =
        *std::min_element(r.radar_sinr_grid.begin(), r.radar_sinr_grid.end());
    r.detection_probability = detection_probability(r.min_radar_sinr, config.false_alarm);
    return r;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["lue_sinr"] = lue_sinr;
    j["lue_rate"] = lue_rate;
    j["eue_rate_worst"] = eue_rate_worst;
    j["secrecy_rate_worst"] = secrecy_rate_worst;
    j["radar_sinr_grid"] = radar_sinr_grid;
    j["min_radar_sinr"] = min_radar_sinr;
    j["detection_probability"] = detection_probability;
    return j.dump(2);
}

} // namespace she
