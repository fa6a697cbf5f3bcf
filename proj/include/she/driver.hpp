// SPDX-License-Identifier: Apache-2.0
//
// Outer-loop driver: alternates the receive-filter step with the hybrid
// beamformer inner loop, runs benchmark variants and experiment sweeps, and
// handles result serialization.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "she/array_model.hpp"
#include "she/hbf.hpp"
#include "she/metrics.hpp"
#include "she/receive_filter.hpp"

namespace she {

enum class RunStatus { Converged, IterationCap, InfeasibleRelaxed, Failed };

enum class Variant { She, FdBf, ConvHbf, CommOnlyI2s, CommOnlyConv };

Variant variant_from_name(const std::string& name); // throws on unknown
std::string variant_name(Variant v);

struct OuterTraceRow {
    int outer_iter = 0;
    int inner_iter = 0;
    double eta = 0.0;
    double worst_case_sr = 0.0;
    double min_radar_sinr = 0.0;
    double consensus_residual = 0.0;
    double max_eue_rate = 0.0;
};

struct RunOptions {
    int max_outer = 30;
    double outer_tol = 1e-3; // relative worst-case SR change
    HbfOptions hbf;
    double filter_tol = 1e-4;
    int filter_max_outer = 50;
};

struct RunResult {
    BeamformerSet beamformers;
    ReceiveFilterState filter;
    MetricsReport metrics;
    std::vector<OuterTraceRow> trace;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::Failed;
    std::string error;
    double wall_time_s = 0.0;
    double achieved_gamma = 0.0; // min grid radar SINR at the final iterate
    double gamma_target_used = 0.0;
    bool power_slack = false;
    Variant variant = Variant::She;
};

struct ExperimentSpec {
    SystemConfig base;
    std::string sweep_param; // gamma_r_db | xi | csi_error_var | angle_uncertainty
    std::vector<double> sweep_values;
    std::vector<Variant> variants;
    int trials = 50;
    std::uint64_t base_seed = 1;
    std::string output_dir;
    RunOptions opts;
};

/// Full SHE run: outer loop of receive-filter and hybrid-beamformer steps.
RunResult run_she(const SystemConfig& config, std::uint64_t seed,
                  const RunOptions& opts = {});

/// Benchmark variants (fully digital, conventional HBF, communication-only).
RunResult run_baseline(const SystemConfig& config, Variant variant, std::uint64_t seed,
                       const RunOptions& opts = {});

/// Sweep + Monte Carlo experiment; writes per-trial CSVs, aggregate JSON and
/// one convergence trace per (variant, value). Returns paths written.
std::vector<std::string> run_experiment(const ExperimentSpec& spec);

ExperimentSpec load_experiment_spec(const std::string& path);

/// Post-hoc checks on a finished run (eavesdropper caps, constant modulus,
/// power window, report consistency). Returns human-readable failures.
std::vector<std::string> check_run(const RunResult& result, const ChannelSet& channels,
                                   const SystemConfig& config);

/// Deterministic per-run channel realization (same seed => same channels).
ChannelSet channels_for_run(const SystemConfig& config, std::uint64_t seed);

// Beamformer JSON serialization: arrays of [re, im] with shape metadata.
std::string beamformers_to_json(const BeamformerSet& bf, const Eigen::VectorXcd& w);
void beamformers_from_json(const std::string& text, BeamformerSet& bf,
                           Eigen::VectorXcd& w);

void write_trace_csv(const std::string& path, const std::vector<OuterTraceRow>& rows);
void write_beampattern_csv(const std::string& path, const std::vector<double>& grid_deg,
                           const std::vector<double>& power_linear);

} // namespace she
