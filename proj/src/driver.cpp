// SPDX-License-Identifier: Apache-2.0
#include "she/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace she {

using json = nlohmann::json;

Variant variant_from_name(const std::string& name) {
    if (name == "SHE") return Variant::She;
    if (name == "FD-BF") return Variant::FdBf;
    if (name == "ConvHBF") return Variant::ConvHbf;
    if (name == "CommOnly-I2S") return Variant::CommOnlyI2s;
    if (name == "CommOnly-Conv") return Variant::CommOnlyConv;
    throw std::invalid_argument("unknown variant: " + name);
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::She: return "SHE";
        case Variant::FdBf: return "FD-BF";
        case Variant::ConvHbf: return "ConvHBF";
        case Variant::CommOnlyI2s: return "CommOnly-I2S";
        case Variant::CommOnlyConv: return "CommOnly-Conv";
    }
    return "?";
}

namespace {

HbfOptions options_for(Variant v, const HbfOptions& base) {
    HbfOptions o = base;
    switch (v) {
        case Variant::She: break;
        case Variant::FdBf: o.analog_stage = false; break;
        case Variant::ConvHbf: o.use_i2s = false; break;
        case Variant::CommOnlyI2s: o.radar_constraint = false; break;
        case Variant::CommOnlyConv:
            o.radar_constraint = false;
            o.use_i2s = false;
            break;
    }
    return o;
}

double max_eue_rate(const MetricsReport& m) {
    return m.eue_rate_worst.empty()
               ? 0.0
               : *std::max_element(m.eue_rate_worst.begin(), m.eue_rate_worst.end());
}

RunResult run_variant(const SystemConfig& config_in, Variant variant,
                      std::uint64_t seed, const RunOptions& opts) {
    RunResult res;
    res.seed = seed;
    res.variant = variant;
    const auto t_start = std::chrono::steady_clock::now();
    try {
        SystemConfig config = config_in;
        config.validate();
        const HbfOptions hopts = options_for(variant, opts.hbf);
        const ChannelSet channels = channels_for_run(config, seed);
        const auto grid =
            angle_grid(config.target_angle, config.angle_uncertainty, config.grid_step);

        Rng init_rng(split_seed(seed, 2));
        BeamformerSet bf = initial_beamformers(channels, config, hopts, init_rng);
        ReceiveFilterState filter;
        filter.w = receive_steering(config.target_angle, config.geometry) /
                   std::sqrt(static_cast<double>(config.geometry.num_rx));
        filter.min_sinr = 0.0;

        res.status = RunStatus::IterationCap;
        double best_sr = -std::numeric_limits<double>::infinity();
        int plateau = 0;
        bool relaxed = false;
        bool best_power_slack = false;
        double best_consensus = 0.0;
        for (int outer = 1; outer <= opts.max_outer; ++outer) {
            if (hopts.radar_constraint)
                filter = optimize_receive_filter(bf.effective(), filter.w, config, grid,
                                                 opts.filter_tol, opts.filter_max_outer);
            InnerResult inner =
                inner_loop(channels, filter.w, bf, config, grid, hopts);
            if (inner.gamma_relaxed) {
                relaxed = true;
                // keep the relaxed threshold for the remaining outer iterations
                config.radar_sinr_target = inner.achieved_gamma_target;
            }
            res.gamma_target_used = inner.achieved_gamma_target;

            const MetricsReport m =
                compute_metrics(channels, inner.beamformers, filter.w, config);
            const double sr = m.secrecy_rate_worst;
            // Monotone acceptance: keep the incumbent when a filter change
            // makes the alternating step land on a worse secrecy rate.
            const double gain = sr - best_sr;
            if (gain > 0.0) {
                bf = inner.beamformers;
                best_sr = sr;
                best_power_slack = inner.power_slack;
                best_consensus =
                    inner.trace.empty() ? 0.0 : inner.trace.back().consensus_residual;
            }
            res.power_slack = best_power_slack;

            const MetricsReport accepted = compute_metrics(channels, bf, filter.w, config);
            OuterTraceRow row;
            row.outer_iter = outer;
            row.inner_iter = inner.trace.empty() ? 0 : inner.trace.back().inner_iter;
            row.eta = inner.al.eta;
            row.worst_case_sr = accepted.secrecy_rate_worst;
            row.min_radar_sinr = accepted.min_radar_sinr;
            row.consensus_residual = best_consensus;
            row.max_eue_rate = max_eue_rate(accepted);
            res.trace.push_back(row);

            if (outer >= 2 && gain < opts.outer_tol * std::max(best_sr, 1e-9))
                ++plateau;
            else
                plateau = 0;
            if (plateau >= 2) {
                res.status = RunStatus::Converged;
                break;
            }
        }
        if (relaxed) res.status = RunStatus::InfeasibleRelaxed;

        res.beamformers = bf;
        res.filter = filter;
        res.metrics = compute_metrics(channels, bf, filter.w, config);
        res.achieved_gamma = res.metrics.min_radar_sinr;
    } catch (const std::exception& e) {
        res.status = RunStatus::Failed;
        res.error = e.what();
    }
    res.wall_time_s = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t_start).count();
    return res;
}

} // namespace

ChannelSet channels_for_run(const SystemConfig& config, std::uint64_t seed) {
    Rng rng(split_seed(seed, 1));
    return build_channels(config, rng);
}

RunResult run_she(const SystemConfig& config, std::uint64_t seed,
                  const RunOptions& opts) {
    return run_variant(config, Variant::She, seed, opts);
}

RunResult run_baseline(const SystemConfig& config, Variant variant, std::uint64_t seed,
                       const RunOptions& opts) {
    return run_variant(config, variant, seed, opts);
}

std::vector<std::string> check_run(const RunResult& result, const ChannelSet& channels,
                                   const SystemConfig& config) {
    std::vector<std::string> failures;
    if (result.status == RunStatus::Failed) {
        failures.push_back("run failed: " + result.error);
        return failures;
    }
    const MetricsReport m =
        compute_metrics(channels, result.beamformers, result.filter.w, config);
    for (std::size_t u = 0; u < m.eue_rate_worst.size(); ++u)
        if (m.eue_rate_worst[u] > config.eue_rate_caps[u] + 1e-4)
            failures.push_back("eue rate cap violated for user " + std::to_string(u));
    for (double s : m.radar_sinr_grid)
        if (s < result.achieved_gamma - 1e-6)
            failures.push_back("radar SINR below the reported achieved level");
    if (result.variant != Variant::FdBf) {
        const auto& a = result.beamformers.analog;
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                if (std::abs(std::abs(a(i, j)) - 1.0) > 1e-12) {
                    failures.push_back("analog entry off the unit circle");
                    i = a.rows();
                    break;
                }
    }
    const double power = result.beamformers.total_power();
    if (!result.power_slack &&
        (power < config.power_budget - 1e-6 || power > config.power_budget + 1e-9))
        failures.push_back("power outside the budget window");
    if (result.power_slack && power > config.power_budget + 1e-9)
        failures.push_back("power exceeds the budget");
    if (!result.trace.empty()) {
        const double recorded = result.trace.back().worst_case_sr;
        if (std::abs(recorded - m.secrecy_rate_worst) > 1e-8)
            failures.push_back("final metrics disagree with the last trace row");
    }
    return failures;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

json complex_matrix_to_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXcd complex_matrix_from_json(const json& j) {
    Eigen::MatrixXcd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    const json& data = j.at("data");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index jj = 0; jj < m.cols(); ++jj)
            m(i, jj) = {data.at(i).at(jj).at(0).get<double>(),
                        data.at(i).at(jj).at(1).get<double>()};
    return m;
}

} // namespace

std::string beamformers_to_json(const BeamformerSet& bf, const Eigen::VectorXcd& w) {
    json j;
    j["analog"] = complex_matrix_to_json(bf.analog);
    j["digital_comm"] = complex_matrix_to_json(bf.digital_comm);
    j["digital_i2s"] = complex_matrix_to_json(bf.digital_i2s);
    j["receive_filter"] = complex_matrix_to_json(w);
    return j.dump(2);
}

void beamformers_from_json(const std::string& text, BeamformerSet& bf,
                           Eigen::VectorXcd& w) {
    const json j = json::parse(text);
    bf.analog = complex_matrix_from_json(j.at("analog"));
    bf.digital_comm = complex_matrix_from_json(j.at("digital_comm"));
    bf.digital_i2s = complex_matrix_from_json(j.at("digital_i2s"));
    w = complex_matrix_from_json(j.at("receive_filter"));
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void write_trace_csv(const std::string& path, const std::vector<OuterTraceRow>& rows) {
    std::ostringstream os;
    os << "outer_iter,inner_iter,eta,worst_case_sr,min_radar_sinr,"
          "consensus_residual,max_eue_rate\n";
    for (const auto& r : rows)
        os << r.outer_iter << ',' << r.inner_iter << ',' << fmt(r.eta) << ','
           << fmt(r.worst_case_sr) << ',' << fmt(r.min_radar_sinr) << ','
           << fmt(r.consensus_residual) << ',' << fmt(r.max_eue_rate) << '\n';
    write_text(path, os.str());
}

void write_beampattern_csv(const std::string& path, const std::vector<double>& grid_deg,
                           const std::vector<double>& power_linear) {
    std::ostringstream os;
    os << "angle_deg,power_linear,power_db\n";
    for (std::size_t i = 0; i < grid_deg.size(); ++i)
        os << fmt(grid_deg[i]) << ',' << fmt(power_linear[i]) << ','
           << fmt(linear_to_db(std::max(power_linear[i], 1e-300))) << '\n';
    write_text(path, os.str());
}

// ---------------------------------------------------------------------------
// experiments

namespace {

SystemConfig apply_sweep(const SystemConfig& base, const std::string& param, double v) {
    SystemConfig c = base;
    if (param == "gamma_r_db") {
        c.radar_sinr_target = db_to_linear(v);
    } else if (param == "xi") {
        std::fill(c.eue_rate_caps.begin(), c.eue_rate_caps.end(), v);
    } else if (param == "csi_error_var") {
        c.csi_error_var = v;
    } else if (param == "angle_uncertainty") {
        c.angle_uncertainty = v;
    } else {
        throw std::invalid_argument("unknown sweep parameter: " + param);
    }
    return c;
}

int thread_budget() {
    if (const char* env = std::getenv("SHE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Converged: return "Converged";
        case RunStatus::IterationCap: return "IterationCap";
        case RunStatus::InfeasibleRelaxed: return "InfeasibleRelaxed";
        case RunStatus::Failed: return "Failed";
    }
    return "?";
}

} // namespace

std::vector<std::string> run_experiment(const ExperimentSpec& spec) {
    namespace fs = std::filesystem;
    if (spec.trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
    fs::create_directories(spec.output_dir);
    std::vector<std::string> written;
    json aggregate = json::array();

    for (Variant variant : spec.variants) {
        for (double value : spec.sweep_values) {
            const SystemConfig config = apply_sweep(spec.base, spec.sweep_param, value);
            std::vector<RunResult> results(static_cast<std::size_t>(spec.trials));

            const int workers = std::min(thread_budget(), spec.trials);
            std::vector<std::thread> pool;
            std::atomic<int> next{0};
            for (int t = 0; t < workers; ++t)
                pool.emplace_back([&]() {
                    for (int i = next.fetch_add(1); i < spec.trials;
                         i = next.fetch_add(1))
                        results[static_cast<std::size_t>(i)] = run_variant(
                            config, variant,
                            split_seed(spec.base_seed, static_cast<std::uint64_t>(i)),
                            spec.opts);
                });
            for (auto& th : pool) th.join();

            std::ostringstream stem;
            stem << variant_name(variant) << "__" << spec.sweep_param << "__" << value
                 << "__" << spec.base_seed;
            const std::string csv_path =
                (fs::path(spec.output_dir) / (stem.str() + ".csv")).string();
            {
                std::ostringstream os;
                os << "trial,seed,status,worst_case_sr,min_radar_sinr,"
                      "detection_probability,wall_time_s\n";
                for (int i = 0; i < spec.trials; ++i) {
                    const RunResult& r = results[static_cast<std::size_t>(i)];
                    os << i << ',' << r.seed << ',' << status_name(r.status) << ','
                       << fmt(r.metrics.secrecy_rate_worst) << ','
                       << fmt(r.metrics.min_radar_sinr) << ','
                       << fmt(r.metrics.detection_probability) << ','
                       << fmt(r.wall_time_s) << '\n';
                }
                write_text(csv_path, os.str());
            }
            written.push_back(csv_path);

            const std::string trace_path =
                (fs::path(spec.output_dir) / (stem.str() + "__trace.csv")).string();
            write_trace_csv(trace_path, results.front().trace);
            written.push_back(trace_path);

            double mean = 0.0;
            int ok = 0;
            for (const auto& r : results)
                if (r.status != RunStatus::Failed) {
                    mean += r.metrics.secrecy_rate_worst;
                    ++ok;
                }
            mean = ok > 0 ? mean / ok : 0.0;
            double var = 0.0;
            for (const auto& r : results)
                if (r.status != RunStatus::Failed) {
                    const double d = r.metrics.secrecy_rate_worst - mean;
                    var += d * d;
                }
            const double stdev = ok > 1 ? std::sqrt(var / (ok - 1)) : 0.0;
            aggregate.push_back({{"variant", variant_name(variant)},
                                 {"param", spec.sweep_param},
                                 {"value", value},
                                 {"trials", spec.trials},
                                 {"completed", ok},
                                 {"mean_worst_case_sr", mean},
                                 {"std_worst_case_sr", stdev}});
        }
    }

    const std::string agg_path =
        (fs::path(spec.output_dir) / "aggregate.json").string();
    write_text(agg_path, aggregate.dump(2));
    written.push_back(agg_path);
    return written;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open experiment spec: " + path);
    json j;
    in >> j;
    ExperimentSpec spec;
    if (j.contains("config_path"))
        spec.base = load_config(j.at("config_path").get<std::string>());
    else if (j.contains("config"))
        spec.base = parse_config(j.at("config").dump());
    else
        spec.base = desk_config();
    spec.sweep_param = j.at("sweep").at("param").get<std::string>();
    spec.sweep_values = j.at("sweep").at("values").get<std::vector<double>>();
    std::sort(spec.sweep_values.begin(), spec.sweep_values.end());
    for (const auto& name : j.at("variants"))
        spec.variants.push_back(variant_from_name(name.get<std::string>()));
    spec.trials = j.value("trials", 50);
    spec.base_seed = j.value("base_seed", std::uint64_t{1});
    spec.output_dir = j.value("output_dir", std::string{"she_experiment"});
    if (j.contains("run")) {
        const json& r = j.at("run");
        spec.opts.max_outer = r.value("max_outer", spec.opts.max_outer);
        spec.opts.outer_tol = r.value("outer_tol", spec.opts.outer_tol);
        spec.opts.hbf.max_inner = r.value("max_inner", spec.opts.hbf.max_inner);
        spec.opts.hbf.penalty = r.value("penalty", spec.opts.hbf.penalty);
    }
    return spec;
}

} // namespace she
