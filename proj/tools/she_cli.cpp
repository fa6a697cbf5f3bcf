// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: single runs, benchmark variants, experiment sweeps,
// beampattern export and configuration validation.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "she/driver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasibleRelaxed = 2;

she::SystemConfig config_from_flag(const std::string& path) {
    if (path.empty()) return she::desk_config();
    return she::load_config(path);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

int report_run(const she::RunResult& res, const std::string& out_dir) {
    if (res.status == she::RunStatus::Failed) {
        std::cerr << "error: " << res.error << '\n';
        return kExitError;
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        write_file((dir / "beamformers.json").string(),
                   she::beamformers_to_json(res.beamformers, res.filter.w));
        write_file((dir / "metrics.json").string(), res.metrics.to_json());
        she::write_trace_csv((dir / "trace.csv").string(), res.trace);
    }
    std::cout << res.metrics.to_json() << '\n';
    return res.status == she::RunStatus::InfeasibleRelaxed ? kExitInfeasibleRelaxed
                                                           : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Secure hybrid beamforming designer for a dual-function "
                 "radar-communication transmitter"};
    app.require_subcommand(1);

    std::string config_path, out_dir, variant_name = "FD-BF", spec_path;
    std::uint64_t seed = 1;
    she::RunOptions opts;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON scenario file (default: built-in)");
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--out", out_dir, "output directory for artifacts");
        cmd->add_option("--max-outer", opts.max_outer, "outer iteration cap");
    };

    CLI::App* run = app.add_subcommand("run", "full joint design");
    add_common(run);

    CLI::App* baseline = app.add_subcommand("baseline", "benchmark variant");
    add_common(baseline);
    baseline->add_option("--variant", variant_name,
                         "FD-BF | ConvHBF | CommOnly-I2S | CommOnly-Conv")
        ->required();

    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo parameter sweep");
    sweep->add_option("--spec", spec_path, "experiment spec JSON")->required();

    CLI::App* pattern = app.add_subcommand("pattern", "transmit beampattern export");
    add_common(pattern);
    double span = 90.0, step = 0.5;
    pattern->add_option("--span", span, "half-width of the angle sweep (degrees)");
    pattern->add_option("--step", step, "angle step (degrees)");

    CLI::App* validate = app.add_subcommand("validate-config", "check a scenario file");
    validate->add_option("--config", config_path, "JSON scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return report_run(she::run_she(config_from_flag(config_path), seed, opts),
                              out_dir);
        }
        if (baseline->parsed()) {
            const she::Variant v = she::variant_from_name(variant_name);
            return report_run(
                she::run_baseline(config_from_flag(config_path), v, seed, opts),
                out_dir);
        }
        if (sweep->parsed()) {
            const auto files = she::run_experiment(she::load_experiment_spec(spec_path));
            for (const auto& f : files) std::cout << f << '\n';
            return kExitOk;
        }
        if (pattern->parsed()) {
            const she::SystemConfig config = config_from_flag(config_path);
            she::RunResult res = she::run_she(config, seed, opts);
            if (res.status == she::RunStatus::Failed) {
                std::cerr << "error: " << res.error << '\n';
                return kExitError;
            }
            std::vector<double> grid;
            for (double a = -span; a <= span + 1e-12; a += step) grid.push_back(a);
            const auto power =
                she::transmit_beampattern(res.beamformers, grid, config.geometry);
            std::string path = "beampattern.csv";
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                path = (std::filesystem::path(out_dir) / path).string();
            }
            she::write_beampattern_csv(path, grid, power);
            std::cout << path << '\n';
            return res.status == she::RunStatus::InfeasibleRelaxed
                       ? kExitInfeasibleRelaxed
                       : kExitOk;
        }
        if (validate->parsed()) {
            she::load_config(config_path).validate();
            std::cout << "ok\n";
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
