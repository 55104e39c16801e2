#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "driftflux.hpp"

namespace df = driftflux;

namespace
{

int cmd_run(const std::string& config_path, const std::string& out_dir)
{
    df::SimulationConfig cfg = df::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    df::RunOptions opt;
    opt.write_files = true;
    const df::RunResult r = df::run_simulation(cfg, opt);
    if (r.aborted) {
        spdlog::error("run aborted at step {}: {}", r.reports.back().step, r.abort_reason);
        return 2;
    }
    const auto& last = r.reports.back();
    std::cout << std::setprecision(10) << "finished " << r.reports.size() << " steps, t=" << last.time << ", mass " << last.mass
              << ", gas mass " << last.gas_mass << "\n";
    if (cfg.case_name == "manufactured") {
        const auto e = df::manufactured_errors(r.problem.mesh, r.problem.geom, r.final, r.final.t);
        std::cout << "errors at t=" << r.final.t << ": u " << e.u << ", p " << e.p << ", y " << e.y << "\n";
    }
    std::cout << "diagnostics written to " << (std::filesystem::path(cfg.output_dir) / "diagnostics.csv").string() << "\n";
    return 0;
}

int cmd_convergence(const std::vector<int>& meshes, const std::vector<double>& dts, double t_end, bool exact, const std::string& out_dir)
{
    const df::ConvergenceTable tab = df::convergence_study(meshes, dts, t_end, exact);
    std::ostream& os = std::cout;
    os << std::setprecision(6) << "n,dt,err_u,err_p,err_y,status\n";
    for (const auto& e : tab.entries)
        os << e.n << ',' << e.dt << ',' << e.err.u << ',' << e.err.p << ',' << e.err.y << ',' << (e.ok ? "ok" : e.failure) << '\n';
    os << "spatial order (smallest dt): u " << tab.spatial_order.u << ", p " << tab.spatial_order.p << ", y " << tab.spatial_order.y << '\n';
    os << "temporal order (finest mesh): u " << tab.temporal_order.u << ", p " << tab.temporal_order.p << ", y " << tab.temporal_order.y
       << '\n';
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream f(std::filesystem::path(out_dir) / "convergence.csv");
        f << std::setprecision(17) << "n,dt,err_u,err_p,err_y\n";
        for (const auto& e : tab.entries) f << e.n << ',' << e.dt << ',' << e.err.u << ',' << e.err.p << ',' << e.err.y << '\n';
    }
    for (const auto& e : tab.entries)
        if (!e.ok) return 2;
    return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed)
{
    const df::SuiteResult r = df::run_suite(suite, seed);
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    return r.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    spdlog::set_level(spdlog::level::warn);
    spdlog::cfg::load_env_levels();

    CLI::App app{"Drift-flux two-phase pressure-correction solver"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* run = app.add_subcommand("run", "run a configured case");
    run->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (overrides the config)");

    std::vector<int> meshes{10, 20, 40};
    std::vector<double> dts{0.04, 0.02, 0.01, 0.005};
    double t_end = 0.5;
    bool exact = false;
    std::string conv_out;
    auto* conv = app.add_subcommand("convergence", "manufactured-solution error table");
    conv->add_option("--meshes", meshes, "cells per direction")->delimiter(',');
    conv->add_option("--dts", dts, "time steps")->delimiter(',');
    conv->add_option("--t-end", t_end, "final time");
    conv->add_flag("--exact", exact, "sample the analytic fields instead of running the solver");
    conv->add_option("--out", conv_out, "directory for convergence.csv");

    std::string suite;
    std::uint64_t seed = 12345;
    auto* ver = app.add_subcommand("verify", "property suites");
    ver->add_option("--suite", suite, "suite name")->required()->check(CLI::IsMember(df::suite_names()));
    ver->add_option("--seed", seed, "random seed");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config_path, out_dir);
        if (*conv) return cmd_convergence(meshes, dts, t_end, exact, conv_out);
        if (*ver) return cmd_verify(suite, seed);
    } catch (const df::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
