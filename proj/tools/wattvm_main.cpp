// Command-line front end: run simulations, sweep parameters, or validate a
// config file. Outputs are plot-ready CSV files with the effective config
// embedded in every header.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wattvm/config.hpp"
#include "wattvm/reports.hpp"
#include "wattvm/sweep.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string controllers;
    std::optional<std::uint64_t> seed;
    std::optional<int> steps;
};

wattvm::SimulationConfig load_with_overrides(const CommonArgs& args) {
    wattvm::SimulationConfig cfg = wattvm::load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.steps) {
        cfg.steps = *args.steps;
        cfg.workload.sim_steps = *args.steps;
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (!args.controllers.empty()) {
        cfg.controllers.clear();
        std::string item;
        std::stringstream ss(args.controllers);
        while (std::getline(ss, item, ','))
            if (!item.empty()) cfg.controllers.push_back(wattvm::parse_controller(item));
    }
    cfg.validate();
    return cfg;
}

int cmd_run(const CommonArgs& args) {
    const wattvm::SimulationConfig cfg = load_with_overrides(args);
    std::vector<wattvm::SimulationReport> reports;
    for (wattvm::ControllerKind kind : cfg.controllers) {
        std::cerr << "running " << wattvm::controller_name(kind) << " (" << cfg.steps
                  << " steps, " << cfg.inventory.count << " hosts, " << cfg.workload.vm_count
                  << " vm requests)\n";
        reports.push_back(wattvm::run_simulation(cfg, kind));
        wattvm::write_report_files(cfg.out_dir, cfg, reports.back());
    }
    wattvm::print_summary(std::cout, reports);
    std::cerr << "reports written to " << cfg.out_dir << "/\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& axis, const std::string& values,
              int jobs) {
    wattvm::SimulationConfig cfg = load_with_overrides(args);
    wattvm::SweepSpec spec;
    spec.axis = wattvm::parse_axis(axis);
    spec.values.clear();
    {
        std::string item;
        std::stringstream ss(values);
        while (std::getline(ss, item, ','))
            if (!item.empty()) spec.values.push_back(item);
    }
    spec.controllers = cfg.controllers;
    const int workers = jobs > 0 ? jobs : cfg.jobs;
    const std::vector<wattvm::SweepRow> rows = wattvm::run_sweep(cfg, spec, workers);
    wattvm::write_sweep_csv(cfg.out_dir, wattvm::axis_name(spec.axis), cfg, rows);
    std::cout << "sweep_" << wattvm::axis_name(spec.axis) << ".csv: " << rows.size()
              << " rows written to " << cfg.out_dir << "/\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    wattvm::load_config(config_path);
    std::cout << config_path << ": ok\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wattvm - trace-driven simulator for geo-distributed cloud control with "
                 "VM migration and CPU frequency scaling"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string axis, values;
    int jobs = 0;

    auto add_common = [&args](CLI::App* cmd, bool with_run_overrides) {
        cmd->add_option("--config", args.config_path, "Config file path")->required();
        cmd->add_option("--out", args.out_dir, "Output directory (overrides config)");
        if (with_run_overrides) {
            cmd->add_option("--controller", args.controllers,
                            "Controller selection, comma separated (bfd,bcf,bcffs)");
            cmd->add_option("--seed", args.seed, "Random seed (overrides config)");
            cmd->add_option("--steps", args.steps, "Simulation steps (overrides config)");
        }
    };

    CLI::App* run = app.add_subcommand("run", "Run one simulation per selected controller");
    add_common(run, true);

    CLI::App* sweep = app.add_subcommand("sweep", "Run one simulation per axis value and "
                                                  "controller");
    add_common(sweep, false);
    sweep->add_option("--axis", axis,
                      "Sweep axis: pm_count, vm_count, utilisation, electricity_mode, fixed_beta")
        ->required();
    sweep->add_option("--values", values, "Comma-separated axis values")->required();
    sweep->add_option("--jobs", jobs, "Concurrent simulations (default: hardware threads)");

    CLI::App* validate = app.add_subcommand("validate", "Parse a config and check invariants");
    validate->add_option("--config", args.config_path, "Config file path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(args);
        if (sweep->parsed()) return cmd_sweep(args, axis, values, jobs);
        if (validate->parsed()) return cmd_validate(args.config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
