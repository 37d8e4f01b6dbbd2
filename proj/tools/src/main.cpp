// mlshe-lab: configuration-driven runner for the verification suites.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mlshe/lab/config.hpp"
#include "mlshe/lab/suites.hpp"

namespace {
constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mlshe-lab: multilayer stochastic heat equation verification runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_dir;
    unsigned threads = 1;
    long long seed = -1;

    auto* run = app.add_subcommand("run", "Run the experiment named in a config file");
    run->add_option("--config", config_path, "Configuration file (key = value with [sections])")->required();
    run->add_option("--threads", threads, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory (overrides run.output)");
    run->add_option("--seed", seed, "Master seed (overrides mc.master_seed)")->check(CLI::NonNegativeNumber);

    auto* rep = app.add_subcommand("report", "Summarize a results directory");
    rep->add_option("--in", in_dir, "Directory holding results.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    using namespace mlshe::lab;
    if (*rep) {
        try {
            std::cout << report(in_dir);
            return kExitPass;
        } catch (const ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitUsage;
        }
    }

    Config cfg;
    try {
        cfg = Config::load(config_path);
        if (seed >= 0) cfg.set("mc.master_seed", std::to_string(seed));
        if (!out_dir.empty()) cfg.set("run.output", out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    RunOutput out;
    try {
        out = run_experiment(cfg, threads);
        write_outputs(out, cfg, cfg.get("run.output"));
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: run aborted: " << e.what() << '\n';
        return kExitCheckFailure;
    }

    const auto failing = out.failing_checks();
    std::cout << out.rows.size() << " checks written to " << cfg.get("run.output") << "/results.csv\n";
    if (failing.empty()) return kExitPass;
    std::cerr << "failing checks:\n";
    for (const auto& id : failing) std::cerr << "  " << id << '\n';
    return kExitCheckFailure;
}
