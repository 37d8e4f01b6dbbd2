#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mlshe/kernels.hpp"
#include "mlshe/lab/config.hpp"
#include "mlshe/lab/results.hpp"

namespace mlshe::lab {

struct RunOutput {
    std::vector<ResultRow> rows;
    std::vector<Timing> timings;
    std::vector<kernels::ConstantLedger> ledger;
    // Lattice noise used by the flow check, kept for replay.
    std::vector<std::pair<std::string, std::vector<char>>> attachments;

    bool all_passed() const;
    std::vector<std::string> failing_checks() const;
};

// Runs the configured experiment in process. Results are identical for any
// thread count.
RunOutput run_experiment(const Config& config, unsigned threads);

// Writes results.csv, timings.csv, ledger.json, config.resolved, plot_results.py
// and attachments into dir.
void write_outputs(const RunOutput& out, const Config& config, const std::filesystem::path& dir);

// Claims covered by each experiment; every listed claim gets at least one row.
std::vector<std::string> claims_for(const std::string& experiment);

// Human-readable summary grouped by claim, failing check ids first.
// Throws ConfigError when results.csv is missing.
std::string report(const std::filesystem::path& dir);

// Stable 64-bit hash used to derive per-check seeds.
std::uint64_t check_seed(std::uint64_t master, const std::string& check_id);

}  // namespace mlshe::lab
