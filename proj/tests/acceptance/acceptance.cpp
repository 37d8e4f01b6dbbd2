// Acceptance run: executes every verification suite in process at the
// documented sizes, then judges the 13 acceptance criteria against
// tolerances fixed in this file (not read from any config).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mlshe/lab/config.hpp"
#include "mlshe/lab/results.hpp"
#include "mlshe/lab/suites.hpp"

using namespace mlshe::lab;

namespace {

namespace tol {
constexpr double free_field = 1e-4;
constexpr double layers = 5e-3;
constexpr double calibration = 5e-3;
constexpr double sigmas = 3.0;
constexpr double mc_relative_stderr = 0.01;
constexpr double min_accepted = 1e5;
constexpr double gt_ratio = 0.02;
constexpr double interlace = 1e-10;
constexpr double ratio_lo = 3.0, ratio_hi = 5.0;
constexpr double rayleigh_ks = 0.02;
constexpr double second_moment = 0.05;
constexpr double ratio_improvement = 1.5;
constexpr double polymer_lgv = 1e-3;
constexpr double polymer_exact = 1e-9;
constexpr double rsk = 1e-3;
}  // namespace tol

// Wall-clock budgets in seconds.
namespace budget {
constexpr double free_field = 10, calibration = 120, km = 300, confluent = 300, gt = 120, residuals = 180,
                 rayleigh = 120, second_moment = 600, shift = 600, ratio = 600, polymer = 120, rsk = 60;
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (detail.tellp() > 0) detail << "; ";
        detail << what << (ok ? "" : " [x]");
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

class Rows {
public:
    explicit Rows(const RunOutput& out) : out_(out) {
        for (const auto& r : out.rows) by_id_[r.check_id] = &r;
    }

    const ResultRow* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : it->second;
    }

    double seconds(std::initializer_list<const char*> groups) const {
        double s = 0.0;
        for (const auto& t : out_.timings)
            for (const char* g : groups)
                if (t.check_group == g) s += t.seconds;
        return s;
    }

private:
    const RunOutput& out_;
    std::map<std::string, const ResultRow*> by_id_;
};

void at_most(Outcome& o, const Rows& rows, const std::string& id, double limit) {
    const ResultRow* r = rows.find(id);
    if (!r) return o.require(false, id + " missing");
    o.require(std::abs(r->value) <= limit, id + " " + fmt(r->value) + " <= " + fmt(limit));
}

void within_sigmas(Outcome& o, const Rows& rows, const std::string& id) {
    const ResultRow* r = rows.find(id);
    if (!r) return o.require(false, id + " missing");
    const double z = std::abs(r->value - r->reference_value) / r->error_estimate;
    o.require(z <= tol::sigmas, id + " " + fmt(r->value) + " vs " + fmt(r->reference_value) + " (" + fmt(z) + " sigma)");
}

void relative(Outcome& o, const Rows& rows, const std::string& id, double limit) {
    const ResultRow* r = rows.find(id);
    if (!r) return o.require(false, id + " missing");
    const double rel = std::abs(r->value / r->reference_value - 1.0);
    o.require(rel <= limit, id + " rel " + fmt(rel) + " <= " + fmt(limit));
}

void runtime(Outcome& o, double seconds, double limit) {
    o.require(seconds < limit, fmt(seconds) + " s < " + fmt(limit) + " s");
}

Config acceptance_config() {
    Config c = Config::defaults();
    const std::vector<std::pair<const char*, const char*>> pinned = {
        {"run.experiment", "all"},
        {"grid.t", "1"},
        {"grid.dy", "0.02"},
        {"grid.n_t", "1000"},
        {"grid.residual_dy", "0.05"},
        {"grid.residual_n_t", "200"},
        {"layers.n_max", "3"},
        {"mc.master_seed", "20240917"},
        {"mc.samples", "100000"},
        {"mc.rayleigh_samples", "100000"},
        {"mc.rayleigh_steps", "2000"},
        {"mc.rayleigh_eps", "0.02"},
        {"lattice.t", "0.5"},
        {"lattice.dy", "0.05"},
        {"lattice.ratio_realizations", "200"},
        {"lattice.shift_realizations", "10000"},
        {"polymer.levels", "3"},
        {"polymer.seeds", "50"},
    };
    for (const auto& [k, v] : pinned) c.set(k, v);
    return c;
}

Config reproducibility_config() {
    Config c = acceptance_config();
    const std::vector<std::pair<const char*, const char*>> reduced = {
        {"grid.dy", "0.04"},          {"grid.n_t", "250"},
        {"mc.samples", "4000"},       {"mc.rayleigh_samples", "4000"},
        {"mc.rayleigh_steps", "500"}, {"mc.rayleigh_eps", "0.04"},
        {"mc.local_time_samples", "2000"},
        {"mc.local_time_steps", "400"},
        {"lattice.ratio_realizations", "20"},
        {"lattice.shift_realizations", "300"},
        {"lattice.ensemble_realizations", "5"},
        {"polymer.steps", "400"},     {"polymer.seeds", "10"},
        {"polymer.positivity_seeds", "100"},
    };
    for (const auto& [k, v] : reduced) c.set(k, v);
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    const Config config = acceptance_config();
    std::cout << "acceptance: running all suites at documented sizes on " << threads << " thread(s)\n" << std::flush;
    const RunOutput out = run_experiment(config, threads);
    const Rows rows(out);

    std::vector<std::pair<std::string, Outcome>> results;
    auto criterion = [&](const std::string& name, const std::function<void(Outcome&)>& body) {
        Outcome o;
        body(o);
        results.emplace_back(name, std::move(o));
    };

    criterion("1 free-field exactness", [&](Outcome& o) {
        at_most(o, rows, "smooth.free.heat", tol::free_field);
        at_most(o, rows, "smooth.constant.heat", tol::free_field);
        for (int n = 1; n <= 3; ++n) at_most(o, rows, "smooth.free.layer.n" + std::to_string(n), tol::layers);
        runtime(o, rows.seconds({"free-field"}), budget::free_field);
    });
    criterion("2 calibration stability (3 potentials x 3 probes)", [&](Outcome& o) {
        at_most(o, rows, "calibrate.n2.spread", tol::calibration);
        at_most(o, rows, "calibrate.n3.spread", tol::calibration);
        bool ledger_ok = out.ledger.size() >= 2;
        for (const auto& l : out.ledger) ledger_ok = ledger_ok && l.printed_constant > 0 && l.calibrated_constant > 0;
        o.require(ledger_ok, "ledger has printed and calibrated constants for n = 2, 3");
        runtime(o, rows.seconds({"calibration"}), budget::calibration);
    });
    criterion("3 Karlin-McGregor cross-method, n = 2 distinct endpoints", [&](Outcome& o) {
        within_sigmas(o, rows, "bridges.km.n2");
        at_most(o, rows, "bridges.km.n2.relative_stderr", tol::mc_relative_stderr);
        const ResultRow* acc = rows.find("bridges.km.n2.accepted");
        o.require(acc && acc->value >= tol::min_accepted, "accepted " + fmt(acc ? acc->value : 0.0) + " >= 1e5");
        runtime(o, rows.seconds({"feynman-kac"}), budget::km);
    });
    criterion("4 confluent n = 2 Monte Carlo vs calibrated Wronskian", [&](Outcome& o) {
        within_sigmas(o, rows, "bridges.confluent.n2");
        runtime(o, rows.seconds({"confluent"}), budget::confluent);
    });
    criterion("5 GT reconstruction and interlacing identity", [&](Outcome& o) {
        for (int n = 2; n <= 3; ++n) {
            const std::string id = "smooth.gt.n" + std::to_string(n);
            at_most(o, rows, id + ".spread", tol::gt_ratio);
            relative(o, rows, id + ".ratio", tol::gt_ratio);
            at_most(o, rows, "smooth.interlace.n" + std::to_string(n) + ".identity", tol::interlace);
            const ResultRow* s = rows.find("smooth.interlace.n" + std::to_string(n) + ".sign");
            o.require(s && s->value != 0.0 && s->value == s->reference_value,
                      "n=" + std::to_string(n) + " single sign " + fmt(s ? s->value : 0.0));
        }
        runtime(o, rows.seconds({"gt-reconstruction", "interlace"}), budget::gt);
    });
    criterion("6 layer and S-evolution residual refinement", [&](Outcome& o) {
        for (const char* id : {"smooth.residual.u1.ratio", "smooth.residual.u2.ratio", "smooth.residual.s1.ratio",
                               "smooth.residual.s2.ratio"}) {
            const ResultRow* r = rows.find(id);
            const double v = r ? r->value : std::nan("");
            o.require(v >= tol::ratio_lo && v <= tol::ratio_hi, std::string(id) + " " + fmt(v) + " in [3,5]");
        }
        runtime(o, rows.seconds({"residuals"}), budget::residuals);
    });
    criterion("7 Rayleigh law of the local-time estimator (1e5 samples)", [&](Outcome& o) {
        at_most(o, rows, "bridges.rayleigh.ks", tol::rayleigh_ks);
        runtime(o, rows.seconds({"rayleigh"}), budget::rayleigh);
    });
    criterion("8 second-moment identity at t = 0.25 and 1", [&](Outcome& o) {
        relative(o, rows, "bridges.second_moment.t0.25.lattice", tol::second_moment);
        relative(o, rows, "bridges.second_moment.t1.lattice", tol::second_moment);
        runtime(o, rows.seconds({"second-moment"}), budget::second_moment);
    });
    criterion("9 noise-shift ensemble mean (1e4 realizations)", [&](Outcome& o) {
        within_sigmas(o, rows, "lattice.shift.single");
        within_sigmas(o, rows, "lattice.shift.determinant");
        runtime(o, rows.seconds({"s-transform"}), budget::shift);
    });
    criterion("10 lattice ratio identity refinement (200 realizations)", [&](Outcome& o) {
        const ResultRow* r = rows.find("lattice.ratio.improvement");
        const double v = r ? r->value : std::nan("");
        o.require(v >= tol::ratio_improvement, "median improvement " + fmt(v) + " >= 1.5");
        runtime(o, rows.seconds({"ratio-identity"}), budget::ratio);
    });
    criterion("11 polymer determinant vs brute force (50 seeds) and closed forms", [&](Outcome& o) {
        at_most(o, rows, "polymer.lgv.n2", tol::polymer_lgv);
        at_most(o, rows, "polymer.zero.simplex", tol::polymer_exact);
        const ResultRow* full = rows.find("polymer.zero.full_layer");
        o.require(full && std::abs(full->value - 1.0) <= tol::polymer_exact,
                  "Z_N^N " + fmt(full ? full->value : 0.0));
        runtime(o, rows.seconds({"closed-forms", "lgv"}), budget::polymer);
    });
    criterion("12 reflection symmetry of u_n, off-center bump", [&](Outcome& o) {
        for (int n = 1; n <= 3; ++n) at_most(o, rows, "smooth.rsk.n" + std::to_string(n), tol::rsk);
        runtime(o, rows.seconds({"rsk"}), budget::rsk);
    });
    criterion("13 byte-identical results.csv across thread counts", [&](Outcome& o) {
        const Config rc = reproducibility_config();
        const auto base = std::filesystem::temp_directory_path() / "mlshe_acceptance_repro";
        std::filesystem::remove_all(base);
        std::vector<std::string> files;
        for (unsigned k : {1u, 3u}) {
            const auto dir = base / ("threads" + std::to_string(k));
            write_outputs(run_experiment(rc, k), rc, dir);
            files.push_back(slurp(dir / "results.csv"));
        }
        o.require(!files[0].empty() && files[0] == files[1],
                  "all suites, 1 vs 3 threads, " + std::to_string(files[0].size()) + " bytes");
        const RunOutput again = run_experiment(rc, 2);
        o.require(to_csv(again.rows) == files[0], "2 threads identical");
        std::filesystem::remove_all(base);
    });

    int failed = 0;
    for (const auto& [name, o] : results) {
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail.str() << "\n";
        failed += o.pass ? 0 : 1;
    }
    std::cout << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size()
              << " acceptance criteria passed\n";
    return failed == 0 ? 0 : 1;
}
