#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mlshe/lab/config.hpp"
#include "mlshe/lab/results.hpp"
#include "mlshe/lab/suites.hpp"

using namespace mlshe;
using namespace mlshe::lab;

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Config small_config(const std::string& experiment) {
    Config c = Config::parse(
        "[run]\nexperiment = " + experiment +
        "\n[grid]\ndy = 0.04\nn_t = 250\n"
        "[mc]\nmaster_seed = 31\nsamples = 2000\nrayleigh_samples = 2000\nrayleigh_steps = 400\nrayleigh_eps = 0.04\n"
        "local_time_samples = 1000\nlocal_time_steps = 400\n"
        "[lattice]\nratio_realizations = 6\nshift_realizations = 60\nensemble_realizations = 3\n"
        "[polymer]\nsteps = 300\nseeds = 4\npositivity_seeds = 20\n");
    return c;
}

}  // namespace

TEST_CASE("config parsing") {
    const Config c = Config::parse("# comment\n[grid]\ndy = 0.05\n[potential]\nbump = 1, 0.5, 0, 0.2, 0.5\n"
                                   "bump = -0.3, 0.2, 1, 0.1, 0.4\n");
    CHECK(c.number("grid.dy") == 0.05);
    CHECK(c.number("grid.t") == Config::defaults().number("grid.t"));
    CHECK(c.bumps().size() == 2);
    CHECK(c.potential()(0.5, 0.0) == doctest::Approx(1.0 - 0.3 * std::exp(-4.5 - 0.5 / 0.16)).epsilon(1e-12));
    CHECK(Config::defaults().bumps().size() == 1);
    CHECK(Config::defaults().integer("mc.samples") == 100000);

    CHECK_THROWS_AS(Config::parse("[grid]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[nosuch]\ndy = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("dy = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[grid]\ndy 0.1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[grid]\ndy = abc\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[run]\nexperiment = everything\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[potential]\nbump = 1, 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::load("/nonexistent/file.cfg"), ConfigError);

    Config d = Config::defaults();
    d.set("mc.master_seed", "5");
    CHECK(d.integer("mc.master_seed") == 5);
    CHECK_THROWS_AS(d.set("mc.unknown", "5"), ConfigError);
}

TEST_CASE("resolved config parses back to the same values") {
    Config c = small_config("polymer-suite");
    const Config back = Config::parse(c.resolved());
    CHECK(back.resolved() == c.resolved());
    CHECK(back.get("run.experiment") == "polymer-suite");
}

TEST_CASE("row judgement") {
    ResultRow r;
    r.value = 1.05;
    r.reference_value = 1.0;
    r.relation = Relation::Relative;
    r.tolerance = 0.1;
    CHECK(judge(r).status == Status::Pass);
    r.tolerance = 0.01;
    CHECK(judge(r).status == Status::Fail);
    r.relation = Relation::Sigma;
    r.error_estimate = 0.02;
    r.tolerance = 3.0;
    CHECK(judge(r).status == Status::Pass);
    r.relation = Relation::AtLeast;
    CHECK(judge(r).status == Status::Pass);
    r.relation = Relation::AtMost;
    CHECK(judge(r).status == Status::Fail);
    r.relation = Relation::Absolute;
    r.value = std::nan("");
    r.tolerance = 1.0;
    CHECK(judge(r).status == Status::Fail);
    r.relation = Relation::None;
    CHECK(judge(r).status == Status::Diagnostic);
}

TEST_CASE("CSV round trip and number formatting") {
    ResultRow a;
    a.experiment = "smooth-suite";
    a.check_id = "x.y";
    a.claim = "flow";
    a.quantity = "q";
    a.value = 0.1 + 0.2;
    a.error_estimate = 1e-300;
    a.reference_value = -3.5;
    a.reference_kind = "closed-form";
    a.relation = Relation::Absolute;
    a.tolerance = 1e-10;
    a.seed = 0xFFFFFFFFFFFFFFFFull;
    judge(a);
    const std::string csv = to_csv({a, a});
    CHECK(csv.rfind(csv_header(), 0) == 0);
    CHECK(csv_header() ==
          "experiment,check_id,claim,quantity,value,error_estimate,reference_value,reference_kind,relation,tolerance,"
          "status,seed");
    const auto rows = parse_csv(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].value == a.value);
    CHECK(rows[0].error_estimate == a.error_estimate);
    CHECK(rows[0].seed == a.seed);
    CHECK(rows[0].status == a.status);
    CHECK(to_csv(rows) == csv);
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("ledger json") {
    const std::string j = ledger_json({kernels::confluent_constants(2, 1.0), kernels::confluent_constants(3, 1.0)});
    CHECK(j.find("\"calibrated_value\"") != std::string::npos);
    CHECK(j.find("\"printed_value\"") != std::string::npos);
    CHECK(j.find("\"probe_count\"") != std::string::npos);
}

TEST_CASE("check seeds are stable and distinct") {
    CHECK(check_seed(1, "a") == check_seed(1, "a"));
    CHECK(check_seed(1, "a") != check_seed(1, "b"));
    CHECK(check_seed(1, "a") != check_seed(2, "a"));
}

TEST_CASE("every claimed experiment covers its claims") {
    for (const auto& ex : Config::experiments()) CHECK_FALSE(claims_for(ex).empty());
    const auto all = claims_for("all");
    CHECK(std::find(all.begin(), all.end(), "polymer") != all.end());
    CHECK(std::find(all.begin(), all.end(), "ratio-identity") != all.end());
}

TEST_CASE("suite results do not depend on the thread count") {
    for (const std::string ex : {"polymer-suite", "smooth-suite", "lattice-suite"}) {
        const Config c = small_config(ex);
        const auto one = run_experiment(c, 1);
        const auto three = run_experiment(c, 3);
        CHECK(to_csv(one.rows) == to_csv(three.rows));
        CHECK(one.all_passed());
    }
}

TEST_CASE("outputs and report") {
    const auto dir = std::filesystem::temp_directory_path() / "mlshe_lab_report_test";
    std::filesystem::remove_all(dir);
    const Config c = small_config("polymer-suite");
    const auto out = run_experiment(c, 1);
    write_outputs(out, c, dir);
    for (const char* f : {"results.csv", "timings.csv", "ledger.json", "config.resolved", "plot_results.py"})
        CHECK(std::filesystem::exists(dir / f));
    CHECK(parse_csv(read_file(dir / "results.csv")).size() == out.rows.size());
    const std::string text = report(dir);
    CHECK(text.find("polymer") != std::string::npos);

    // A failing row is listed before the grouped table.
    auto rows = out.rows;
    rows[0].status = Status::Fail;
    {
        std::ofstream os(dir / "results.csv", std::ios::binary);
        os << to_csv(rows);
    }
    const std::string mixed = report(dir);
    CHECK(mixed.find(rows[0].check_id) < mixed.find("polymer:"));

    const auto empty = std::filesystem::temp_directory_path() / "mlshe_lab_empty_dir";
    std::filesystem::create_directories(empty);
    CHECK_THROWS_AS(report(empty), ConfigError);
    std::filesystem::remove_all(dir);
}
