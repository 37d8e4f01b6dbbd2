#include "mlshe/lab/results.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mlshe::lab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, p);
}

const char* to_string(Status s) {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::Diagnostic: return "diag";
    }
    return "diag";
}

const char* to_string(Relation r) {
    switch (r) {
        case Relation::Relative: return "rel";
        case Relation::Absolute: return "abs";
        case Relation::Sigma: return "sigma";
        case Relation::AtLeast: return "min";
        case Relation::AtMost: return "max";
        case Relation::None: return "none";
    }
    return "none";
}

ResultRow& judge(ResultRow& row) {
    if (row.relation == Relation::None) {
        row.status = Status::Diagnostic;
        return row;
    }
    const double d = std::abs(row.value - row.reference_value);
    bool ok = false;
    switch (row.relation) {
        case Relation::Relative: ok = d <= row.tolerance * std::abs(row.reference_value); break;
        case Relation::Absolute: ok = d <= row.tolerance; break;
        case Relation::Sigma: ok = d <= row.tolerance * row.error_estimate; break;
        case Relation::AtLeast: ok = row.value >= row.reference_value; break;
        case Relation::AtMost: ok = row.value <= row.reference_value; break;
        case Relation::None: break;
    }
    row.status = (ok && std::isfinite(row.value)) ? Status::Pass : Status::Fail;
    return row;
}

std::string csv_header() {
    return "experiment,check_id,claim,quantity,value,error_estimate,reference_value,reference_kind,relation,"
           "tolerance,status,seed";
}

std::string csv_line(const ResultRow& r) {
    std::ostringstream os;
    os << r.experiment << ',' << r.check_id << ',' << r.claim << ',' << r.quantity << ',' << format_double(r.value)
       << ',' << format_double(r.error_estimate) << ',' << format_double(r.reference_value) << ','
       << r.reference_kind << ',' << to_string(r.relation) << ',' << format_double(r.tolerance) << ','
       << to_string(r.status) << ',' << r.seed;
    return os.str();
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out = csv_header() + "\n";
    for (const auto& r : rows) out += csv_line(r) + "\n";
    return out;
}

std::vector<ResultRow> parse_csv(const std::string& text) {
    std::vector<ResultRow> rows;
    std::stringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != csv_header()) throw std::runtime_error("results.csv has an unexpected header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 12) throw std::runtime_error("results.csv row with " + std::to_string(f.size()) + " fields");
        ResultRow r;
        r.experiment = f[0];
        r.check_id = f[1];
        r.claim = f[2];
        r.quantity = f[3];
        r.value = std::strtod(f[4].c_str(), nullptr);
        r.error_estimate = std::strtod(f[5].c_str(), nullptr);
        r.reference_value = std::strtod(f[6].c_str(), nullptr);
        r.reference_kind = f[7];
        for (Relation rel : {Relation::Relative, Relation::Absolute, Relation::Sigma, Relation::AtLeast,
                             Relation::AtMost, Relation::None})
            if (f[8] == to_string(rel)) r.relation = rel;
        r.tolerance = std::strtod(f[9].c_str(), nullptr);
        r.status = f[10] == "pass" ? Status::Pass : f[10] == "fail" ? Status::Fail : Status::Diagnostic;
        r.seed = std::strtoull(f[11].c_str(), nullptr, 10);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string ledger_json(const std::vector<kernels::ConstantLedger>& ledger) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : ledger) {
        nlohmann::ordered_json j;
        j["constant"] = "confluent_wronskian";
        j["n"] = e.n;
        j["t"] = e.t;
        j["printed_value"] = e.printed_constant;
        j["calibrated_value"] = e.calibrated_constant;
        j["ratio_printed_over_calibrated"] = e.printed_constant / e.calibrated_constant;
        j["sign"] = {{"interlace", e.signs.interlace},
                     {"confluent_dx", e.signs.confluent_dx},
                     {"factorization", e.signs.factorization}};
        j["probe_count"] = e.probes;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

}  // namespace mlshe::lab
