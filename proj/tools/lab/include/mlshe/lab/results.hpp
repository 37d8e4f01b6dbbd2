#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mlshe/kernels.hpp"

namespace mlshe::lab {

enum class Status { Pass, Fail, Diagnostic };

// The comparison a row encodes:
//   rel    |value - reference| <= tolerance * |reference|
//   abs    |value - reference| <= tolerance
//   sigma  |value - reference| <= tolerance * error_estimate
//   min    value >= reference
//   max    value <= reference
enum class Relation { Relative, Absolute, Sigma, AtLeast, AtMost, None };

struct ResultRow {
    std::string experiment;
    std::string check_id;
    std::string claim;           // descriptive claim name, see report grouping
    std::string quantity;
    double value = 0.0;
    double error_estimate = 0.0;
    double reference_value = 0.0;
    std::string reference_kind;  // closed-form | cross-method | refinement | diagnostic
    Relation relation = Relation::None;
    double tolerance = 0.0;
    Status status = Status::Diagnostic;
    std::uint64_t seed = 0;
};

// Fills status from relation/value/reference/tolerance (NaN values fail).
ResultRow& judge(ResultRow& row);

// Fixed column order:
// experiment,check_id,claim,quantity,value,error_estimate,reference_value,
// reference_kind,relation,tolerance,status,seed
std::string csv_header();
std::string csv_line(const ResultRow& row);
std::string to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(const std::string& text);

// Shortest representation that round-trips through strtod.
std::string format_double(double v);

const char* to_string(Status s);
const char* to_string(Relation r);

struct Timing {
    std::string experiment;
    std::string check_group;
    double seconds = 0.0;
};

std::string ledger_json(const std::vector<kernels::ConstantLedger>& ledger);

}  // namespace mlshe::lab
