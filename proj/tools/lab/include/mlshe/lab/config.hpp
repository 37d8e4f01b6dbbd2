#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlshe/potential.hpp"

namespace mlshe::lab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Plain-text configuration: `[section]` headers, `key = value` lines, `#` comments.
// Every key must appear in the schema; `potential.bump` may repeat.
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<string>");
    static Config load(const std::filesystem::path& path);
    static Config defaults();

    // Dotted name, e.g. "grid.dy".
    std::string get(const std::string& key) const;
    double number(const std::string& key) const;
    long long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::vector<Bump> bumps() const;
    PotentialField potential() const;

    // Every key with its effective value, in schema order, in the input syntax.
    std::string resolved() const;

    static const std::vector<std::string>& experiments();

private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> bumps_;
    bool bumps_set_ = false;
};

Bump parse_bump(const std::string& text);

}  // namespace mlshe::lab
