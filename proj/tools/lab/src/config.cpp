#include "mlshe/lab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace mlshe::lab {

namespace {

enum class Kind { Text, Number, Integer, Flag };

struct Key {
    const char* name;
    const char* fallback;
    Kind kind;
};

// Order here is the order of the resolved config.
const std::vector<Key>& schema() {
    static const std::vector<Key> keys = {
        {"run.experiment", "all", Kind::Text},
        {"run.output", "results", Kind::Text},
        {"grid.t", "1.0", Kind::Number},
        {"grid.dy", "0.02", Kind::Number},
        {"grid.n_t", "1000", Kind::Integer},
        {"grid.half_width", "8.0", Kind::Number},
        {"grid.residual_dy", "0.05", Kind::Number},
        {"grid.residual_n_t", "200", Kind::Integer},
        {"layers.n_max", "3", Kind::Integer},
        {"mc.master_seed", "20240917", Kind::Integer},
        {"mc.samples", "100000", Kind::Integer},
        {"mc.steps", "200", Kind::Integer},
        {"mc.delta", "0.4", Kind::Number},
        {"mc.rayleigh_samples", "100000", Kind::Integer},
        {"mc.rayleigh_steps", "2000", Kind::Integer},
        {"mc.rayleigh_eps", "0.02", Kind::Number},
        {"mc.local_time_samples", "50000", Kind::Integer},
        {"mc.local_time_steps", "1000", Kind::Integer},
        {"lattice.dy", "0.05", Kind::Number},
        {"lattice.t", "0.5", Kind::Number},
        {"lattice.ratio_realizations", "200", Kind::Integer},
        {"lattice.shift_realizations", "10000", Kind::Integer},
        {"lattice.ensemble_realizations", "50", Kind::Integer},
        {"lattice.write_noise", "true", Kind::Flag},
        {"polymer.levels", "3", Kind::Integer},
        {"polymer.steps", "1000", Kind::Integer},
        {"polymer.seeds", "50", Kind::Integer},
        {"polymer.positivity_seeds", "1000", Kind::Integer},
        {"tolerance.free_field", "1e-4", Kind::Number},
        {"tolerance.layers", "5e-3", Kind::Number},
        {"tolerance.calibration", "5e-3", Kind::Number},
        {"tolerance.gt_ratio", "0.02", Kind::Number},
        {"tolerance.interlace", "1e-10", Kind::Number},
        {"tolerance.residual_ratio", "1.0", Kind::Number},
        {"tolerance.sigmas", "3.0", Kind::Number},
        {"tolerance.mc_relative_error", "0.01", Kind::Number},
        {"tolerance.rayleigh_ks", "0.02", Kind::Number},
        {"tolerance.second_moment", "0.05", Kind::Number},
        {"tolerance.ratio_improvement", "1.5", Kind::Number},
        {"tolerance.flow", "1e-10", Kind::Number},
        {"tolerance.polymer", "1e-3", Kind::Number},
        {"tolerance.polymer_exact", "1e-9", Kind::Number},
        {"tolerance.rsk", "1e-3", Kind::Number},
    };
    return keys;
}

const Key* find_key(const std::string& name) {
    for (const Key& k : schema())
        if (name == k.name) return &k;
    return nullptr;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last;
}

bool parse_integer(const std::string& s, long long& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

void check_value(const Key& key, const std::string& value, const std::string& where) {
    double d = 0.0;
    long long i = 0;
    switch (key.kind) {
        case Kind::Number:
            if (!parse_number(value, d)) throw ConfigError(where + ": " + key.name + " expects a number, got '" + value + "'");
            break;
        case Kind::Integer:
            if (!parse_integer(value, i)) throw ConfigError(where + ": " + key.name + " expects an integer, got '" + value + "'");
            break;
        case Kind::Flag:
            if (value != "true" && value != "false")
                throw ConfigError(where + ": " + key.name + " expects true or false, got '" + value + "'");
            break;
        case Kind::Text:
            if (std::string(key.name) == "run.experiment") {
                const auto& ex = Config::experiments();
                if (std::find(ex.begin(), ex.end(), value) == ex.end())
                    throw ConfigError(where + ": unknown experiment '" + value + "'");
            }
            break;
    }
}

}  // namespace

const std::vector<std::string>& Config::experiments() {
    static const std::vector<std::string> names = {"calibrate", "smooth-suite", "bridges-suite",
                                                   "lattice-suite", "polymer-suite", "all"};
    return names;
}

Bump parse_bump(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        double d = 0.0;
        if (t == "inf") d = std::numeric_limits<double>::infinity();
        else if (!parse_number(t, d)) throw ConfigError("bump entry '" + t + "' is not a number");
        v.push_back(d);
    }
    if (v.size() != 5)
        throw ConfigError("bump needs five values: amplitude, center_t, center_y, width_t, width_y");
    return Bump{v[0], v[1], v[2], v[3], v[4]};
}

Config Config::defaults() {
    Config c;
    for (const Key& k : schema()) c.values_[k.name] = k.fallback;
    return c;
}

Config Config::parse(const std::string& text, const std::string& origin) {
    Config c = defaults();
    std::stringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside any section");
        const std::string full = section + "." + key;
        if (full == "potential.bump") {
            parse_bump(value);
            if (!c.bumps_set_) c.bumps_.clear();
            c.bumps_set_ = true;
            c.bumps_.push_back(value);
            continue;
        }
        const Key* k = find_key(full);
        if (!k) throw ConfigError(where + ": unknown key '" + full + "'");
        check_value(*k, value, where);
        c.values_[full] = value;
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path.string());
}

std::string Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
    return it->second;
}

double Config::number(const std::string& key) const {
    double d = 0.0;
    if (!parse_number(get(key), d)) throw ConfigError(key + " is not a number");
    return d;
}

long long Config::integer(const std::string& key) const {
    long long i = 0;
    if (!parse_integer(get(key), i)) throw ConfigError(key + " is not an integer");
    return i;
}

bool Config::flag(const std::string& key) const { return get(key) == "true"; }

void Config::set(const std::string& key, const std::string& value) {
    const Key* k = find_key(key);
    if (!k) throw ConfigError("unknown key '" + key + "'");
    check_value(*k, value, "override");
    values_[key] = value;
}

std::vector<Bump> Config::bumps() const {
    if (!bumps_set_) return {Bump{0.8, 0.5, 0.3, 0.25, 0.6}};
    std::vector<Bump> out;
    for (const auto& b : bumps_) out.push_back(parse_bump(b));
    return out;
}

PotentialField Config::potential() const { return PotentialField(bumps()); }

std::string Config::resolved() const {
    std::ostringstream os;
    std::string section;
    for (const Key& k : schema()) {
        const std::string name = k.name;
        const auto dot = name.find('.');
        const std::string sec = name.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) os << '\n';
            os << '[' << sec << "]\n";
            section = sec;
        }
        os << name.substr(dot + 1) << " = " << values_.at(name) << '\n';
    }
    os << "\n[potential]\n";
    if (!bumps_set_) os << "bump = 0.8, 0.5, 0.3, 0.25, 0.6\n";
    for (const auto& b : bumps_) os << "bump = " << b << '\n';
    return os.str();
}

}  // namespace mlshe::lab
