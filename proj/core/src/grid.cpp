#include "mlshe/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlshe/errors.hpp"

namespace mlshe {

std::size_t GridSpec::nearest(double v) const {
    const double s = std::round((v - y_min) / dy());
    return static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(n_y - 1)));
}

bool GridSpec::on_grid(double v) const {
    const double s = (v - y_min) / dy();
    return s >= -1e-9 && s <= static_cast<double>(n_y - 1) + 1e-9 && std::abs(s - std::round(s)) < 1e-9;
}

std::size_t GridSpec::x_index(double v) const {
    for (std::size_t i = 0; i < x_nodes.size(); ++i)
        if (std::abs(x_nodes[i] - v) <= 1e-9 * dy()) return i;
    throw ConfigurationError("no x node at " + std::to_string(v));
}

GridSpec GridSpec::symmetric(double half_width, double dy, double t_final, std::size_t n_t) {
    GridSpec g;
    const auto half = static_cast<std::size_t>(std::ceil(half_width / dy - 1e-9));
    g.y_min = -dy * static_cast<double>(half);
    g.y_max = dy * static_cast<double>(half);
    g.n_y = 2 * half + 1;
    g.n_t = n_t;
    g.t_final = t_final;
    g.init_epsilon = 1e-3 * t_final;
    return g;
}

GridSpec& GridSpec::with_pencil(double center, int half_count) {
    x_nodes.clear();
    for (int k = -half_count; k <= half_count; ++k) x_nodes.push_back(center + k * dy());
    return *this;
}

void GridSpec::validate() const {
    if (n_y < 5) throw ConfigurationError("grid needs at least 5 space nodes");
    if (n_t < 1) throw ConfigurationError("grid needs at least one time step");
    if (!(y_max > y_min)) throw ConfigurationError("grid bounds must satisfy y_min < y_max");
    if (!(t_final > 0.0)) throw ConfigurationError("t_final must be positive");
    if (!(init_epsilon >= 0.0) || !(init_epsilon < t_final))
        throw ConfigurationError("init_epsilon must lie in [0, t_final)");
    if (x_nodes.empty()) throw ConfigurationError("grid needs at least one x node");
    for (double x : x_nodes)
        if (!(x > y_min && x < y_max)) throw ConfigurationError("x node outside the domain");
}

}  // namespace mlshe
