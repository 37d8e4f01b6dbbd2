#pragma once

#include <cstddef>
#include <vector>

namespace mlshe {

enum class DiffusionStencil {
    Standard2,  // three-point Laplacian, second order in dy
    Compact4,   // compact (Numerov) Laplacian, fourth order in dy
};

// Product grid shared by the smooth solver and the lattice.
// Time runs from init_epsilon to t_final in n_t uniform steps.
struct GridSpec {
    double y_min = -8.0;
    double y_max = 8.0;
    std::size_t n_y = 801;
    std::size_t n_t = 1000;
    double t_final = 1.0;
    std::vector<double> x_nodes{0.0};
    double init_epsilon = 1e-3;
    DiffusionStencil stencil = DiffusionStencil::Compact4;

    double dy() const { return (y_max - y_min) / static_cast<double>(n_y - 1); }
    double dt() const { return (t_final - init_epsilon) / static_cast<double>(n_t); }
    double y(std::size_t j) const { return y_min + dy() * static_cast<double>(j); }
    double time(std::size_t k) const { return init_epsilon + dt() * static_cast<double>(k); }
    double diffusion_number() const { return dt() / (dy() * dy()); }

    // Index of the y node closest to v (clamped to the grid).
    std::size_t nearest(double v) const;
    // True when v sits on a grid node up to 1e-9 dy.
    bool on_grid(double v) const;
    // Index of an x node equal to v within 1e-9 dy; throws ConfigurationError otherwise.
    std::size_t x_index(double v) const;

    // Symmetric domain [-half_width, half_width] with spacing dy (rounded to fit).
    static GridSpec symmetric(double half_width, double dy, double t_final, std::size_t n_t);

    // Replaces x_nodes by center + k dy, k = -half_count..half_count.
    GridSpec& with_pencil(double center, int half_count);

    // Checks structural validity (sizes, ordering, positive steps).
    void validate() const;
};

}  // namespace mlshe
