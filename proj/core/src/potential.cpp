#include "mlshe/potential.hpp"

#include <algorithm>

#include "mlshe/errors.hpp"

namespace mlshe {

PotentialField::PotentialField(std::vector<Bump> bumps, bool reflected)
    : bumps_(std::move(bumps)), reflected_(reflected) {
    for (const Bump& b : bumps_)
        if (!(b.width_t > 0.0) || !(b.width_y > 0.0) || !std::isfinite(b.amplitude))
            throw ConfigurationError("potential bump needs positive widths and a finite amplitude");
}

PotentialField PotentialField::constant(double c) { return PotentialField({Bump{c}}); }

PotentialField PotentialField::single_bump(double amplitude, double center_t, double center_y,
                                           double width_t, double width_y) {
    return PotentialField({Bump{amplitude, center_t, center_y, width_t, width_y}});
}

double PotentialField::operator()(double s, double y) const {
    if (reflected_) y = -y;
    double v = 0.0;
    for (const Bump& b : bumps_) {
        double e = 0.0;
        if (std::isfinite(b.width_t)) {
            const double d = (s - b.center_t) / b.width_t;
            e += 0.5 * d * d;
        }
        if (std::isfinite(b.width_y)) {
            const double d = (y - b.center_y) / b.width_y;
            e += 0.5 * d * d;
        }
        v += b.amplitude * std::exp(-e);
    }
    return v;
}

bool PotentialField::is_zero() const {
    return std::all_of(bumps_.begin(), bumps_.end(), [](const Bump& b) { return b.amplitude == 0.0; });
}

double PotentialField::sup_norm() const {
    double s = 0.0;
    for (const Bump& b : bumps_) s += std::abs(b.amplitude);
    return s;
}

double PotentialField::sup_value() const {
    double s = 0.0;
    for (const Bump& b : bumps_) s += std::max(b.amplitude, 0.0);
    return s;
}

double PotentialField::spatial_extent() const {
    double e = 0.0;
    for (const Bump& b : bumps_)
        if (std::isfinite(b.width_y) && b.amplitude != 0.0)
            e = std::max(e, std::abs(b.center_y) + 3.0 * b.width_y);
    return e;
}

}  // namespace mlshe
