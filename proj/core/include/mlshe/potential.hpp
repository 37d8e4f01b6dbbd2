#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace mlshe {

// One Gaussian bump a * exp(-(s-c_t)^2/2w_t^2 - (y-c_y)^2/2w_y^2).
// An infinite width makes the bump flat in that variable.
struct Bump {
    double amplitude = 0.0;
    double center_t = 0.0;
    double center_y = 0.0;
    double width_t = std::numeric_limits<double>::infinity();
    double width_y = std::numeric_limits<double>::infinity();
};

class PotentialField {
public:
    PotentialField() = default;
    explicit PotentialField(std::vector<Bump> bumps, bool reflected = false);

    static PotentialField zero() { return PotentialField(); }
    static PotentialField constant(double c);
    static PotentialField single_bump(double amplitude, double center_t, double center_y,
                                      double width_t, double width_y);

    double operator()(double s, double y) const;

    // phi_dagger(s, y) = phi(s, -y).
    PotentialField reflected() const { return PotentialField(bumps_, !reflected_); }

    bool is_zero() const;
    bool is_reflected() const { return reflected_; }
    const std::vector<Bump>& bumps() const { return bumps_; }
    // Sum of |amplitudes|, an upper bound of sup |phi|.
    double sup_norm() const;
    // Maximum of phi over all (s, y): sum of positive amplitudes.
    double sup_value() const;
    // Largest |center_y| + 3 width_y over bumps with finite spatial width; 0 if none.
    double spatial_extent() const;

private:
    std::vector<Bump> bumps_;
    bool reflected_ = false;
};

}  // namespace mlshe
