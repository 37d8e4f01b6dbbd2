#include "mlshe/diffusion.hpp"

#include "mlshe/errors.hpp"

namespace mlshe {

DiffusionStep::DiffusionStep(std::size_t n_y, double dy, double h, DiffusionStencil stencil) : n_(n_y) {
    if (n_y < 3) throw ConfigurationError("diffusion step needs at least 3 nodes");
    // Discrete operator B^{-1} A/dy^2 with A = [1 -2 1]; B = identity for the
    // standard stencil and [1 10 1]/12 for the compact one. CN for u_t = L u / 2:
    // (B - h/4 A/dy^2) u' = (B + h/4 A/dy^2) u.
    const double a = h / (4.0 * dy * dy);
    const double b_off = stencil == DiffusionStencil::Compact4 ? 1.0 / 12.0 : 0.0;
    const double b_diag = stencil == DiffusionStencil::Compact4 ? 10.0 / 12.0 : 1.0;
    lhs_off_ = b_off - a;
    lhs_diag_ = b_diag + 2.0 * a;
    rhs_off_ = b_off + a;
    rhs_diag_ = b_diag - 2.0 * a;
    const std::size_t m = n_ - 2;  // interior unknowns
    inv_pivot_.resize(m);
    upper_.resize(m);
    double prev_upper = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double pivot = lhs_diag_ - (i == 0 ? 0.0 : lhs_off_ * prev_upper);
        inv_pivot_[i] = 1.0 / pivot;
        upper_[i] = lhs_off_ * inv_pivot_[i];
        prev_upper = upper_[i];
    }
}

void DiffusionStep::apply_with(std::span<double> u, std::vector<double>& rhs) const {
    const std::size_t m = n_ - 2;
    rhs.resize(m);
    u[0] = 0.0;
    u[n_ - 1] = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        rhs[i] = rhs_off_ * (u[i] + u[i + 2]) + rhs_diag_ * u[i + 1];
    // Forward sweep.
    rhs[0] *= inv_pivot_[0];
    for (std::size_t i = 1; i < m; ++i) rhs[i] = (rhs[i] - lhs_off_ * rhs[i - 1]) * inv_pivot_[i];
    // Back substitution.
    for (std::size_t i = m - 1; i-- > 0;) rhs[i] -= upper_[i] * rhs[i + 1];
    for (std::size_t i = 0; i < m; ++i) u[i + 1] = rhs[i];
}

void DiffusionStep::apply(std::span<double> u) const {
    if (u.size() != n_) throw DomainError("diffusion step: size mismatch");
    thread_local std::vector<double> scratch;
    apply_with(u, scratch);
}

void DiffusionStep::apply_rows(std::span<double> block, std::size_t rows) const {
    if (block.size() != rows * n_) throw DomainError("diffusion step: block size mismatch");
    thread_local std::vector<double> scratch;
    for (std::size_t r = 0; r < rows; ++r) apply_with(block.subspan(r * n_, n_), scratch);
}

}  // namespace mlshe
