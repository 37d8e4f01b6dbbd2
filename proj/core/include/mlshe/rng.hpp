#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace mlshe::rng {

// Philox4x32-10 block function (Salmon et al. 2011).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

// splitmix64 finalizer; used to fold hierarchical identifiers into one 64-bit id.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t child) noexcept {
    return mix64(parent ^ mix64(child + 0x632BE59BD9B4E019ull));
}

template <class... Ids>
constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t child, Ids... rest) noexcept {
    return derive(derive(parent, child), static_cast<std::uint64_t>(rest)...);
}

// Map 53 random bits to the open interval (0, 1).
inline double to_unit_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Deterministic pair of standard normals for (seed, stream, index).
// Random access: no state, any index can be computed independently.
std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t index) noexcept;

// Sequential view over a (seed, stream) counter space.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint64_t next_u64() noexcept;
    double uniform() noexcept;  // in (0, 1)
    double normal() noexcept;
    void fill_normal(std::span<double> out) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mlshe::rng
