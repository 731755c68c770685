#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC'11).
//
// Every draw is a pure function of (key, counter), so results do not depend
// on evaluation order or thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace radarsense {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(product);
    hi = static_cast<std::uint32_t>(product >> 32);
}

constexpr PhiloxCounter philox_round(const PhiloxCounter& c, const PhiloxKey& k) {
    std::uint32_t lo0{}, hi0{}, lo1{}, hi1{};
    mulhilo(kPhiloxM0, c[0], lo0, hi0);
    mulhilo(kPhiloxM1, c[2], lo1, hi1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace detail

/// Philox4x32 with 10 rounds.
constexpr PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += detail::kPhiloxW0;
            key[1] += detail::kPhiloxW1;
        }
        counter = detail::philox_round(counter, key);
    }
    return counter;
}

constexpr PhiloxKey make_key(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform double in (0, 1) from 53 random bits; never returns 0 or 1.
constexpr double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Keyed stream of uniforms. Each block of four 32-bit words yields two doubles;
/// the last counter word enumerates blocks.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint32_t c0, std::uint32_t c1, std::uint32_t c2)
        : key_(make_key(seed)), base_{c0, c1, c2, 0u} {}

    double uniform() {
        if (have_second_) {
            have_second_ = false;
            return second_;
        }
        PhiloxCounter ctr = base_;
        ctr[3] = block_++;
        const auto words = philox4x32(ctr, key_);
        second_ = to_unit_open(words[2], words[3]);
        have_second_ = true;
        return to_unit_open(words[0], words[1]);
    }

    /// Standard normal via Box-Muller (bit-reproducible, unlike std::normal_distribution).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

private:
    PhiloxKey key_;
    PhiloxCounter base_;
    std::uint32_t block_ = 0;
    double second_ = 0.0;
    bool have_second_ = false;
};

} // namespace radarsense
