#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace advsel {

/// Deterministic 64-bit generator (splitmix64). Every random draw in the
/// library flows through this so runs are reproducible from a single seed;
/// the update and output functions are fixed and documented in the README.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do { v = next_u64(); } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller; the companion value is cached so
    /// draws come in a fixed, reproducible order.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(T& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

namespace detail {
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}
}  // namespace detail

/// Derive the seed of a named sub-stream so components (folds, trainer,
/// surrogate, ...) draw from independent sequences under one root seed.
inline std::uint64_t substream(std::uint64_t seed, std::string_view name) {
    Rng r(seed ^ detail::fnv1a64(name));
    return r.next_u64();
}

inline std::uint64_t substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    Rng r(substream(seed, name) ^ (index * 0x9e3779b97f4a7c15ULL + 1));
    return r.next_u64();
}

}  // namespace advsel
