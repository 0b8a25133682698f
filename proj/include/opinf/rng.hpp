#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "opinf/common.hpp"

namespace opinf {

/// splitmix64 finalizer; used to derive independent seed streams from
/// (seed, tag, ...) tuples so results do not depend on execution order.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Deterministic RNG. mt19937_64 has a standard-mandated sequence and the
/// uniform mapping below is explicit, so draws are reproducible bit-for-bit
/// across platforms (std::uniform_real_distribution is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform on [-b, b).
    double symmetric(double b) { return (2.0 * uniform() - 1.0) * b; }

    double normal() {
        // Box-Muller; one draw per call keeps the stream position predictable.
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t integer(std::uint64_t n) {
        // Rejection-free modulo is biased; n here is tiny vs 2^64 so the bias
        // is irrelevant, but keep the rejection loop for exactness.
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    Vec uniform_vec(Index n, double lo, double hi) {
        Vec v(n);
        for (Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    Vec normal_vec(Index n) {
        Vec v(n);
        for (Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    Mat normal_mat(Index r, Index c) {
        Mat m(r, c);
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) m(i, j) = normal();
        return m;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates with our own index draws.
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(integer(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace opinf
