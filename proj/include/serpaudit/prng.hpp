#pragma once

// Deterministic, platform-independent random primitives. Everything the
// toolkit randomizes flows through these helpers so that a (seed, key...)
// pair reproduces the same draws on any build.

#include <cstdint>
#include <string_view>
#include <vector>
#include <cmath>
#include <stdexcept>

namespace serpaudit::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stream generator seeded from a mixed state. Good enough statistically for
// simulation use and stable across platforms, unlike std:: distributions.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(splitmix64(seed ^ 0x2545f4914f6cdd1dULL)) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi], inclusive. Rejection sampling keeps the
    // draw unbiased and reproducible.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next());  // full range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return lo + static_cast<std::int64_t>(v % span);
    }

    // Box-Muller; always consumes exactly two uniforms per call.
    double normal(double mean, double sd) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(6.283185307179586476925287 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        if (k > n) throw std::invalid_argument("sample_indices: k > n");
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n) - 1));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

    template <typename T>
    std::vector<T> sample(const std::vector<T>& pool, std::size_t k) {
        std::vector<T> out;
        out.reserve(k);
        for (auto i : sample_indices(pool.size(), k)) out.push_back(pool[i]);
        return out;
    }

private:
    std::uint64_t state_;
};

// Derivation of sub-seeds from a master seed and a path of string/int keys.
// Each component is hashed then mixed, so reordering or renaming a component
// changes the stream while unrelated streams stay untouched.
inline std::uint64_t derive(std::uint64_t seed) { return splitmix64(seed); }

inline std::uint64_t mix_key(std::uint64_t h, std::string_view key) {
    return splitmix64(h ^ fnv1a64(key));
}
inline std::uint64_t mix_key(std::uint64_t h, std::uint64_t key) {
    return splitmix64(h ^ splitmix64(key));
}
inline std::uint64_t mix_key(std::uint64_t h, std::int64_t key) {
    return mix_key(h, static_cast<std::uint64_t>(key));
}

template <typename... Keys>
std::uint64_t derive(std::uint64_t seed, Keys&&... keys) {
    std::uint64_t h = splitmix64(seed);
    ((h = mix_key(h, keys)), ...);
    return h;
}

}  // namespace serpaudit::rng
