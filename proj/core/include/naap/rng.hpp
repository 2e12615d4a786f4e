#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace naap {

/// SplitMix64 finalizer. Decorrelates related seed values.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a named substream: FNV-1a over the coordinate string folded with
/// the global seed. Adding a new coordinate never shifts existing streams.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view coordinates) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : coordinates) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(global_seed ^ h);
}

/// mt19937_64 with explicit value-to-variate transforms. The standard
/// <random> distributions are implementation-defined, so seeded results would
/// differ between standard libraries; these transforms are pinned.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [0, n). Rejection-sampled, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t min = (0 - n) % n;  // 2^64 mod n
        std::uint64_t x = gen_();
        while (x < min) x = gen_();
        return x % n;
    }

    /// Box-Muller normal variate.
    double normal(double mean = 0.0, double sd = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sd * spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return mean + sd * r * std::cos(t);
    }

    /// First k entries of a uniform random permutation of [0, n).
    std::vector<std::size_t> sample(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace naap
