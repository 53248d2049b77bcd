#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace causalmix {

// SplitMix64 (Steele, Lea & Flood 2014): the state is a counter and every
// output is a hash of it, so streams can be split by hashing (seed, stream)
// pairs. Row r of a sampling run draws from stream(master_seed, r), which
// makes sample sets reproducible bit-for-bit and rows independent.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static SplitMix64 stream(std::uint64_t master, std::uint64_t stream_id) {
        return SplitMix64(mix(master) ^ mix(stream_id * 0xd6e8feb86659fd93ULL + 1));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53 random bits
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    double next_normal() {
        double u1 = next_unit();
        const double u2 = next_unit();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Marsaglia-Tsang for alpha >= 1, boosted by u^(1/alpha) below 1.
    double next_gamma(double alpha) {
        if (alpha < 1.0) {
            const double u = next_unit();
            return next_gamma(alpha + 1.0) * std::pow(u > 0 ? u : 0x1.0p-53, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = next_normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = next_unit();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // symmetric Dirichlet(alpha, ..., alpha) of the given size
    std::vector<double> next_dirichlet(double alpha, std::size_t size) {
        std::vector<double> out(size);
        double sum = 0.0;
        for (auto& g : out) {
            g = next_gamma(alpha);
            sum += g;
        }
        if (sum <= 0.0) {
            for (auto& g : out) g = 1.0 / static_cast<double>(size);
            return out;
        }
        for (auto& g : out) g /= sum;
        return out;
    }

private:
    std::uint64_t state_;
};

} // namespace causalmix
