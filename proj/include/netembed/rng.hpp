#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace netembed {

// Counter-style generator: cheap to seed per sample index, so parallel loops
// stay deterministic regardless of scheduling.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        // Box-Muller; fresh pair each call keeps the stream stateless enough
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    Eigen::VectorXd gaussian_vector(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    Eigen::VectorXd unit_vector(int n) {
        while (true) {
            Eigen::VectorXd v = gaussian_vector(n);
            double len = v.norm();
            if (len > 1e-12) return v / len;
        }
    }

    // uniform in the closed ball of given radius
    Eigen::VectorXd ball_vector(int n, double radius) {
        Eigen::VectorXd dir = unit_vector(n);
        double r = radius * std::pow(uniform(), 1.0 / n);
        return r * dir;
    }
};

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

inline std::uint64_t hash_ints(std::uint64_t seed, const Eigen::VectorXi& idx) {
    std::uint64_t h = seed;
    for (int i = 0; i < idx.size(); ++i)
        h = hash_mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(idx[i])));
    return h;
}

}  // namespace netembed
