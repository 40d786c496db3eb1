#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

// Deterministic randomness helpers shared by environments, oracles and the
// harness. Everything here is seed-in, value-out: no global state.

namespace bandit_lab {

// splitmix64, used for seed mixing and for cheap reproducible bit streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive an independent child seed from (seed, tag). Used so that one run
// seed can feed the environment, the oracle init and the action sampler
// without stream overlap.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

// Uniform double in [0, 1) from the top 53 bits of an engine draw.
// Bit-exact across platforms, unlike uniform_real_distribution.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Fill `out` with +-1 entries derived from `seed`, 64 signs per splitmix
// draw. Regenerating a perturbation vector this way is cheaper than storing
// it and is exactly reproducible.
inline void fill_rademacher(std::uint64_t seed, Eigen::VectorXd& out) {
    std::uint64_t state = seed;
    std::uint64_t bits = 0;
    int left = 0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (left == 0) {
            bits = splitmix64(state);
            left = 64;
        }
        out[i] = (bits & 1ULL) ? 1.0 : -1.0;
        bits >>= 1;
        --left;
    }
}

// Uniform direction on the unit sphere in R^d.
inline Eigen::VectorXd unit_sphere_vector(int d, std::mt19937_64& eng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(d);
    double norm = 0.0;
    do {
        for (int i = 0; i < d; ++i) v[i] = gauss(eng);
        norm = v.norm();
    } while (norm < 1e-12);
    return v / norm;
}

}  // namespace bandit_lab
