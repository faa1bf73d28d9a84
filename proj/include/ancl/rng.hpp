#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "ancl/common.hpp"

namespace ancl {

// All randomness in a run funnels through one root seed. Independent streams
// are derived by hashing a path of stream tags through splitmix64, so adding
// a consumer never perturbs the draws of existing ones.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream tags used across modules. Values are arbitrary but frozen: changing
// them changes every seeded result.
enum Stream : std::uint64_t {
    kStreamInit = 1,
    kStreamData = 2,
    kStreamShuffle = 3,
    kStreamAugment = 4,
    kStreamPool = 5,
    kStreamTestData = 6,
    kStreamEval = 7,
    kStreamSweep = 8,
    kStreamNoiseEstimate = 9,
    kStreamDownstream = 10,
};

inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(root);
    for (std::uint64_t v : path) s = splitmix64(s ^ v);
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

inline std::mt19937_64 make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    return std::mt19937_64(derive_seed(root, path));
}

inline void fill_gaussian(Mat& m, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    double* p = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) p[i] = dist(rng);
}

}  // namespace ancl
