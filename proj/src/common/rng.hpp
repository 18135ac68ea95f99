#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ffae {

// Seeded generator with platform-independent draws. The standard
// distributions are implementation-defined, so every draw used by the
// pipeline is derived here from raw mt19937_64 output.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::size_t below(std::size_t n);

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller (no cached second value).
    double normal();

    // k distinct values from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    std::string state() const;
    void set_state(const std::string& state);

    // Independent stream for a sub-task (splitmix64 of seed and stream id).
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

}  // namespace ffae
