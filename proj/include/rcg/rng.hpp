#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace rcg {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Seed-derivation helper for mixing real-valued parameters into a stream id.
std::uint64_t hash_doubles(std::span<const double> values) noexcept;

/// One independent Gaussian stream (a path, a batch, a worker).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double operator()() { return normal_(engine_); }

    void fill(std::span<double> out) {
        for (double& z : out) z = normal_(engine_);
    }

    /// Uniform on [0,1) from the same engine.
    double uniform() { return std::generate_canonical<double, 53>(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rcg
