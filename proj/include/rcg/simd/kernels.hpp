#pragma once

// Data-parallel inner loops of the Monte Carlo engines. Every kernel has a
// scalar reference implementation; an AVX2+FMA variant is selected at runtime
// when the CPU supports it. Setting RCG_SIMD=scalar forces the reference path.
// The two step kernels are bitwise identical across variants, so a simulated
// path does not depend on its position within a block.

#include <cstddef>
#include <span>
#include <string_view>

namespace rcg::simd {

struct SumStats {
    double sum = 0.0;
    double sum_sq = 0.0;
};

struct TailStats {
    std::size_t count = 0;
    double sum = 0.0;
};

struct Kernels {
    std::string_view name;

    /// out[i] = exp(shift + scale * z[i])
    void (*exp_affine)(std::span<const double> z, double shift, double scale,
                       std::span<double> out);

    /// out[i] = wealth * (1 - exp(mean + sd * z[i]))
    void (*projected_loss)(std::span<const double> z, double wealth, double mean, double sd,
                           std::span<double> out);

    /// Sum and sum of squares.
    SumStats (*sum_stats)(std::span<const double> values);

    /// Count and sum of the values >= threshold.
    TailStats (*tail_stats)(std::span<const double> values, double threshold);

    /// y[i] += drift[i] * dt + shock[i]
    void (*log_euler_step)(std::span<double> y, std::span<const double> drift,
                           std::span<const double> shock, double dt);

    /// v[i] = level + (v[i] - level) * decay + scale * z[i]
    void (*ou_step)(std::span<double> v, std::span<const double> z, double level, double decay,
                    double scale);
};

const Kernels& scalar_kernels();

/// nullptr when the AVX2 variants were not compiled in or the CPU lacks AVX2/FMA.
const Kernels* avx2_kernels();

/// Dispatch decision, made once per process.
const Kernels& active_kernels();

}  // namespace rcg::simd
