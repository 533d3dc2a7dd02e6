#include <cmath>
#include <cstdlib>
#include <string_view>

#include "rcg/simd/kernels.hpp"

namespace rcg::simd {

namespace detail {
// Defined in kernels_avx2.cpp when RCG_HAVE_AVX2 is set.
const Kernels* avx2_table();
}  // namespace detail

namespace {

void exp_affine_scalar(std::span<const double> z, double shift, double scale,
                       std::span<double> out) {
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(shift + scale * z[i]);
    }
}

void projected_loss_scalar(std::span<const double> z, double wealth, double mean, double sd,
                           std::span<double> out) {
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = wealth * (1.0 - std::exp(mean + sd * z[i]));
    }
}

SumStats sum_stats_scalar(std::span<const double> values) {
    SumStats s;
    for (double v : values) {
        s.sum += v;
        s.sum_sq += v * v;
    }
    return s;
}

TailStats tail_stats_scalar(std::span<const double> values, double threshold) {
    TailStats t;
    for (double v : values) {
        if (v >= threshold) {
            ++t.count;
            t.sum += v;
        }
    }
    return t;
}

void log_euler_step_scalar(std::span<double> y, std::span<const double> drift,
                           std::span<const double> shock, double dt) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += drift[i] * dt + shock[i];
    }
}

void ou_step_scalar(std::span<double> v, std::span<const double> z, double level, double decay,
                    double scale) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = level + (v[i] - level) * decay + scale * z[i];
    }
}

const Kernels kScalar{
    .name = "scalar",
    .exp_affine = exp_affine_scalar,
    .projected_loss = projected_loss_scalar,
    .sum_stats = sum_stats_scalar,
    .tail_stats = tail_stats_scalar,
    .log_euler_step = log_euler_step_scalar,
    .ou_step = ou_step_scalar,
};

const Kernels& select() {
    if (const char* env = std::getenv("RCG_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
        return kScalar;
    }
    if (const Kernels* avx2 = avx2_kernels(); avx2 != nullptr) {
        return *avx2;
    }
    return kScalar;
}

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

const Kernels* avx2_kernels() {
#if defined(RCG_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return detail::avx2_table();
    }
#endif
    return nullptr;
}

const Kernels& active_kernels() {
    static const Kernels& chosen = select();
    return chosen;
}

}  // namespace rcg::simd
