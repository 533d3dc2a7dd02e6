// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the runtime check in avx2_kernels().

#include <immintrin.h>

#include <bit>
#include <cmath>

#include "rcg/simd/kernels.hpp"

namespace rcg::simd {

namespace {

constexpr std::size_t kLanes = 4;

// exp(x) by Cody-Waite reduction x = n ln2 + r and the Cephes rational
// approximation on |r| <= ln2/2. The power of two is applied in two halves so
// that results in the gradual-underflow range stay correct.
inline __m256d exp_pd(__m256d x) {
    const __m256d overflow_at = _mm256_set1_pd(709.782712893383973096);
    const __m256d underflow_at = _mm256_set1_pd(-745.133219101941108420);
    const __m256d too_big = _mm256_cmp_pd(x, overflow_at, _CMP_GT_OQ);
    const __m256d too_small = _mm256_cmp_pd(x, underflow_at, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, underflow_at), overflow_at);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634074)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009e0));
    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
    const __m256d n2 = _mm256_sub_pd(n, n1);
    const __m256i bias = _mm256_set1_epi64x(1023);
    const __m256i k1 = _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n1)), bias);
    const __m256i k2 = _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n2)), bias);
    const __m256d s1 = _mm256_castsi256_pd(_mm256_slli_epi64(k1, 52));
    const __m256d s2 = _mm256_castsi256_pd(_mm256_slli_epi64(k2, 52));
    e = _mm256_mul_pd(_mm256_mul_pd(e, s1), s2);

    e = _mm256_blendv_pd(e, _mm256_set1_pd(HUGE_VAL), too_big);
    e = _mm256_blendv_pd(e, _mm256_setzero_pd(), too_small);
    return e;
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void exp_affine_avx2(std::span<const double> z, double shift, double scale,
                     std::span<double> out) {
    const std::size_t n = z.size();
    const __m256d vs = _mm256_set1_pd(shift);
    const __m256d vk = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d arg = _mm256_fmadd_pd(vk, _mm256_loadu_pd(z.data() + i), vs);
        _mm256_storeu_pd(out.data() + i, exp_pd(arg));
    }
    for (; i < n; ++i) {
        out[i] = std::exp(shift + scale * z[i]);
    }
}

void projected_loss_avx2(std::span<const double> z, double wealth, double mean, double sd,
                         std::span<double> out) {
    const std::size_t n = z.size();
    const __m256d vm = _mm256_set1_pd(mean);
    const __m256d vs = _mm256_set1_pd(sd);
    const __m256d vx = _mm256_set1_pd(wealth);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d growth = exp_pd(_mm256_fmadd_pd(vs, _mm256_loadu_pd(z.data() + i), vm));
        _mm256_storeu_pd(out.data() + i, _mm256_fnmadd_pd(vx, growth, vx));
    }
    for (; i < n; ++i) {
        out[i] = wealth * (1.0 - std::exp(mean + sd * z[i]));
    }
}

SumStats sum_stats_avx2(std::span<const double> values) {
    const std::size_t n = values.size();
    __m256d s = _mm256_setzero_pd();
    __m256d ss = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d v = _mm256_loadu_pd(values.data() + i);
        s = _mm256_add_pd(s, v);
        ss = _mm256_fmadd_pd(v, v, ss);
    }
    SumStats out{hsum(s), hsum(ss)};
    for (; i < n; ++i) {
        out.sum += values[i];
        out.sum_sq += values[i] * values[i];
    }
    return out;
}

TailStats tail_stats_avx2(std::span<const double> values, double threshold) {
    const std::size_t n = values.size();
    const __m256d thr = _mm256_set1_pd(threshold);
    __m256d s = _mm256_setzero_pd();
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d v = _mm256_loadu_pd(values.data() + i);
        const __m256d keep = _mm256_cmp_pd(v, thr, _CMP_GE_OQ);
        s = _mm256_add_pd(s, _mm256_and_pd(v, keep));
        count += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(keep))));
    }
    TailStats out{count, hsum(s)};
    for (; i < n; ++i) {
        if (values[i] >= threshold) {
            ++out.count;
            out.sum += values[i];
        }
    }
    return out;
}

void log_euler_step_avx2(std::span<double> y, std::span<const double> drift,
                         std::span<const double> shock, double dt) {
    const std::size_t n = y.size();
    const __m256d vdt = _mm256_set1_pd(dt);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d inc = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(drift.data() + i), vdt),
                                          _mm256_loadu_pd(shock.data() + i));
        _mm256_storeu_pd(y.data() + i, _mm256_add_pd(_mm256_loadu_pd(y.data() + i), inc));
    }
    for (; i < n; ++i) {
        y[i] += drift[i] * dt + shock[i];
    }
}

void ou_step_avx2(std::span<double> v, std::span<const double> z, double level, double decay,
                  double scale) {
    const std::size_t n = v.size();
    const __m256d vl = _mm256_set1_pd(level);
    const __m256d vd = _mm256_set1_pd(decay);
    const __m256d vs = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d dev = _mm256_sub_pd(_mm256_loadu_pd(v.data() + i), vl);
        const __m256d pulled = _mm256_add_pd(vl, _mm256_mul_pd(dev, vd));
        _mm256_storeu_pd(v.data() + i, _mm256_add_pd(pulled, _mm256_mul_pd(vs, _mm256_loadu_pd(z.data() + i))));
    }
    for (; i < n; ++i) {
        v[i] = level + (v[i] - level) * decay + scale * z[i];
    }
}

const Kernels kAvx2{
    .name = "avx2",
    .exp_affine = exp_affine_avx2,
    .projected_loss = projected_loss_avx2,
    .sum_stats = sum_stats_avx2,
    .tail_stats = tail_stats_avx2,
    .log_euler_step = log_euler_step_avx2,
    .ou_step = ou_step_avx2,
};

}  // namespace

namespace detail {
const Kernels* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace rcg::simd
