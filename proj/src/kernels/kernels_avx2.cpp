#include "mgif/kernels.hpp"

#include <immintrin.h>

namespace mgif::kern {

namespace {

inline float hsum8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_hadd_ps(lo, lo);
    lo = _mm_hadd_ps(lo, lo);
    return _mm_cvtss_f32(lo);
}

inline double hsum4d(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void matvec_avx2(const float* w, const float* x, const float* b, float* y,
                 int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        const float* wr = w + static_cast<std::size_t>(r) * cols;
        __m256 acc = _mm256_setzero_ps();
        int c = 0;
        for (; c + 8 <= cols; c += 8) {
            acc = _mm256_fmadd_ps(_mm256_loadu_ps(wr + c),
                                  _mm256_loadu_ps(x + c), acc);
        }
        float sum = hsum8(acc);
        for (; c < cols; ++c) sum += wr[c] * x[c];
        y[r] = (b ? b[r] : 0.0f) + sum;
    }
}

void axpy_avx2(float a, const float* x, float* y, int n) {
    const __m256 va = _mm256_set1_ps(a);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        // mul+add (not fma) to match scalar reference bit-for-bit
        __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(const float* x, const float* y, int n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vx = _mm256_loadu_ps(x + i);
        __m256 vy = _mm256_loadu_ps(y + i);
        acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(vx)),
                               _mm256_cvtps_pd(_mm256_castps256_ps128(vy)), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1)),
                               _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1)), acc1);
    }
    double sum = hsum4d(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        sum += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return sum;
}

double sumsq_avx2(const float* x, int n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vx = _mm256_loadu_ps(x + i);
        __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(vx));
        __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1));
        acc0 = _mm256_fmadd_pd(lo, lo, acc0);
        acc1 = _mm256_fmadd_pd(hi, hi, acc1);
    }
    double sum = hsum4d(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        sum += static_cast<double>(x[i]) * static_cast<double>(x[i]);
    return sum;
}

void relu_fwd_avx2(const float* x, float* y, int n) {
    const __m256 zero = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_avx2(const float* x, const float* dy, float* dx, int n) {
    const __m256 zero = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        _mm256_storeu_ps(dx + i, _mm256_and_ps(mask, _mm256_loadu_ps(dy + i)));
    }
    for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void sgd_update_avx2(float* w, const float* g, float lr, int n) {
    const __m256 vlr = _mm256_set1_ps(lr);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 prod = _mm256_mul_ps(vlr, _mm256_loadu_ps(g + i));
        _mm256_storeu_ps(w + i, _mm256_sub_ps(_mm256_loadu_ps(w + i), prod));
    }
    for (; i < n; ++i) w[i] = w[i] - lr * g[i];
}

void accum_scaled_avx2(double* acc, const float* x, double s, int n) {
    const __m256d vs = _mm256_set1_pd(s);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vx = _mm256_loadu_ps(x + i);
        __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(vx));
        __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1));
        // mul+add to match the scalar reference exactly
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i),
                                                _mm256_mul_pd(vs, lo)));
        _mm256_storeu_pd(acc + i + 4, _mm256_add_pd(_mm256_loadu_pd(acc + i + 4),
                                                    _mm256_mul_pd(vs, hi)));
    }
    for (; i < n; ++i) acc[i] += s * static_cast<double>(x[i]);
}

void cos_stats_avx2(const float* u, const float* v, int n, double* dot,
                    double* uu, double* vv) {
    __m256d acc_d = _mm256_setzero_pd();
    __m256d acc_u = _mm256_setzero_pd();
    __m256d acc_v = _mm256_setzero_pd();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 xu = _mm256_loadu_ps(u + i);
        __m256 xv = _mm256_loadu_ps(v + i);
        __m256d ul = _mm256_cvtps_pd(_mm256_castps256_ps128(xu));
        __m256d uh = _mm256_cvtps_pd(_mm256_extractf128_ps(xu, 1));
        __m256d vl = _mm256_cvtps_pd(_mm256_castps256_ps128(xv));
        __m256d vh = _mm256_cvtps_pd(_mm256_extractf128_ps(xv, 1));
        acc_d = _mm256_fmadd_pd(ul, vl, acc_d);
        acc_d = _mm256_fmadd_pd(uh, vh, acc_d);
        acc_u = _mm256_fmadd_pd(ul, ul, acc_u);
        acc_u = _mm256_fmadd_pd(uh, uh, acc_u);
        acc_v = _mm256_fmadd_pd(vl, vl, acc_v);
        acc_v = _mm256_fmadd_pd(vh, vh, acc_v);
    }
    double d = hsum4d(acc_d), a = hsum4d(acc_u), b = hsum4d(acc_v);
    for (; i < n; ++i) {
        const double ui = u[i], vi = v[i];
        d += ui * vi;
        a += ui * ui;
        b += vi * vi;
    }
    *dot = d;
    *uu = a;
    *vv = b;
}

void clamp_box_avx2(float* x, const float* lo, const float* hi, int n) {
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        v = _mm256_max_ps(v, _mm256_loadu_ps(lo + i));
        v = _mm256_min_ps(v, _mm256_loadu_ps(hi + i));
        _mm256_storeu_ps(x + i, v);
    }
    for (; i < n; ++i) {
        float v = x[i];
        if (v < lo[i]) v = lo[i];
        if (v > hi[i]) v = hi[i];
        x[i] = v;
    }
}

void step_sign_avx2(float* x, const float* g, float alpha, int n) {
    const __m256 zero = _mm256_setzero_ps();
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 neg = _mm256_set1_ps(-1.0f);
    const __m256 va = _mm256_set1_ps(alpha);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vg = _mm256_loadu_ps(g + i);
        __m256 s = _mm256_and_ps(_mm256_cmp_ps(vg, zero, _CMP_GT_OQ), one);
        s = _mm256_or_ps(s, _mm256_and_ps(_mm256_cmp_ps(vg, zero, _CMP_LT_OQ), neg));
        __m256 prod = _mm256_mul_ps(va, s);
        _mm256_storeu_ps(x + i, _mm256_add_ps(_mm256_loadu_ps(x + i), prod));
    }
    for (; i < n; ++i) {
        const float s = g[i] > 0.0f ? 1.0f : (g[i] < 0.0f ? -1.0f : 0.0f);
        x[i] = x[i] + alpha * s;
    }
}

constexpr Ops kAvx2Ops = {
    matvec_avx2,     axpy_avx2,         dot_avx2,
    sumsq_avx2,      relu_fwd_avx2,     relu_bwd_avx2,
    sgd_update_avx2, accum_scaled_avx2, cos_stats_avx2,
    clamp_box_avx2,  step_sign_avx2,
};

}  // namespace

const Ops& detail_avx2_ops() { return kAvx2Ops; }

bool detail_cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

}  // namespace mgif::kern
