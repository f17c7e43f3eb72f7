#include "mgif/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace mgif::kern {

// Provided by kernels_avx2.cpp when that TU is built.
const Ops& detail_avx2_ops();
bool detail_cpu_has_avx2();

namespace {

void matvec_scalar(const float* w, const float* x, const float* b, float* y,
                   int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        const float* wr = w + static_cast<std::size_t>(r) * cols;
        float acc = b ? b[r] : 0.0f;
        for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

void axpy_scalar(float a, const float* x, float* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const float* x, const float* y, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return acc;
}

double sumsq_scalar(const float* x, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += static_cast<double>(x[i]) * static_cast<double>(x[i]);
    return acc;
}

void relu_fwd_scalar(const float* x, float* y, int n) {
    for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_scalar(const float* x, const float* dy, float* dx, int n) {
    for (int i = 0; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void sgd_update_scalar(float* w, const float* g, float lr, int n) {
    for (int i = 0; i < n; ++i) w[i] = w[i] - lr * g[i];
}

void accum_scaled_scalar(double* acc, const float* x, double s, int n) {
    for (int i = 0; i < n; ++i) acc[i] += s * static_cast<double>(x[i]);
}

void cos_stats_scalar(const float* u, const float* v, int n, double* dot,
                      double* uu, double* vv) {
    double d = 0.0, a = 0.0, b = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ui = u[i], vi = v[i];
        d += ui * vi;
        a += ui * ui;
        b += vi * vi;
    }
    *dot = d;
    *uu = a;
    *vv = b;
}

void clamp_box_scalar(float* x, const float* lo, const float* hi, int n) {
    for (int i = 0; i < n; ++i) {
        float v = x[i];
        if (v < lo[i]) v = lo[i];
        if (v > hi[i]) v = hi[i];
        x[i] = v;
    }
}

void step_sign_scalar(float* x, const float* g, float alpha, int n) {
    for (int i = 0; i < n; ++i) {
        const float s = g[i] > 0.0f ? 1.0f : (g[i] < 0.0f ? -1.0f : 0.0f);
        x[i] = x[i] + alpha * s;
    }
}

constexpr Ops kScalarOps = {
    matvec_scalar,     axpy_scalar,         dot_scalar,
    sumsq_scalar,      relu_fwd_scalar,     relu_bwd_scalar,
    sgd_update_scalar, accum_scaled_scalar, cos_stats_scalar,
    clamp_box_scalar,  step_sign_scalar,
};

std::atomic<const Ops*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};

const Ops* pick_initial() {
    Backend want = avx2_available() ? Backend::avx2 : Backend::scalar;
    if (const char* env = std::getenv("MGIF_KERNELS")) {
        const std::string s(env);
        if (s == "scalar") want = Backend::scalar;
        else if (s == "avx2" && avx2_available()) want = Backend::avx2;
    }
    g_backend.store(want);
    return want == Backend::avx2 ? &detail_avx2_ops() : &kScalarOps;
}

}  // namespace

#if !defined(MGIF_HAVE_AVX2_TU)
const Ops& detail_avx2_ops() { return kScalarOps; }
bool detail_cpu_has_avx2() { return false; }
#endif

bool avx2_available() { return detail_cpu_has_avx2(); }

const Ops& scalar_ops() { return kScalarOps; }

const Ops& backend_ops(Backend b) {
    if (b == Backend::avx2 && avx2_available()) return detail_avx2_ops();
    return kScalarOps;
}

const Ops& ops() {
    const Ops* p = g_active.load(std::memory_order_acquire);
    if (!p) {
        p = pick_initial();
        g_active.store(p, std::memory_order_release);
    }
    return *p;
}

Backend active_backend() {
    ops();
    return g_backend.load();
}

void set_backend(Backend b) {
    if (b == Backend::avx2 && avx2_available()) {
        g_backend.store(Backend::avx2);
        g_active.store(&detail_avx2_ops(), std::memory_order_release);
    } else {
        g_backend.store(Backend::scalar);
        g_active.store(&kScalarOps, std::memory_order_release);
    }
}

}  // namespace mgif::kern
