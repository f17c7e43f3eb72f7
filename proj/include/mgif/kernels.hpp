#pragma once

#include <cstddef>

namespace mgif::kern {

// Data-parallel inner loops behind the tensor/curve machinery. Scalar
// implementations are the reference semantics; the AVX2 variants are
// selected at runtime when the CPU supports them and are equivalence-tested
// against scalar.
//
// Exactness contract:
//   - element-wise ops (relu_*, sgd_update, step_sign, clamp_box, scale,
//     add) produce bit-identical results on every backend;
//   - reductions (dot, matvec rows, sumsq, cos_stats, accum_scaled) may
//     differ by reassociation rounding between backends. Reductions that
//     feed long running sums accumulate in double.
struct Ops {
    // y = W x + b (row-major W: rows x cols); b may be null. f32 accumulate.
    void (*matvec)(const float* w, const float* x, const float* b, float* y,
                   int rows, int cols);
    // y += a * x
    void (*axpy)(float a, const float* x, float* y, int n);
    // double-accumulated inner product of f32 vectors
    double (*dot)(const float* x, const float* y, int n);
    // double-accumulated sum of squares
    double (*sumsq)(const float* x, int n);
    // y = max(x, 0)
    void (*relu_fwd)(const float* x, float* y, int n);
    // dx = (x > 0) ? dy : 0
    void (*relu_bwd)(const float* x, const float* dy, float* dx, int n);
    // w -= lr * g
    void (*sgd_update)(float* w, const float* g, float lr, int n);
    // acc (f64) += s * x (f32)
    void (*accum_scaled)(double* acc, const float* x, double s, int n);
    // single pass: *dot = u.v, *uu = u.u, *vv = v.v (double accumulate)
    void (*cos_stats)(const float* u, const float* v, int n, double* dot,
                      double* uu, double* vv);
    // x = min(max(x, lo), hi), element-wise bounds
    void (*clamp_box)(float* x, const float* lo, const float* hi, int n);
    // x += alpha * sign(g), sign(0) = 0
    void (*step_sign)(float* x, const float* g, float alpha, int n);
};

enum class Backend { scalar, avx2 };

// Active dispatch table. Chosen once from CPU features, overridable via the
// MGIF_KERNELS environment variable ("scalar" or "avx2") or set_backend().
const Ops& ops();
const Ops& scalar_ops();
// Table for a specific backend; avx2 falls back to scalar when unavailable.
const Ops& backend_ops(Backend b);

bool avx2_available();
Backend active_backend();

// Test hook. Not thread-safe against concurrent kernel use.
void set_backend(Backend b);

}  // namespace mgif::kern
