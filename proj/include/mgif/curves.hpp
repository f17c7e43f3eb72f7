#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgif/field.hpp"
#include "mgif/refset.hpp"

namespace mgif {

enum class BaselineMode : std::uint8_t { zero = 0, random = 1 };
enum class QuadratureRule : std::uint8_t { midpoint = 0 };

// One path-integral curve: cumulative midpoint quadrature of the gradient
// field along the straight segment x0 -> x1, sampled at t_s = s/S for
// s = 1..S (the t = 0 point is the zero vector and is not stored).
// Samples stay in the 64-bit accumulation precision; fingerprint assembly
// down-casts to 32-bit storage.
struct GifCurve {
    int steps = 0;  // S
    int dim = 0;    // D
    std::vector<double> samples;  // S x D
    std::vector<float> x0, x1;
    QuadratureRule rule = QuadratureRule::midpoint;

    std::span<const double> at(int s) const {
        return {samples.data() + static_cast<std::size_t>(s) * dim,
                static_cast<std::size_t>(dim)};
    }
};

// A model's fingerprint: K curves over a shared reference set.
struct CurveSet {
    std::string model_id;  // convenience; identity on disk is the hash
    std::uint64_t model_hash = 0;
    std::uint64_t refset_hash = 0;
    BaselineMode baseline = BaselineMode::zero;
    QuadratureRule rule = QuadratureRule::midpoint;
    int k = 0, steps = 0, dim = 0;
    std::vector<float> data;  // K x S x D

    std::span<const float> curve_point(int ki, int s) const {
        return {data.data() +
                    (static_cast<std::size_t>(ki) * steps + s) * dim,
                static_cast<std::size_t>(dim)};
    }
};

struct CurveOptions {
    int steps = 64;
    BaselineMode baseline = BaselineMode::zero;
    int jobs = 1;
};

// g(t_s) = (1/S) * sum_{j<=s} F(x0 + ((j-1/2)/S)(x1-x0)); accumulation in
// f64, storage f32. x0 == x1 degenerates to g(t_s) = t_s * F(x0).
GifCurve extract_curve(const GradientField& f, std::span<const float> x0,
                       std::span<const float> x1, int steps);

// One curve per reference point. Zero baseline by default; random baselines
// are a pure function of (refset hash, curve index), so fingerprints over
// the same reference set stay comparable.
CurveSet fingerprint(const Model& m, const ReferenceSet& refs,
                     const CurveOptions& opt, OutputTransform ot = {});
CurveSet fingerprint_field(const GradientField& f, std::uint64_t model_hash,
                           const std::string& model_id, const ReferenceSet& refs,
                           const CurveOptions& opt);

// |sum_i (x1_i - x0_i) g_i(1) - (M(x1) - M(x0))|: the path-integral
// completeness defect at t = 1.
double completeness_residual(const GradientField& f, const GifCurve& c);

// Fingerprint file ("MGIF"): magic, version u16, model hash u64, refset
// hash u64, baseline u8, K u32, S u32, D u32, quadrature u8, K*S*D f32
// little-endian, CRC32.
void save_curveset(const CurveSet& cs, const std::filesystem::path& path);
CurveSet load_curveset(const std::filesystem::path& path,
                       const std::string& model_id = "");

}  // namespace mgif
