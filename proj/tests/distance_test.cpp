#include <doctest.h>

#include <cmath>

#include "mgif/distance.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace mgif;

namespace {

ReferenceSet unit_refs(int k, int d, std::uint64_t seed) {
    ReferenceSet rs;
    rs.k = k;
    rs.dim = d;
    rs.kind = SamplerKind::random;
    rs.seed = seed;
    CounterRng rng(seed, 13);
    rs.points.resize(static_cast<std::size_t>(k) * d);
    for (auto& v : rs.points) v = rng.next_uniform(0.1f, 1.0f);
    return rs;
}

CurveSet lin_fp(std::vector<float> w, const ReferenceSet& refs, int steps,
                const std::string& id) {
    const Model m = testutil::linear_model(std::move(w), 0.0f, id);
    CurveOptions opt;
    opt.steps = steps;
    return fingerprint(m, refs, opt);
}

}  // namespace

TEST_SUITE_BEGIN("distance");

TEST_CASE("identical curves give exactly zero") {
    const ReferenceSet refs = unit_refs(3, 4, 1);
    const CurveSet a = lin_fp({1.0f, 0.5f, -0.5f, 2.0f}, refs, 16, "a");
    CHECK(model_distance(a, a) == 0.0);
    for (int k = 0; k < 3; ++k) CHECK(curve_distance(a, k, a, k) == 0.0);
}

TEST_CASE("orthogonal constant fields: curve distance 1, model distance K") {
    const ReferenceSet refs = unit_refs(5, 2, 2);
    const CurveSet a = lin_fp({1.0f, 0.0f}, refs, 32, "wx");
    const CurveSet b = lin_fp({0.0f, 1.0f}, refs, 32, "wy");
    for (int k = 0; k < 5; ++k)
        CHECK(curve_distance(a, k, b, k) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model_distance(a, b) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("opposite fields give the maximal distance 2") {
    const ReferenceSet refs = unit_refs(4, 3, 3);
    const CurveSet a = lin_fp({1.0f, 2.0f, -1.0f}, refs, 16, "w");
    const CurveSet b = lin_fp({-1.0f, -2.0f, 1.0f}, refs, 16, "negw");
    for (int k = 0; k < 4; ++k)
        CHECK(curve_distance(a, k, b, k) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(model_distance(a, b) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("cosine scale invariance: d(M, c*M) ~ 0 and d(M, 3M+7) ~ 0") {
    const Model m = testutil::tanh_mlp(6, 5, 3, 404);
    const ReferenceSet refs = unit_refs(8, 6, 4);
    CurveOptions opt;
    opt.steps = 24;
    const CurveSet base = fingerprint(m, refs, opt);
    const CurveSet scaled = fingerprint(m, refs, opt, {2.5, 0.0});
    CHECK(model_distance(base, scaled) <= 1e-4);

    // shift moves the scalar output but not its gradient field
    const CurveSet affine = fingerprint(m, refs, opt, {3.0, 7.0});
    CHECK(model_distance(base, affine) <= 1e-4);
}

TEST_CASE("incomparable fingerprints are rejected with the offending ids") {
    const ReferenceSet r1 = unit_refs(3, 4, 5);
    const ReferenceSet r2 = unit_refs(3, 4, 6);
    const CurveSet a = lin_fp({1, 0, 0, 0}, r1, 16, "a");
    const CurveSet b = lin_fp({1, 0, 0, 0}, r2, 16, "b");
    CHECK_THROWS_AS(model_distance(a, b), IncomparableError);
    try {
        model_distance(a, b);
    } catch (const IncomparableError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("'a'") != std::string::npos);
        CHECK(msg.find("'b'") != std::string::npos);
    }

    const CurveSet c = lin_fp({1, 0, 0, 0}, r1, 8, "c");
    CHECK_THROWS_AS(model_distance(a, c), IncomparableError);
}

TEST_CASE("zero-gradient regions: both-null contributes 0, one-null contributes 1") {
    const ReferenceSet refs = unit_refs(1, 2, 7);
    const CurveSet zero1 = lin_fp({0.0f, 0.0f}, refs, 8, "z1");
    const CurveSet zero2 = lin_fp({0.0f, 0.0f}, refs, 8, "z2");
    CHECK(model_distance(zero1, zero2) == 0.0);

    const CurveSet live = lin_fp({1.0f, 0.0f}, refs, 8, "live");
    CHECK(model_distance(zero1, live) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("distance_matrix: mirroring, permutation, brute-force equality") {
    const ReferenceSet refs = unit_refs(4, 3, 8);
    std::vector<CurveSet> fps;
    fps.push_back(lin_fp({1.0f, 0.2f, 0.0f}, refs, 12, "m0"));
    fps.push_back(lin_fp({0.0f, 1.0f, 0.4f}, refs, 12, "m1"));
    fps.push_back(lin_fp({-1.0f, 0.3f, 0.8f}, refs, 12, "m2"));
    fps.push_back(lin_fp({0.5f, -0.5f, 0.1f}, refs, 12, "m3"));

    const DistanceMatrix dm = distance_matrix(fps, 2);
    for (int i = 0; i < 4; ++i) {
        CHECK(dm.at(i, i) == 0.0);
        for (int j = 0; j < 4; ++j) {
            CHECK(dm.at(i, j) == dm.at(j, i));  // structural symmetry, exact
            CHECK(dm.at(i, j) == model_distance(fps[static_cast<std::size_t>(i)],
                                                fps[static_cast<std::size_t>(j)]));
        }
    }

    // permuting the input permutes rows/columns identically
    std::vector<CurveSet> perm = {fps[2], fps[0], fps[3], fps[1]};
    const DistanceMatrix pm = distance_matrix(perm, 1);
    const int map[4] = {2, 0, 3, 1};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(pm.at(i, j) == dm.at(map[i], map[j]));

    // N = 2: single mirrored distance
    std::vector<CurveSet> two = {fps[0], fps[1]};
    const DistanceMatrix d2 = distance_matrix(two, 1);
    CHECK(d2.n() == 2);
    CHECK(d2.at(0, 1) == model_distance(fps[0], fps[1]));
    CHECK(d2.at(1, 0) == d2.at(0, 1));
}

TEST_CASE("to_affinity maps [0,2K] affinely onto [1,0]") {
    DistanceMatrix dm;
    dm.ids = {"a", "b"};
    dm.curves_per_model = 4;  // 2K = 8
    dm.values = {0.0, 8.0, 8.0, 0.0};
    const AffinityMatrix am = to_affinity(dm);
    CHECK(am.at(0, 0) == 1.0);
    CHECK(am.at(0, 1) == 0.0);
    dm.values = {0.0, 4.0, 4.0, 0.0};
    CHECK(to_affinity(dm).at(0, 1) == 0.5);
}

TEST_CASE("matrix csv round-trips at 9 significant digits") {
    const auto dir = testutil::temp_dir("csv");
    const std::vector<std::string> ids = {"alpha", "beta", "gamma"};
    const std::vector<double> vals = {0.0,       1.23456789, 2.000000001,
                                      1.23456789, 0.0,       0.5,
                                      2.000000001, 0.5,      0.0};
    save_matrix_csv(dir / "m.csv", ids, vals);
    const auto [rids, rvals] = load_matrix_csv(dir / "m.csv");
    REQUIRE(rids == ids);
    for (std::size_t i = 0; i < vals.size(); ++i)
        CHECK(rvals[i] == doctest::Approx(vals[i]).epsilon(1e-9));
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
