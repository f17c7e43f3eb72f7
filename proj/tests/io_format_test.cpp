#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mgif/curves.hpp"
#include "mgif/io_util.hpp"
#include "mgif/model_io.hpp"
#include "test_util.hpp"

using namespace mgif;

TEST_SUITE_BEGIN("formats");

TEST_CASE("model checkpoint round-trips bit-exactly") {
    const auto dir = testutil::temp_dir("mgmd");
    const Model m = build_model(
        "input:1x8x8,conv:4x3,relu,pool2,flatten,dense:10,tanh,dense:3", 5, "cnn");
    save_model(m, dir / "m.mgmd");
    const Model back = load_model(dir / "m.mgmd");
    CHECK(back.id == "m");
    CHECK(back.input_shape == m.input_shape);
    REQUIRE(back.layers.size() == m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        CHECK(back.layers[i].kind == m.layers[i].kind);
        CHECK(back.layers[i].out_shape == m.layers[i].out_shape);
        CHECK(back.layers[i].w.data == m.layers[i].w.data);
        CHECK(back.layers[i].b.data == m.layers[i].b.data);
    }
    // write-load-write gives identical bytes
    save_model(back, dir / "m2.mgmd");
    CHECK(read_text_file(dir / "m.mgmd") == read_text_file(dir / "m2.mgmd"));
    CHECK(model_content_hash(back) == model_content_hash(m));
    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoint bytes are rejected by checksum") {
    const auto dir = testutil::temp_dir("mgmd_bad");
    const Model m = testutil::tanh_mlp(6, 4, 2, 9);
    save_model(m, dir / "m.mgmd");
    auto bytes = read_text_file(dir / "m.mgmd");
    bytes[20] = static_cast<char>(bytes[20] ^ 0x01);
    write_text_file(dir / "bad.mgmd", bytes);
    CHECK_THROWS_AS(load_model(dir / "bad.mgmd"), IoError);
    // truncation is also caught
    write_text_file(dir / "trunc.mgmd", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_model(dir / "trunc.mgmd"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fingerprint file layout: header size arithmetic and round-trip") {
    const auto dir = testutil::temp_dir("mgif");
    const Model m = build_model("input:1x16x16,flatten,dense:4", 3, "m16");
    ReferenceSet refs;
    refs.k = 16;
    refs.dim = 256;
    refs.kind = SamplerKind::random;
    refs.seed = 1;
    CounterRng rng(2, 2);
    refs.points.resize(static_cast<std::size_t>(refs.k) * refs.dim);
    for (auto& v : refs.points) v = rng.next_float();

    CurveOptions opt;
    opt.steps = 64;
    const CurveSet cs = fingerprint(m, refs, opt);
    save_curveset(cs, dir / "m.mgif");

    // magic(4) + version(2) + model hash(8) + refset hash(8) + baseline(1)
    // + K(4) + S(4) + D(4) + quadrature(1) + payload + crc(4)
    const auto file_size = std::filesystem::file_size(dir / "m.mgif");
    const std::uintmax_t expect =
        36 + static_cast<std::uintmax_t>(16) * 64 * 256 * 4 + 4;
    CHECK(file_size == expect);

    const CurveSet back = load_curveset(dir / "m.mgif");
    CHECK(back.data == cs.data);
    CHECK(back.model_hash == cs.model_hash);
    CHECK(back.refset_hash == cs.refset_hash);
    CHECK(back.k == cs.k);
    CHECK(back.steps == cs.steps);
    CHECK(back.dim == cs.dim);

    // rerunning the fingerprint writes byte-identical files
    const CurveSet cs2 = fingerprint(m, refs, opt);
    save_curveset(cs2, dir / "m_rerun.mgif");
    CHECK(read_text_file(dir / "m.mgif") == read_text_file(dir / "m_rerun.mgif"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("atomic writes leave no temp files behind") {
    const auto dir = testutil::temp_dir("atomic");
    const Model m = testutil::tanh_mlp(3, 2, 2, 1);
    save_model(m, dir / "a.mgmd");
    int entries = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        ++entries;
        CHECK(e.path().extension() != ".tmp");
    }
    CHECK(entries == 1);
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
