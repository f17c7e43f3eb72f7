#include "mgif/model_io.hpp"

#include "mgif/io_util.hpp"

namespace mgif {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'M', 'D'};
constexpr std::uint16_t kVersion = 1;

ByteWriter serialize(const Model& m) {
    ByteWriter w;
    w.magic(kMagic);
    w.u16(kVersion);
    w.u16(static_cast<std::uint16_t>(m.layers.size() + 1));

    w.u8(static_cast<std::uint8_t>(LayerKind::input));
    w.u8(static_cast<std::uint8_t>(m.input_shape.size()));
    for (int e : m.input_shape) w.u32(static_cast<std::uint32_t>(e));
    w.u32(0);

    for (const auto& l : m.layers) {
        w.u8(static_cast<std::uint8_t>(l.kind));
        w.u8(static_cast<std::uint8_t>(l.out_shape.size()));
        for (int e : l.out_shape) w.u32(static_cast<std::uint32_t>(e));
        w.u32(static_cast<std::uint32_t>(l.ksize));
        if (l.has_params()) {
            w.f32_array(l.w.data);
            w.f32_array(l.b.data);
        }
    }
    return w;
}

}  // namespace

void save_model(const Model& m, const std::filesystem::path& path) {
    write_file_with_crc(path, serialize(m));
}

std::uint64_t model_content_hash(const Model& m) {
    const ByteWriter w = serialize(m);
    return fnv1a64(w.bytes);
}

Model load_model(const std::filesystem::path& path, const std::string& id) {
    const auto bytes = read_file_with_crc(path);
    ByteReader r{bytes};
    r.expect_magic(kMagic, "model checkpoint");
    const auto version = r.u16();
    if (version != kVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    const int count = r.u16();
    if (count < 1) throw IoError("checkpoint without input record");

    Model m;
    m.id = id.empty() ? path.stem().string() : id;

    std::vector<int> cur;
    for (int i = 0; i < count; ++i) {
        const auto kind = static_cast<LayerKind>(r.u8());
        const int rank = r.u8();
        std::vector<int> extents(rank);
        for (int& e : extents) {
            e = static_cast<int>(r.u32());
            if (e <= 0) throw IoError("non-positive extent in checkpoint");
        }
        const int meta = static_cast<int>(r.u32());

        if (i == 0) {
            if (kind != LayerKind::input)
                throw IoError("first checkpoint record must be the input shape");
            m.input_shape = extents;
            cur = extents;
            continue;
        }

        Layer l;
        l.kind = kind;
        l.out_shape = extents;
        switch (kind) {
            case LayerKind::dense: {
                if (extents.size() != 1 || cur.size() != 1)
                    throw IoError("dense layer with non-flat shape");
                l.w = Tensor::zeros({extents[0], cur[0]});
                l.b = Tensor::zeros({extents[0]});
                r.f32_array(l.w.data);
                r.f32_array(l.b.data);
                break;
            }
            case LayerKind::conv2d: {
                if (extents.size() != 3 || cur.size() != 3 || meta <= 0 || meta % 2 == 0)
                    throw IoError("malformed conv layer record");
                l.ksize = meta;
                l.w = Tensor::zeros({extents[0], cur[0], meta, meta});
                l.b = Tensor::zeros({extents[0]});
                r.f32_array(l.w.data);
                r.f32_array(l.b.data);
                break;
            }
            case LayerKind::relu:
            case LayerKind::tanh_act:
                if (extents != cur) throw IoError("activation layer changes shape");
                break;
            case LayerKind::maxpool2:
                if (cur.size() != 3 || extents.size() != 3 ||
                    extents[0] != cur[0] || extents[1] != cur[1] / 2 ||
                    extents[2] != cur[2] / 2)
                    throw IoError("malformed pool layer record");
                break;
            case LayerKind::flatten:
                if (extents.size() != 1 ||
                    shape_size(extents) != shape_size(cur))
                    throw IoError("malformed flatten record");
                break;
            case LayerKind::input:
                throw IoError("duplicate input record");
        }
        cur = extents;
        m.layers.push_back(std::move(l));
    }
    if (r.remaining() != 0) throw IoError("trailing bytes in checkpoint");
    if (m.layers.empty()) throw IoError("checkpoint has no layers");
    return m;
}

}  // namespace mgif
