#include "mgif/io_util.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "mgif/errors.hpp"

namespace mgif {

void ByteWriter::u16(std::uint16_t v) {
    bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
}

void ByteWriter::f32_array(std::span<const float> v) {
    bytes.reserve(bytes.size() + v.size() * 4);
    for (float x : v) f32(x);
}

void ByteWriter::magic(const char m[4]) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(m[i]));
}

void ByteReader::need(std::size_t n) {
    if (pos + n > bytes.size()) throw IoError("truncated artifact file");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return bytes[pos++];
}

std::uint16_t ByteReader::u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                      static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
}

float ByteReader::f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void ByteReader::f32_array(std::span<float> out) {
    need(out.size() * 4);
    for (float& x : out) x = f32();
}

void ByteReader::expect_magic(const char m[4], const char* what) {
    need(4);
    if (std::memcmp(bytes.data() + pos, m, 4) != 0) {
        throw IoError(std::string("bad magic, not a ") + what + " file");
    }
    pos += 4;
}

std::uint32_t crc32_ieee(std::span<const std::uint8_t> data) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, data.data(), static_cast<uInt>(data.size())));
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void write_file_with_crc(const std::filesystem::path& path, ByteWriter&& w) {
    const std::uint32_t crc = crc32_ieee(w.bytes);
    w.u32(crc);

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for write: " + tmp.string());
        f.write(reinterpret_cast<const char*>(w.bytes.data()),
                static_cast<std::streamsize>(w.bytes.size()));
        if (!f) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::uint8_t> read_file_with_crc(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 4) throw IoError("truncated artifact file: " + path.string());
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
    bytes.resize(bytes.size() - 4);
    if (crc32_ieee(bytes) != stored) {
        throw IoError("checksum mismatch (corrupt file): " + path.string());
    }
    return bytes;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for write: " + tmp.string());
        f << text;
        if (!f) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

}  // namespace mgif
