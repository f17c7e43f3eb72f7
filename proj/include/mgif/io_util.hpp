#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mgif {

// Little-endian append helpers for the binary artifact formats.
struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f32_array(std::span<const float> v);
    void magic(const char m[4]);
};

struct ByteReader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    void f32_array(std::span<float> out);
    void expect_magic(const char m[4], const char* what);
    std::size_t remaining() const { return bytes.size() - pos; }

private:
    void need(std::size_t n);
};

std::uint32_t crc32_ieee(std::span<const std::uint8_t> data);

// FNV-1a, the artifact content/id hash.
std::uint64_t fnv1a64(std::span<const std::uint8_t> data);
std::uint64_t fnv1a64(const std::string& s);

// Serialize with trailing CRC32 and write via temp file + rename, so readers
// never observe a partial artifact.
void write_file_with_crc(const std::filesystem::path& path, ByteWriter&& w);

// Read whole file, verify and strip the trailing CRC32.
std::vector<std::uint8_t> read_file_with_crc(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mgif
