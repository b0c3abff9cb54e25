#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hairnet::io {

/// Little-endian byte writer backed by a growable buffer.
class ByteWriter {
public:
    void magic(std::string_view four_cc);
    void u32(std::uint32_t v);
    void f32(float v);
    void f32s(std::span<const float> v);
    void bytes(std::span<const std::uint8_t> v);
    void str(std::string_view s);

    const std::vector<std::uint8_t>& buffer() const { return buf_; }

    /// Writes atomically via a temporary sibling file.
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; every short read raises FormatError(Truncation).
class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> data, std::string label = {});
    static ByteReader open(const std::filesystem::path& path);

    void expect_magic(std::string_view four_cc);
    std::uint32_t u32();
    float f32();
    void f32s(std::span<float> out);
    std::vector<std::uint8_t> bytes(std::size_t n);
    std::string str();

    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_end() const;

private:
    void need(std::size_t n) const;

    std::vector<std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string label_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace hairnet::io
