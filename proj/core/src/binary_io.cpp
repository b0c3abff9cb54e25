#include "hairnet/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hairnet/errors.hpp"

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace hairnet::io {

void ByteWriter::magic(std::string_view four_cc) {
    buf_.insert(buf_.end(), four_cc.begin(), four_cc.end());
}

void ByteWriter::u32(std::uint32_t v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + 4);
}

void ByteWriter::f32(float v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + 4);
}

void ByteWriter::f32s(std::span<const float> v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size_bytes());
}

void ByteWriter::bytes(std::span<const std::uint8_t> v) { buf_.insert(buf_.end(), v.begin(), v.end()); }

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::save(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError(FormatError::Kind::Io, "cannot open for writing: " + tmp.string());
        out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw FormatError(FormatError::Kind::Io, "rename failed: " + path.string() + ": " + ec.message());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open: " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

ByteReader::ByteReader(std::vector<std::uint8_t> data, std::string label)
    : data_(std::move(data)), label_(std::move(label)) {}

ByteReader ByteReader::open(const std::filesystem::path& path) { return ByteReader(read_file(path), path.string()); }

void ByteReader::need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
        throw FormatError(FormatError::Kind::Truncation, "truncation: " + label_);
    }
}

void ByteReader::expect_magic(std::string_view four_cc) {
    need(four_cc.size());
    if (std::memcmp(data_.data() + pos_, four_cc.data(), four_cc.size()) != 0) {
        throw FormatError(FormatError::Kind::BadMagic, "bad magic: " + label_);
    }
    pos_ += four_cc.size();
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
}

float ByteReader::f32() {
    need(4);
    float v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
}

void ByteReader::f32s(std::span<float> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
}

std::vector<std::uint8_t> ByteReader::bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> v(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return v;
}

std::string ByteReader::str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
}

void ByteReader::expect_end() const {
    if (pos_ != data_.size()) {
        throw FormatError(FormatError::Kind::Invalid, "trailing bytes: " + label_);
    }
}

}  // namespace hairnet::io
