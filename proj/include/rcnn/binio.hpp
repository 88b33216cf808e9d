#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rcnn/errors.hpp"

namespace rcnn {

// Little-endian binary IO with byte-offset tracking so corrupt files can be
// reported precisely.
class BinWriter {
public:
    explicit BinWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open for writing: " + path);
        path_ = path;
    }

    void u8(std::uint8_t v) { put(&v, 1); }
    void u16(std::uint16_t v) {
        std::uint8_t b[2] = {std::uint8_t(v), std::uint8_t(v >> 8)};
        put(b, 2);
    }
    void u32(std::uint32_t v) {
        std::uint8_t b[4] = {std::uint8_t(v), std::uint8_t(v >> 8), std::uint8_t(v >> 16),
                             std::uint8_t(v >> 24)};
        put(b, 4);
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void bytes(const void* p, std::size_t n) { put(p, n); }

    std::size_t offset() const { return offset_; }

    void close() {
        out_.close();
        if (!out_) throw IoError("write failed: " + path_);
    }

private:
    void put(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failed at byte " + std::to_string(offset_) + ": " + path_);
        offset_ += n;
    }
    std::ofstream out_;
    std::size_t offset_ = 0;
    std::string path_;
};

class BinReader {
public:
    explicit BinReader(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open for reading: " + path);
        in.seekg(0, std::ios::end);
        data_.resize(static_cast<std::size_t>(in.tellg()));
        in.seekg(0);
        in.read(reinterpret_cast<char*>(data_.data()),
                static_cast<std::streamsize>(data_.size()));
        if (!in) throw IoError("read failed: " + path);
    }

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        const std::uint8_t* b = take(2);
        return std::uint16_t(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        const std::uint8_t* b = take(4);
        return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
               (std::uint32_t(b[3]) << 24);
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    const std::uint8_t* raw(std::size_t n) { return take(n); }

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return data_.size() - offset_; }

    void expect_end(const char* what) const {
        if (offset_ != data_.size())
            throw FormatError(std::string(what) + ": " + std::to_string(remaining()) +
                                  " trailing bytes",
                              offset_);
    }

private:
    const std::uint8_t* take(std::size_t n) {
        if (offset_ + n > data_.size())
            throw FormatError("truncated: need " + std::to_string(n) + " bytes, have " +
                                  std::to_string(data_.size() - offset_),
                              offset_);
        const std::uint8_t* p = data_.data() + offset_;
        offset_ += n;
        return p;
    }
    std::vector<std::uint8_t> data_;
    std::size_t offset_ = 0;
};

// CRC-32 (IEEE 802.3 polynomial, reflected).
inline std::uint32_t crc32(const void* data, std::size_t n, std::uint32_t seed = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

}  // namespace rcnn
