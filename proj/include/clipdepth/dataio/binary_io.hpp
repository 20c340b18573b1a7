#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clipdepth/errors.hpp"

namespace clipdepth {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

template <typename U>
U byteswap_if_big(U v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        U out = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xff));
        return out;
    }
}

} // namespace detail

/// Little-endian append-only encoder.
class ByteWriter {
public:
    void put_bytes(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    void put_tag(std::string_view tag) { buf_.insert(buf_.end(), tag.begin(), tag.end()); }
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u32(std::uint32_t v) { put_raw(detail::byteswap_if_big(v)); }
    void put_u64(std::uint64_t v) { put_raw(detail::byteswap_if_big(v)); }
    void put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }
    void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
    void put_f32s(std::span<const float> values) {
        for (float v : values) put_f32(v);
    }
    void put_string(std::string_view s) {
        put_u32(static_cast<std::uint32_t>(s.size()));
        put_tag(s);
    }

    const Bytes& bytes() const noexcept { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    template <typename U>
    void put_raw(U v) {
        std::uint8_t raw[sizeof(U)];
        std::memcpy(raw, &v, sizeof(U));
        buf_.insert(buf_.end(), raw, raw + sizeof(U));
    }
    Bytes buf_;
};

/// Little-endian cursor; every short read throws ParseError::truncated with the offset.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

    void expect_tag(std::string_view tag, std::string_view what) {
        need(tag.size(), what);
        if (std::memcmp(data_.data() + pos_, tag.data(), tag.size()) != 0) {
            throw ParseError(ParseError::Kind::bad_magic, pos_, std::string(what) + ": bad magic, expected \"" +
                                                                    std::string(tag) + "\"");
        }
        pos_ += tag.size();
    }
    std::uint32_t get_u32(std::string_view what) { return detail::byteswap_if_big(get_raw<std::uint32_t>(what)); }
    std::uint64_t get_u64(std::string_view what) { return detail::byteswap_if_big(get_raw<std::uint64_t>(what)); }
    float get_f32(std::string_view what) { return std::bit_cast<float>(get_u32(what)); }
    double get_f64(std::string_view what) { return std::bit_cast<double>(get_u64(what)); }
    void get_f32s(std::span<float> out, std::string_view what) {
        need(out.size() * 4, what);
        for (float& v : out) v = get_f32(what);
    }
    std::string get_string(std::string_view what, std::size_t max_len = 4096) {
        const std::size_t at = pos_;
        const std::uint32_t n = get_u32(what);
        if (n > max_len) throw ParseError(ParseError::Kind::invalid, at, std::string(what) + ": string too long");
        need(n, what);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void get_bytes(std::span<std::uint8_t> out, std::string_view what) {
        need(out.size(), what);
        std::memcpy(out.data(), data_.data() + pos_, out.size());
        pos_ += out.size();
    }

private:
    void need(std::size_t n, std::string_view what) const {
        if (remaining() < n) throw ParseError(ParseError::Kind::truncated, pos_, std::string(what) + ": truncated");
    }
    template <typename U>
    U get_raw(std::string_view what) {
        need(sizeof(U), what);
        U v;
        std::memcpy(&v, data_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline Bytes read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    Bytes data(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size))) {
        throw DataError("cannot read " + path.string());
    }
    return data;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("short write to " + path.string());
}

} // namespace clipdepth
