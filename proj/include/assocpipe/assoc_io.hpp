#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "assoc.hpp"
#include "errors.hpp"

// On-disk array format "AA01":
//   magic "AA01", u8 value kind (0 numeric, 1 string),
//   u64 row-key count, u64 col-key count, u64 entry count,
//   row keys then col keys as (u64 length, UTF-8 bytes),
//   entries in row-major sorted order as (u64 row idx, u64 col idx, value),
//   value = tag u8 0 + IEEE-754 double, or tag u8 1 + (u64 length, bytes).
// All integers little-endian.

namespace assocpipe {

namespace detail {

inline uint64_t to_le64(uint64_t v) {
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    return __builtin_bswap64(v);
#else
    return v;
#endif
}

class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path)
        : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()) {
        if (!out_) throw io_error("cannot open " + path_ + " for writing");
    }

    void bytes(const void* data, std::size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    void u8(uint8_t v) { bytes(&v, 1); }
    void u64(uint64_t v) {
        uint64_t le = to_le64(v);
        bytes(&le, 8);
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }

    void close() {
        out_.close();
        if (!out_) throw io_error("write to " + path_ + " failed");
    }

private:
    std::ofstream out_;
    std::string path_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path)
        : in_(path, std::ios::binary), path_(path.string()) {
        if (!in_) throw io_error("cannot open " + path_ + " for reading");
    }

    void bytes(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw format_error(path_ + ": truncated at offset " + std::to_string(offset_));
        offset_ += n;
    }
    uint8_t u8() {
        uint8_t v;
        bytes(&v, 1);
        return v;
    }
    uint64_t u64() {
        uint64_t le;
        bytes(&le, 8);
        return to_le64(le);
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str(uint64_t sanity_cap) {
        uint64_t before = offset_;
        uint64_t n = u64();
        if (n > sanity_cap)
            throw format_error(path_ + ": implausible string length at offset " +
                               std::to_string(before));
        std::string s(n, '\0');
        if (n) bytes(s.data(), n);
        return s;
    }

    uint64_t offset() const { return offset_; }
    const std::string& path() const { return path_; }
    bool at_eof() {
        return in_.peek() == std::ifstream::traits_type::eof();
    }

private:
    std::ifstream in_;
    std::string path_;
    uint64_t offset_ = 0;
};

}  // namespace detail

inline void save(const AssociativeArray& a, const std::filesystem::path& path) {
    detail::BinaryWriter w(path);
    w.bytes("AA01", 4);
    w.u8(static_cast<uint8_t>(a.value_kind()));
    w.u64(a.row_keys().size());
    w.u64(a.col_keys().size());
    w.u64(a.nnz());
    for (const auto& k : a.row_keys()) w.str(k);
    for (const auto& k : a.col_keys()) w.str(k);
    for (const auto& [rc, v] : a.entries()) {
        w.u64(rc.first);
        w.u64(rc.second);
        if (v.is_number()) {
            w.u8(0);
            w.f64(v.num());
        } else {
            w.u8(1);
            w.str(v.str());
        }
    }
    w.close();
}

inline AssociativeArray load(const std::filesystem::path& path) {
    constexpr uint64_t kStringCap = 1ull << 32;
    detail::BinaryReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "AA01", 4) != 0)
        throw format_error(r.path() + ": bad magic at offset 0 (not an AA01 array file)");
    uint8_t kind_byte = r.u8();
    if (kind_byte > 1)
        throw format_error(r.path() + ": bad value kind at offset 4");
    ValueKind kind = static_cast<ValueKind>(kind_byte);
    uint64_t nrows = r.u64();
    uint64_t ncols = r.u64();
    uint64_t nnz = r.u64();

    auto read_keys = [&](uint64_t count) {
        std::vector<std::string> keys;
        keys.reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            uint64_t at = r.offset();
            keys.push_back(r.str(kStringCap));
            if (i > 0 && keys[i - 1] >= keys[i])
                throw format_error(r.path() + ": keys not strictly ascending at offset " +
                                   std::to_string(at));
        }
        return keys;
    };
    std::vector<std::string> row_keys = read_keys(nrows);
    std::vector<std::string> col_keys = read_keys(ncols);

    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(nnz);
    for (uint64_t i = 0; i < nnz; ++i) {
        uint64_t at = r.offset();
        uint64_t row = r.u64();
        uint64_t col = r.u64();
        if (row >= nrows || col >= ncols)
            throw format_error(r.path() + ": entry index out of bounds at offset " +
                               std::to_string(at));
        uint8_t tag = r.u8();
        Value v;
        if (tag == 0)
            v = Value::number(r.f64());
        else if (tag == 1)
            v = Value::text(r.str(kStringCap));
        else
            throw format_error(r.path() + ": bad value tag at offset " + std::to_string(at));
        if (static_cast<ValueKind>(tag) != kind)
            throw format_error(r.path() + ": value tag disagrees with header kind at offset " +
                               std::to_string(at));
        items.push_back({row_keys[row], col_keys[col], std::move(v)});
    }
    if (!r.at_eof())
        throw format_error(r.path() + ": trailing bytes at offset " + std::to_string(r.offset()));

    auto out = AssociativeArray::build(std::move(items), CollisionRule::first, kind);
    if (out.row_keys().size() != nrows || out.col_keys().size() != ncols || out.nnz() != nnz)
        throw format_error(r.path() + ": dangling labels or duplicate entries");
    return out;
}

}  // namespace assocpipe
