#pragma once

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "errors.hpp"

namespace assocpipe {

namespace detail {

struct GzFile {
    gzFile f = nullptr;
    ~GzFile() {
        if (f) gzclose(f);
    }
};

}  // namespace detail

// Compresses src into a standard gzip container (RFC 1952); the original is
// kept. Default destination appends ".gz".
inline std::filesystem::path gzip_compress(
    const std::filesystem::path& src,
    std::optional<std::filesystem::path> dst = std::nullopt) {
    std::filesystem::path out = dst.value_or(src.string() + ".gz");
    std::ifstream in(src, std::ios::binary);
    if (!in) throw io_error("cannot open " + src.string());
    detail::GzFile gz;
    gz.f = gzopen(out.string().c_str(), "wb6");
    if (!gz.f) throw io_error("cannot open " + out.string() + " for writing");
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        std::streamsize n = in.gcount();
        if (n == 0) break;
        if (gzwrite(gz.f, buf, static_cast<unsigned>(n)) != n)
            throw io_error("gzip write to " + out.string() + " failed");
    }
    if (gzclose(gz.f) != Z_OK) {
        gz.f = nullptr;
        throw io_error("gzip close of " + out.string() + " failed");
    }
    gz.f = nullptr;
    return out;
}

// Inflates src; the compressed original is kept. Default destination strips
// a trailing ".gz". Bad CRCs or malformed streams raise format_error.
inline std::filesystem::path gzip_uncompress(
    const std::filesystem::path& src,
    std::optional<std::filesystem::path> dst = std::nullopt) {
    std::filesystem::path out;
    if (dst) {
        out = *dst;
    } else {
        std::string name = src.string();
        if (!name.ends_with(".gz"))
            throw argument_error(name + ": expected a .gz suffix");
        out = name.substr(0, name.size() - 3);
    }
    detail::GzFile gz;
    gz.f = gzopen(src.string().c_str(), "rb");
    if (!gz.f) throw io_error("cannot open " + src.string());
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream sink(out, std::ios::binary | std::ios::trunc);
    if (!sink) throw io_error("cannot open " + out.string() + " for writing");
    char buf[1 << 16];
    for (;;) {
        int n = gzread(gz.f, buf, sizeof(buf));
        if (n < 0) {
            int errnum = 0;
            const char* msg = gzerror(gz.f, &errnum);
            throw format_error(src.string() + ": gzip integrity error: " +
                               (msg ? msg : "unknown"));
        }
        if (n == 0) break;
        sink.write(buf, n);
    }
    // gzclose_r reports trailing CRC/length mismatches
    int rc = gzclose_r(gz.f);
    gz.f = nullptr;
    if (rc != Z_OK) throw format_error(src.string() + ": gzip integrity error on close");
    sink.close();
    if (!sink) throw io_error("write to " + out.string() + " failed");
    return out;
}

}  // namespace assocpipe
