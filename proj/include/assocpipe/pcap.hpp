#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

// Classic libpcap container: 24-byte global header, 16-byte per-record
// headers, microsecond timestamps. Both byte orders are read transparently;
// files are always written native-magic 0xa1b2c3d4.

namespace assocpipe {

constexpr uint32_t kPcapMagic = 0xa1b2c3d4u;
constexpr uint32_t kPcapMagicSwapped = 0xd4c3b2a1u;
constexpr uint32_t kDefaultSnaplen = 65535u;
constexpr uint32_t kLinkEthernet = 1u;

struct Timeval {
    uint32_t sec = 0;
    uint32_t usec = 0;

    friend bool operator==(const Timeval& a, const Timeval& b) {
        return a.sec == b.sec && a.usec == b.usec;
    }
    friend bool operator<(const Timeval& a, const Timeval& b) {
        return a.sec != b.sec ? a.sec < b.sec : a.usec < b.usec;
    }
};

struct RawPacket {
    Timeval ts;
    std::vector<uint8_t> data;

    friend bool operator==(const RawPacket& a, const RawPacket& b) {
        return a.ts == b.ts && a.data == b.data;
    }
};

class PcapReader {
public:
    explicit PcapReader(const std::filesystem::path& path)
        : in_(path, std::ios::binary), path_(path.string()) {
        if (!in_) throw io_error("cannot open " + path_);
        uint8_t hdr[24];
        in_.read(reinterpret_cast<char*>(hdr), 24);
        if (in_.gcount() != 24)
            throw format_error(path_ + ": truncated global header at offset " +
                               std::to_string(in_.gcount()));
        uint32_t magic;
        std::memcpy(&magic, hdr, 4);
        if (magic == kPcapMagic)
            swap_ = false;
        else if (magic == kPcapMagicSwapped)
            swap_ = true;
        else
            throw format_error(path_ + ": bad magic at offset 0 (not a pcap file)");
        snaplen_ = read_u32(hdr + 16);
        link_ = read_u32(hdr + 20);
        offset_ = 24;
    }

    // Yields packets in file order; format_error names the byte offset of a
    // truncated record.
    std::optional<RawPacket> next() {
        uint8_t hdr[16];
        in_.read(reinterpret_cast<char*>(hdr), 16);
        if (in_.gcount() == 0) return std::nullopt;
        if (in_.gcount() != 16)
            throw format_error(path_ + ": truncated record header at offset " +
                               std::to_string(offset_));
        RawPacket p;
        p.ts.sec = read_u32(hdr);
        p.ts.usec = read_u32(hdr + 4);
        uint32_t incl = read_u32(hdr + 8);
        if (incl > snaplen_)
            throw format_error(path_ + ": record length " + std::to_string(incl) +
                               " exceeds snap length at offset " + std::to_string(offset_));
        p.data.resize(incl);
        in_.read(reinterpret_cast<char*>(p.data.data()), incl);
        if (static_cast<uint32_t>(in_.gcount()) != incl)
            throw format_error(path_ + ": truncated record body at offset " +
                               std::to_string(offset_ + 16));
        offset_ += 16 + incl;
        return p;
    }

    bool byte_swapped() const { return swap_; }
    uint32_t snaplen() const { return snaplen_; }
    uint32_t link_type() const { return link_; }

private:
    uint32_t read_u32(const uint8_t* p) const {
        uint32_t v;
        std::memcpy(&v, p, 4);
        return swap_ ? __builtin_bswap32(v) : v;
    }

    std::ifstream in_;
    std::string path_;
    bool swap_ = false;
    uint32_t snaplen_ = 0;
    uint32_t link_ = 0;
    uint64_t offset_ = 0;
};

class PcapWriter {
public:
    explicit PcapWriter(const std::filesystem::path& path, uint32_t snaplen = kDefaultSnaplen,
                        uint32_t link_type = kLinkEthernet, bool byte_swapped = false)
        : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()),
          swap_(byte_swapped) {
        if (!out_) throw io_error("cannot open " + path_ + " for writing");
        write_u32(swap_ ? kPcapMagicSwapped : kPcapMagic, /*raw=*/true);
        uint16_t ver[2] = {2, 4};
        if (swap_) {
            ver[0] = __builtin_bswap16(ver[0]);
            ver[1] = __builtin_bswap16(ver[1]);
        }
        out_.write(reinterpret_cast<const char*>(ver), 4);
        write_u32(0);  // thiszone
        write_u32(0);  // sigfigs
        write_u32(snaplen);
        write_u32(link_type);
    }

    void write(const RawPacket& p) {
        write_u32(p.ts.sec);
        write_u32(p.ts.usec);
        write_u32(static_cast<uint32_t>(p.data.size()));
        write_u32(static_cast<uint32_t>(p.data.size()));
        out_.write(reinterpret_cast<const char*>(p.data.data()),
                   static_cast<std::streamsize>(p.data.size()));
        payload_bytes_ += 16 + p.data.size();
    }

    // record + data bytes written after the 24-byte global header
    uint64_t payload_bytes() const { return payload_bytes_; }

    void close() {
        out_.close();
        if (!out_) throw io_error("write to " + path_ + " failed");
    }

private:
    void write_u32(uint32_t v, bool raw = false) {
        if (swap_ && !raw) v = __builtin_bswap32(v);
        out_.write(reinterpret_cast<const char*>(&v), 4);
    }

    std::ofstream out_;
    std::string path_;
    bool swap_;
    uint64_t payload_bytes_ = 0;
};

inline std::vector<RawPacket> read_pcap(const std::filesystem::path& path) {
    PcapReader reader(path);
    std::vector<RawPacket> out;
    while (auto p = reader.next()) out.push_back(std::move(*p));
    return out;
}

inline void write_pcap(const std::filesystem::path& path, const std::vector<RawPacket>& packets,
                       uint32_t snaplen = kDefaultSnaplen) {
    PcapWriter w(path, snaplen);
    for (const auto& p : packets) w.write(p);
    w.close();
}

// First record's timestamp without reading the whole file.
inline std::optional<Timeval> first_packet_time(const std::filesystem::path& path) {
    PcapReader reader(path);
    auto p = reader.next();
    if (!p) return std::nullopt;
    return p->ts;
}

// Splits a capture into standalone captures of at most max_bytes of record
// payload each (a single oversized record still goes out whole). Outputs are
// named <stem>.pcap.NNNN with a zero-padded split ID, packet order preserved.
inline std::vector<std::filesystem::path> split_pcap(
    const std::filesystem::path& input, uint64_t max_bytes,
    std::optional<std::filesystem::path> out_dir = std::nullopt) {
    if (max_bytes == 0) throw argument_error("split_pcap: max_bytes must be positive");
    std::filesystem::path dir = out_dir.value_or(input.parent_path());
    std::filesystem::create_directories(dir);
    std::string stem = input.filename().string();
    if (stem.size() > 5 && stem.ends_with(".pcap")) stem.resize(stem.size() - 5);

    PcapReader reader(input);
    std::vector<std::filesystem::path> outputs;
    std::optional<PcapWriter> writer;
    auto roll = [&] {
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), ".pcap.%04zu", outputs.size());
        auto path = dir / (stem + suffix);
        if (writer) writer->close();
        writer.emplace(path, reader.snaplen(), reader.link_type());
        outputs.push_back(path);
    };
    roll();
    while (auto p = reader.next()) {
        uint64_t record = 16 + p->data.size();
        if (writer->payload_bytes() > 0 && writer->payload_bytes() + record > max_bytes) roll();
        writer->write(*p);
    }
    writer->close();
    return outputs;
}

}  // namespace assocpipe
