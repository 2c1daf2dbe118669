#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pcap.hpp"

namespace assocpipe {

// The nine header fields extracted per packet, in the fixed TSV column order.
inline constexpr std::array<const char*, 9> kPacketFieldNames = {
    "frame.time_relative", "frame.time", "ip.dst",       "ip.len",    "ip.proto",
    "ip.src",              "tcp.dstport", "tcp.flags",   "tcp.srcport",
};

// One packet's extracted header fields. ip.* are present iff the frame is
// IPv4; tcp.* iff ip.proto is 6. Absent fields are empty strings.
struct PacketFields {
    std::string frame_time_relative;
    std::string frame_time;
    std::string ip_dst;
    std::string ip_len;
    std::string ip_proto;
    std::string ip_src;
    std::string tcp_dstport;
    std::string tcp_flags;
    std::string tcp_srcport;

    std::array<const std::string*, 9> as_row() const {
        return {&frame_time_relative, &frame_time, &ip_dst,      &ip_len,     &ip_proto,
                &ip_src,              &tcp_dstport, &tcp_flags,  &tcp_srcport};
    }

    std::size_t non_empty_count() const {
        std::size_t n = 0;
        for (const auto* f : as_row())
            if (!f->empty()) ++n;
        return n;
    }

    friend bool operator==(const PacketFields& a, const PacketFields& b) {
        auto ra = a.as_row(), rb = b.as_row();
        for (std::size_t i = 0; i < ra.size(); ++i)
            if (*ra[i] != *rb[i]) return false;
        return true;
    }
};

// Seconds since t0 with nine decimal places ("0.000000000" for the first
// packet of a capture).
inline std::string format_relative_time(const Timeval& ts, const Timeval& t0) {
    int64_t micros = (int64_t(ts.sec) - int64_t(t0.sec)) * 1000000 + int64_t(ts.usec) -
                     int64_t(t0.usec);
    const char* sign = micros < 0 ? "-" : "";
    uint64_t mag = micros < 0 ? uint64_t(-micros) : uint64_t(micros);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%llu.%09llu", sign,
                  (unsigned long long)(mag / 1000000),
                  (unsigned long long)(mag % 1000000) * 1000);
    return buf;
}

inline constexpr std::array<const char*, 12> kMonthNames = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

// Human timestamp in the capture-analyzer style, zone fixed to UTC:
// "2017 Apr 12 07:49:36.18828 UTC" (five fractional digits).
inline std::string format_frame_time(const Timeval& ts) {
    std::time_t t = static_cast<std::time_t>(ts.sec);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d %s %02d %02d:%02d:%02d.%05u UTC", tm.tm_year + 1900,
                  kMonthNames[tm.tm_mon], tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  ts.usec / 10);
    return buf;
}

// Rewrites the human frame.time into the sortable form
// "YYYY-MM-DD HH:MM:SS.fffff", whose byte order equals chronological order.
inline std::string rewrite_frame_time(const std::string& human) {
    unsigned year, day, hh, mm, ss, frac;
    char mon[4] = {0};
    if (std::sscanf(human.c_str(), "%4u %3s %2u %2u:%2u:%2u.%5u", &year, mon, &day, &hh, &mm,
                    &ss, &frac) != 7)
        throw format_error("unparseable frame.time value '" + human + "'");
    int month = -1;
    for (int i = 0; i < 12; ++i)
        if (std::string(mon) == kMonthNames[i]) month = i + 1;
    if (month < 0) throw format_error("unknown month in frame.time value '" + human + "'");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04u-%02d-%02u %02u:%02u:%02u.%05u", year, month, day, hh,
                  mm, ss, frac);
    return buf;
}

namespace detail {

inline std::string dotted_quad(const uint8_t* p) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", p[0], p[1], p[2], p[3]);
    return buf;
}

}  // namespace detail

// Parses Ethernet -> IPv4 -> TCP headers out of one frame. Non-IPv4 frames
// yield a record with only the frame.* fields; frames too short for the
// headers they advertise yield nullopt (caller counts the skip).
inline std::optional<PacketFields> extract_fields(const RawPacket& p, const Timeval& t0) {
    constexpr std::size_t kEthHeader = 14;
    constexpr uint16_t kEtherTypeIPv4 = 0x0800;
    constexpr uint8_t kProtoTcp = 6;

    PacketFields f;
    f.frame_time_relative = format_relative_time(p.ts, t0);
    f.frame_time = format_frame_time(p.ts);

    if (p.data.size() < kEthHeader) return std::nullopt;
    uint16_t ethertype = uint16_t(p.data[12]) << 8 | p.data[13];
    if (ethertype != kEtherTypeIPv4) return f;  // frame.* only

    const uint8_t* ip = p.data.data() + kEthHeader;
    std::size_t remain = p.data.size() - kEthHeader;
    if (remain < 20) return std::nullopt;
    if ((ip[0] >> 4) != 4) return std::nullopt;
    std::size_t ihl = std::size_t(ip[0] & 0x0f) * 4;
    if (ihl < 20 || remain < ihl) return std::nullopt;

    uint16_t total_len = uint16_t(ip[2]) << 8 | ip[3];
    uint8_t proto = ip[9];
    f.ip_len = std::to_string(total_len);
    f.ip_proto = std::to_string(proto);
    f.ip_src = detail::dotted_quad(ip + 12);
    f.ip_dst = detail::dotted_quad(ip + 16);

    if (proto == kProtoTcp) {
        if (remain < ihl + 20) return std::nullopt;
        const uint8_t* tcp = ip + ihl;
        f.tcp_srcport = std::to_string(uint16_t(tcp[0]) << 8 | tcp[1]);
        f.tcp_dstport = std::to_string(uint16_t(tcp[2]) << 8 | tcp[3]);
        // 12-bit flags field: reserved/NS bits from the low nibble of the
        // data-offset byte plus the flag byte proper
        unsigned flags = (unsigned(tcp[12] & 0x0f) << 8) | tcp[13];
        char buf[16];
        std::snprintf(buf, sizeof(buf), "0x%08x", flags);
        f.tcp_flags = buf;
    }
    return f;
}

// Field values may not contain the bytes the downstream formats reserve.
inline void check_field_value(const std::string& v) {
    if (v.find_first_of("|\t\n") != std::string::npos)
        throw format_error("field value '" + v + "' contains a reserved byte");
}

inline void write_tsv(const std::vector<PacketFields>& records,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < kPacketFieldNames.size(); ++i)
        out << (i ? "\t" : "") << kPacketFieldNames[i];
    out << '\n';
    for (const auto& rec : records) {
        auto row = rec.as_row();
        for (std::size_t i = 0; i < row.size(); ++i) {
            check_field_value(*row[i]);
            out << (i ? "\t" : "") << *row[i];
        }
        out << '\n';
    }
    out.close();
    if (!out) throw io_error("write to " + path.string() + " failed");
}

struct TsvFile {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_tsv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

inline TsvFile read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    TsvFile tsv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto cells = split_tsv_line(line);
        if (lineno == 1) {
            tsv.header = std::move(cells);
            continue;
        }
        if (cells.size() != tsv.header.size())
            throw format_error(path.string() + ":" + std::to_string(lineno) + ": row has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(tsv.header.size()));
        tsv.rows.push_back(std::move(cells));
    }
    if (lineno == 0)
        throw format_error(path.string() + ":1: missing header line");
    return tsv;
}

}  // namespace assocpipe
