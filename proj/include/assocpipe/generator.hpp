#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "gzipio.hpp"
#include "packet_fields.hpp"
#include "pcap.hpp"

// Deterministic synthetic traffic: a few heavy-hitter destination hosts over
// a uniform background, so degree distributions come out skewed. Alongside
// each capture a sidecar records exact per-(field, value) occurrence counts,
// computed from the generator's own parameter choices; pipeline output can be
// checked against it without re-parsing anything.

namespace assocpipe {

struct GenConfig {
    uint64_t packet_count = 0;
    uint64_t seed = 1;
    uint32_t host_count = 256;
    double heavy_hitter_fraction = 0.25;
    Timeval start_time{1491983376u, 188280u};  // 2017-04-12 07:49:36.188280 UTC
    uint32_t mean_gap_usec = 50;
    double tcp_fraction = 0.8;
};

// (field name, field value) -> occurrence count
using TruthCounts = std::map<std::pair<std::string, std::string>, uint64_t>;

namespace detail {

inline std::string host_ip(uint32_t index) {
    uint32_t n = index + 1;  // skip the .0.0.0 network address
    char buf[20];
    std::snprintf(buf, sizeof(buf), "10.%u.%u.%u", (n >> 16) & 0xff, (n >> 8) & 0xff, n & 0xff);
    return buf;
}

inline uint16_t ip_checksum(const uint8_t* hdr, std::size_t len) {
    uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2) sum += uint32_t(hdr[i]) << 8 | hdr[i + 1];
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<uint16_t>(~sum);
}

}  // namespace detail

inline std::string heavy_hitter_ip(const GenConfig&) { return detail::host_ip(0); }

// Builds the packet list for a config. All randomness comes from raw engine
// draws in a fixed order, so a (config, seed) pair is byte-reproducible.
inline std::vector<RawPacket> synth_packets(const GenConfig& cfg, TruthCounts* truth = nullptr) {
    if (cfg.host_count == 0) throw argument_error("synth_packets: host_count must be positive");
    std::mt19937_64 rng(cfg.seed);
    auto draw = [&rng](uint64_t n) { return static_cast<uint32_t>(rng() % n); };

    const uint32_t heavy_set = std::max<uint32_t>(1, cfg.host_count / 64);
    const auto hh_cut = static_cast<uint64_t>(cfg.heavy_hitter_fraction * 1000000.0);
    const auto tcp_cut = static_cast<uint64_t>(cfg.tcp_fraction * 1000000.0);
    const uint16_t server_ports[] = {80, 443, 53, 22, 8080};
    const uint16_t flag_choices[] = {0x010, 0x010, 0x010, 0x010, 0x010, 0x010, 0x010,
                                     0x018, 0x018, 0x002, 0x011};
    const uint16_t payload_choices[] = {0, 26, 86, 186, 486, 986, 1460};

    std::vector<RawPacket> packets;
    packets.reserve(cfg.packet_count);
    Timeval now = cfg.start_time;
    auto count = [&](const char* field, std::string value) {
        if (truth) ++(*truth)[{field, std::move(value)}];
    };

    for (uint64_t i = 0; i < cfg.packet_count; ++i) {
        if (i > 0) {
            uint64_t gap = 1 + rng() % (2ull * std::max<uint32_t>(1, cfg.mean_gap_usec));
            uint64_t usec = now.usec + gap;
            now.sec += static_cast<uint32_t>(usec / 1000000);
            now.usec = static_cast<uint32_t>(usec % 1000000);
        }

        uint32_t src = draw(cfg.host_count);
        uint32_t dst;
        if (rng() % 1000000 < hh_cut) {
            // nine of ten heavy picks hit the primary host
            if (heavy_set > 1 && rng() % 10 == 0)
                dst = 1 + draw(heavy_set - 1);
            else
                dst = 0;
        } else {
            dst = draw(cfg.host_count);
        }
        bool tcp = rng() % 1000000 < tcp_cut;
        uint16_t server = server_ports[draw(5)];
        uint16_t ephemeral = static_cast<uint16_t>(49152 + draw(16384));
        bool from_server = rng() % 2 == 0;
        uint16_t sport = from_server ? server : ephemeral;
        uint16_t dport = from_server ? ephemeral : server;
        uint16_t flags = flag_choices[draw(sizeof(flag_choices) / sizeof(flag_choices[0]))];
        uint16_t payload = payload_choices[draw(7)];
        uint16_t l4 = tcp ? 20 : 8;
        uint16_t ip_total = static_cast<uint16_t>(20 + l4 + payload);

        RawPacket p;
        p.ts = now;
        p.data.assign(14 + ip_total, 0);
        uint8_t* eth = p.data.data();
        eth[0] = 0x02;
        eth[4] = static_cast<uint8_t>(dst >> 8);
        eth[5] = static_cast<uint8_t>(dst);
        eth[6] = 0x02;
        eth[10] = static_cast<uint8_t>(src >> 8);
        eth[11] = static_cast<uint8_t>(src);
        eth[12] = 0x08;
        eth[13] = 0x00;

        uint8_t* ip = eth + 14;
        ip[0] = 0x45;
        ip[2] = static_cast<uint8_t>(ip_total >> 8);
        ip[3] = static_cast<uint8_t>(ip_total);
        ip[8] = 64;  // ttl
        ip[9] = tcp ? 6 : 17;
        uint32_t src_n = src + 1, dst_n = dst + 1;
        ip[12] = 10;
        ip[13] = static_cast<uint8_t>(src_n >> 16);
        ip[14] = static_cast<uint8_t>(src_n >> 8);
        ip[15] = static_cast<uint8_t>(src_n);
        ip[16] = 10;
        ip[17] = static_cast<uint8_t>(dst_n >> 16);
        ip[18] = static_cast<uint8_t>(dst_n >> 8);
        ip[19] = static_cast<uint8_t>(dst_n);
        uint16_t csum = detail::ip_checksum(ip, 20);
        ip[10] = static_cast<uint8_t>(csum >> 8);
        ip[11] = static_cast<uint8_t>(csum);

        uint8_t* l4p = ip + 20;
        l4p[0] = static_cast<uint8_t>(sport >> 8);
        l4p[1] = static_cast<uint8_t>(sport);
        l4p[2] = static_cast<uint8_t>(dport >> 8);
        l4p[3] = static_cast<uint8_t>(dport);
        if (tcp) {
            l4p[12] = 0x50;  // data offset 5 words
            l4p[13] = static_cast<uint8_t>(flags & 0xff);
        } else {
            uint16_t udp_len = static_cast<uint16_t>(8 + payload);
            l4p[4] = static_cast<uint8_t>(udp_len >> 8);
            l4p[5] = static_cast<uint8_t>(udp_len);
        }
        packets.push_back(std::move(p));

        count("frame.time_relative", format_relative_time(now, cfg.start_time));
        count("frame.time", format_frame_time(now));
        count("ip.dst", detail::host_ip(dst));
        count("ip.len", std::to_string(ip_total));
        count("ip.proto", tcp ? "6" : "17");
        count("ip.src", detail::host_ip(src));
        if (tcp) {
            char fbuf[16];
            std::snprintf(fbuf, sizeof(fbuf), "0x%08x", unsigned(flags));
            count("tcp.dstport", std::to_string(dport));
            count("tcp.flags", fbuf);
            count("tcp.srcport", std::to_string(sport));
        }
    }
    return packets;
}

inline void write_truth(const TruthCounts& truth, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "field\tvalue\tcount\n";
    for (const auto& [fv, n] : truth)
        out << fv.first << '\t' << fv.second << '\t' << n << '\n';
    out.close();
    if (!out) throw io_error("write to " + path.string() + " failed");
}

inline TruthCounts read_truth(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    TruthCounts truth;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) continue;
        auto cells = split_tsv_line(line);
        if (cells.size() != 3)
            throw format_error(path.string() + ":" + std::to_string(lineno) + ": expected 3 cells");
        truth[{cells[0], cells[1]}] += std::stoull(cells[2]);
    }
    return truth;
}

inline std::filesystem::path truth_path_for(const std::filesystem::path& capture) {
    std::string name = capture.filename().string();
    for (const char* suffix : {".pcap.gz", ".pcap"})
        if (name.ends_with(suffix)) {
            name.resize(name.size() - std::string(suffix).size());
            break;
        }
    return capture.parent_path() / (name + ".truth.tsv");
}

// Writes <name>.pcap.gz plus <name>.truth.tsv under dir and returns the
// capture path. Zero packet_count yields a valid header-only capture.
inline std::filesystem::path generate_capture(const GenConfig& cfg,
                                              const std::filesystem::path& dir,
                                              const std::string& name) {
    std::filesystem::create_directories(dir);
    TruthCounts truth;
    auto packets = synth_packets(cfg, &truth);
    auto raw = dir / (name + ".pcap");
    write_pcap(raw, packets);
    auto gz = gzip_compress(raw);
    std::filesystem::remove(raw);
    write_truth(truth, truth_path_for(gz));
    return gz;
}

}  // namespace assocpipe
