#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "assoc.hpp"
#include "assoc_io.hpp"
#include "errors.hpp"
#include "table_store.hpp"

// Graph queries over the ingested store. "Connections to X" means packets
// whose source or destination address equals X; the same question can be
// answered from the store (connections_to) or straight from the incidence
// matrices (query_via_array), and the two must agree exactly.

namespace assocpipe {

struct QueryResult {
    std::vector<std::string> packet_ids;  // unique, sorted
    std::vector<Cell> cells;              // the full edge-table rows of those packets
    double elapsed = 0.0;
};

inline bool valid_ipv4(const std::string& ip) {
    int octets = 0;
    std::size_t at = 0;
    while (at <= ip.size()) {
        std::size_t dot = ip.find('.', at);
        std::string part = ip.substr(at, dot == std::string::npos ? dot : dot - at);
        if (part.empty() || part.size() > 3) return false;
        for (char c : part)
            if (c < '0' || c > '9') return false;
        if (std::stoi(part) > 255) return false;
        ++octets;
        if (dot == std::string::npos) break;
        at = dot + 1;
    }
    return octets == 4;
}

// Column-oriented access, served from the transpose table where row and
// column are swapped: every (packet row, exploded column) pair whose exploded
// column starts with the prefix.
inline std::vector<Cell> scan_col(Store& store, const std::string& col_key_prefix) {
    std::vector<Cell> out;
    for (auto& c : store.table("TedgeT").scan_row_prefix(col_key_prefix))
        out.push_back({c.col, c.row, c.val});  // swap back to Tedge orientation
    return out;
}

// Packets with ip.src or ip.dst equal to `ip`, plus their full Tedge rows.
inline QueryResult connections_to(Store& store, const std::string& ip) {
    if (!valid_ipv4(ip)) throw argument_error("'" + ip + "' is not a dotted-quad IPv4 address");
    auto start = std::chrono::steady_clock::now();
    QueryResult result;
    auto& tedge_t = store.table("TedgeT");
    for (const char* direction : {"ip.src|", "ip.dst|"})
        for (auto& c : tedge_t.scan_row(direction + ip)) result.packet_ids.push_back(c.col);
    std::sort(result.packet_ids.begin(), result.packet_ids.end());
    result.packet_ids.erase(std::unique(result.packet_ids.begin(), result.packet_ids.end()),
                            result.packet_ids.end());

    auto& tedge = store.table("Tedge");
    if (result.packet_ids.size() <= 32) {
        for (const auto& id : result.packet_ids)
            for (auto& c : tedge.scan_row(id)) result.cells.push_back(std::move(c));
    } else {
        // one merged pass beats thousands of point lookups
        auto stream = tedge.scan_all();
        Cell c;
        while (stream.next(c))
            if (std::binary_search(result.packet_ids.begin(), result.packet_ids.end(), c.row))
                result.cells.push_back(std::move(c));
    }
    result.elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// k highest-degree values of a field from the degree table; ties break by
// value string ascending.
inline std::vector<std::pair<std::string, uint64_t>> top_k(Store& store,
                                                           const std::string& field,
                                                           std::size_t k) {
    std::vector<std::pair<std::string, uint64_t>> entries;
    for (const auto& c : store.table("TedgeDeg").scan_row_prefix(field + "|"))
        entries.emplace_back(c.row.substr(field.size() + 1),
                             static_cast<uint64_t>(detail::parse_decimal(c.val, "top_k")));
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (entries.size() > k) entries.resize(k);
    return entries;
}

// degree -> number of field values with that degree
inline std::map<uint64_t, uint64_t> degree_distribution(Store& store, const std::string& field) {
    std::map<uint64_t, uint64_t> hist;
    for (const auto& c : store.table("TedgeDeg").scan_row_prefix(field + "|"))
        ++hist[static_cast<uint64_t>(detail::parse_decimal(c.val, "degree_distribution"))];
    return hist;
}

// The same connections question answered in the array language: select the
// two exploded columns out of each incidence matrix and read off the rows.
inline QueryResult query_via_array(const std::vector<std::filesystem::path>& e_files,
                                   const std::string& ip) {
    if (!valid_ipv4(ip)) throw argument_error("'" + ip + "' is not a dotted-quad IPv4 address");
    auto start = std::chrono::steady_clock::now();
    QueryResult result;
    for (const auto& path : e_files) {
        AssociativeArray e = load(path);
        auto hits = select(e, KeySpec::all(),
                           KeySpec::list({"ip.src|" + ip, "ip.dst|" + ip}));
        if (hits.empty()) continue;
        auto rows = select(e, KeySpec::list(hits.row_keys()), KeySpec::all());
        for (const auto& [rc, v] : rows.entries())
            result.cells.push_back({rows.row_key(rc.first), rows.col_key(rc.second),
                                    v.to_string()});
        result.packet_ids.insert(result.packet_ids.end(), hits.row_keys().begin(),
                                 hits.row_keys().end());
    }
    std::sort(result.packet_ids.begin(), result.packet_ids.end());
    result.packet_ids.erase(std::unique(result.packet_ids.begin(), result.packet_ids.end()),
                            result.packet_ids.end());
    std::sort(result.cells.begin(), result.cells.end(), [](const Cell& a, const Cell& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    result.elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

inline void write_result_tsv(const QueryResult& result, std::ostream& out) {
    for (const auto& c : result.cells) out << c.row << '\t' << c.col << '\t' << c.val << '\n';
}

namespace detail {

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace detail

inline void write_result_jsonl(const QueryResult& result, std::ostream& out) {
    for (const auto& c : result.cells)
        out << "{\"row\":\"" << detail::json_escape(c.row) << "\",\"col\":\""
            << detail::json_escape(c.col) << "\",\"val\":\"" << detail::json_escape(c.val)
            << "\"}\n";
}

}  // namespace assocpipe
