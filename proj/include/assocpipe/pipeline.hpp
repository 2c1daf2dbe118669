#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "assoc.hpp"
#include "assoc_io.hpp"
#include "errors.hpp"
#include "generator.hpp"
#include "gzipio.hpp"
#include "packet_fields.hpp"
#include "pcap.hpp"
#include "table_store.hpp"

// The six-stage capture-processing pipeline:
//   1 uncompress  <data>/<f>.pcap.gz            -> <work>/<domain>/<f>.pcap
//   2 split       <f>.pcap                      -> <f>/<f>.pcap.NNNN
//   3 parse       <f>.pcap.NNNN                 -> <f>.pcap.NNNN.tsv
//   4 sort        .tsv                          -> .tsv.A.bin   (dense array)
//   5 sparse      .tsv.A.bin                    -> .tsv.A.bin.E.bin
//   6 ingest      .E.bin                        -> Tedge / TedgeT / TedgeDeg
// Stages run one after another; within a stage, file tasks are dealt
// round-robin to a fixed set of workers. Tasks within a stage touch disjoint
// outputs, so workers need no coordination beyond the table store.

namespace assocpipe {

struct PipelineConfig {
    std::filesystem::path data_dir;
    std::filesystem::path work_dir;
    std::filesystem::path store_dir;
    uint64_t split_size = 5 * 1024 * 1024;
    unsigned workers = 1;
    std::vector<int> stages = {1, 2, 3, 4, 5, 6};
    uint64_t seed = 1;  // passed through to `generate`
};

struct FileTask {
    int stage = 0;
    std::filesystem::path input;
    std::filesystem::path output;   // primary output (stage 2: output directory)
    std::string file_id;            // original capture stem
    std::string split_name;         // e.g. "cap.pcap.0003" (stages 3-6)
    Timeval t0;                     // first packet time of the original capture
};

struct TimingRecord {
    int stage = 0;
    unsigned workers = 0;
    double seconds = 0.0;  // wall clock: read + operate + write, per stage
    uint64_t bytes_in = 0;
    uint64_t bytes_out = 0;
    uint64_t files = 0;
    uint64_t parse_skips = 0;
};

struct PipelineReport {
    std::vector<TimingRecord> records;
    bool ok = true;
    std::string error;
};

inline void validate(const PipelineConfig& cfg) {
    if (cfg.split_size == 0) throw argument_error("split_size must be positive");
    if (cfg.workers == 0) throw argument_error("workers must be at least 1");
    if (cfg.stages.empty()) throw argument_error("no stages requested");
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        if (cfg.stages[i] < 1 || cfg.stages[i] > 6)
            throw argument_error("stage " + std::to_string(cfg.stages[i]) + " out of range");
        if (i > 0 && cfg.stages[i] != cfg.stages[i - 1] + 1)
            throw argument_error("stages must be contiguous from the first requested");
    }
}

// <data>/mawi -> "mawi"; trailing slashes ignored, bare paths fall back to
// "data". Mirrors the dataDOM path component of the on-disk layout.
inline std::string pipeline_domain(const PipelineConfig& cfg) {
    std::filesystem::path p = cfg.data_dir;
    if (p.filename().empty()) p = p.parent_path();
    std::string name = p.filename().string();
    return name.empty() || name == "." || name == "/" ? "data" : name;
}

inline std::filesystem::path domain_dir(const PipelineConfig& cfg) {
    return cfg.work_dir / pipeline_domain(cfg);
}

// Uncompresses one .pcap.gz into the work tree; a previously produced output
// is left alone so re-runs are cheap and idempotent.
inline std::filesystem::path step1_uncompress(const FileTask& task) {
    if (std::filesystem::exists(task.output)) return task.output;
    return gzip_uncompress(task.input, task.output);
}

// Splits one uncompressed capture into its own subdirectory, at most
// split_size bytes of records per piece.
inline std::vector<std::filesystem::path> step2_split(const FileTask& task,
                                                      uint64_t split_size) {
    return split_pcap(task.input, split_size, task.output);
}

// Parses one split capture into a TSV of the nine header fields. Times are
// relative to the original capture's first packet, which task carries as t0;
// frames too short for their headers are skipped and counted.
inline std::filesystem::path step3_parse(const FileTask& task, uint64_t* skipped = nullptr) {
    PcapReader reader(task.input);
    std::vector<PacketFields> records;
    uint64_t skips = 0;
    while (auto p = reader.next()) {
        auto fields = extract_fields(*p, task.t0);
        if (fields)
            records.push_back(std::move(*fields));
        else
            ++skips;
    }
    write_tsv(records, task.output);
    if (skipped) *skipped += skips;
    return task.output;
}

// Converts one TSV into a sorted string-valued associative array: row keys
// are zero-padded packet ordinals, the frame.time column is rewritten into
// its sortable form via the subtract-then-add replacement idiom, and rows are
// then relabeled "<ordinal>.<splitname>.A.mat" so packet IDs are globally
// unique.
inline std::filesystem::path step4_sort(const FileTask& task) {
    TsvFile tsv = read_tsv(task.input);
    std::vector<std::string> rows, cols, vals;
    for (std::size_t i = 0; i < tsv.rows.size(); ++i) {
        char ordinal[16];
        std::snprintf(ordinal, sizeof(ordinal), "%07zu", i + 1);
        for (std::size_t j = 0; j < tsv.header.size(); ++j) {
            if (tsv.rows[i][j].empty()) continue;
            rows.emplace_back(ordinal);
            cols.push_back(tsv.header[j]);
            vals.push_back(tsv.rows[i][j]);
        }
    }
    AssociativeArray a = from_triples(rows, cols, vals);
    auto time_col = select(a, KeySpec::all(), KeySpec::list({"frame.time"}));
    if (!time_col.empty()) {
        Triples t = find(time_col);
        std::vector<std::string> rewritten;
        rewritten.reserve(t.size());
        for (const auto& v : t.vals) rewritten.push_back(rewrite_frame_time(v.str()));
        AssociativeArray at = from_triples(t.rows, t.cols, rewritten);
        a = add(subtract(a, at), at);
    }
    a = put_row(a, cat_str(a.row_keys(), ".", {task.split_name + ".A.mat"}));
    save(a, task.output);
    return task.output;
}

// Explodes one dense array into the incidence-matrix form E = val2col(A, "|").
inline std::filesystem::path step5_sparse(const FileTask& task) {
    save(val2col(load(task.input), "|"), task.output);
    return task.output;
}

// Ingests one incidence matrix: every E entry into Tedge with value "1", the
// transposed coordinates into TedgeT, and E's column sums into the TedgeDeg
// accumulator. A per-task applied-marker under the store directory makes
// retries and stage re-runs exact no-ops, so degrees never double-count.
inline void step6_ingest(const FileTask& task, Store& store) {
    auto marker_dir = store.dir() / "applied";
    auto marker = marker_dir / (task.file_id + "." + task.split_name + ".ingested");
    if (std::filesystem::exists(marker)) return;
    AssociativeArray e = load(task.input);
    if (!e.empty()) {
        store.table("Tedge").put_array(e, "1");
        store.table("TedgeT").put_array(transpose(e), "1");
        AssociativeArray edeg = put_col(sum(transpose(e), 2), {"degree"});
        store.table("TedgeDeg").put_array(edeg);
        store.table("Tedge").flush();
        store.table("TedgeT").flush();
        store.table("TedgeDeg").flush();
    }
    std::filesystem::create_directories(marker_dir);
    std::ofstream(marker) << "ok\n";
}

namespace detail {

inline bool is_split_file(const std::string& name) {
    auto at = name.rfind(".pcap.");
    if (at == std::string::npos) return false;
    std::string digits = name.substr(at + 6);
    if (digits.empty()) return false;
    for (char c : digits)
        if (c < '0' || c > '9') return false;
    return true;
}

inline std::vector<std::filesystem::path> sorted_files_with_suffix(
    const std::filesystem::path& dir, const std::string& suffix) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename().string().ends_with(suffix))
            out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

// Original-capture subdirectories of the domain dir, with their t0.
struct CaptureTree {
    std::string file_id;
    std::filesystem::path split_dir;
    Timeval t0;
};

inline std::vector<CaptureTree> capture_trees(const PipelineConfig& cfg) {
    std::vector<CaptureTree> out;
    for (const auto& pcap : sorted_files_with_suffix(domain_dir(cfg), ".pcap")) {
        CaptureTree tree;
        tree.file_id = pcap.filename().string();
        tree.file_id.resize(tree.file_id.size() - 5);  // strip .pcap
        tree.split_dir = pcap.parent_path() / tree.file_id;
        tree.t0 = first_packet_time(pcap).value_or(Timeval{});
        out.push_back(std::move(tree));
    }
    return out;
}

}  // namespace detail

inline std::vector<FileTask> enumerate_tasks(const PipelineConfig& cfg, int stage) {
    std::vector<FileTask> tasks;
    auto domain = domain_dir(cfg);
    if (stage == 1) {
        for (const auto& gz : detail::sorted_files_with_suffix(cfg.data_dir, ".pcap.gz")) {
            FileTask t;
            t.stage = 1;
            t.input = gz;
            t.file_id = gz.filename().string();
            t.file_id.resize(t.file_id.size() - 8);  // strip .pcap.gz
            t.output = domain / (t.file_id + ".pcap");
            tasks.push_back(std::move(t));
        }
        return tasks;
    }
    for (const auto& tree : detail::capture_trees(cfg)) {
        if (stage == 2) {
            FileTask t;
            t.stage = 2;
            t.input = domain / (tree.file_id + ".pcap");
            t.output = tree.split_dir;
            t.file_id = tree.file_id;
            tasks.push_back(std::move(t));
            continue;
        }
        const char* suffix = stage == 3   ? ""
                             : stage == 4 ? ".tsv"
                             : stage == 5 ? ".tsv.A.bin"
                                          : ".tsv.A.bin.E.bin";
        for (const auto& f :
             detail::sorted_files_with_suffix(tree.split_dir, std::string(suffix))) {
            std::string name = f.filename().string();
            std::string base = name.substr(0, name.size() - std::string(suffix).size());
            if (!detail::is_split_file(base)) continue;
            FileTask t;
            t.stage = stage;
            t.input = f;
            t.file_id = tree.file_id;
            t.split_name = base;
            t.t0 = tree.t0;
            if (stage == 3)
                t.output = f.parent_path() / (base + ".tsv");
            else if (stage == 4)
                t.output = f.parent_path() / (base + ".tsv.A.bin");
            else if (stage == 5)
                t.output = f.parent_path() / (base + ".tsv.A.bin.E.bin");
            tasks.push_back(std::move(t));
        }
    }
    return tasks;
}

namespace detail {

inline uint64_t file_size_or_zero(const std::filesystem::path& p) {
    std::error_code ec;
    auto n = std::filesystem::file_size(p, ec);
    return ec ? 0 : n;
}

template <typename Fn>
inline TimingRecord execute_stage(const PipelineConfig& cfg, int stage,
                                  const std::vector<FileTask>& tasks, Fn&& fn,
                                  std::vector<std::string>& errors) {
    std::atomic<uint64_t> bytes_in{0}, bytes_out{0}, skips{0};
    std::mutex err_mu;
    auto start = std::chrono::steady_clock::now();
    unsigned workers = cfg.workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < tasks.size(); i += workers) {
                try {
                    bytes_in += file_size_or_zero(tasks[i].input);
                    uint64_t task_skips = 0;
                    auto outputs = fn(tasks[i], &task_skips);
                    skips += task_skips;
                    for (const auto& o : outputs) bytes_out += file_size_or_zero(o);
                } catch (const std::exception& ex) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    errors.push_back("stage " + std::to_string(stage) + ": " +
                                     tasks[i].input.string() + ": " + ex.what());
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    TimingRecord rec;
    rec.stage = stage;
    rec.workers = workers;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.bytes_in = bytes_in;
    rec.bytes_out = bytes_out;
    rec.files = tasks.size();
    rec.parse_skips = skips;
    return rec;
}

}  // namespace detail

// Runs the requested stages in order with a stage barrier between them. Any
// task failure finishes the current stage, then aborts with a partial report.
// Final store contents are independent of the worker count.
inline PipelineReport run(const PipelineConfig& cfg) {
    validate(cfg);
    PipelineReport report;
    std::optional<Store> store;
    if (std::count(cfg.stages.begin(), cfg.stages.end(), 6)) {
        store.emplace(cfg.store_dir);
        store->create_table("Tedge", Combiner::none);
        store->create_table("TedgeT", Combiner::none);
        store->create_table("TedgeDeg", Combiner::decimal_sum);
    }
    std::filesystem::create_directories(domain_dir(cfg));

    using Paths = std::vector<std::filesystem::path>;
    for (int stage : cfg.stages) {
        auto tasks = enumerate_tasks(cfg, stage);
        std::vector<std::string> errors;
        auto dispatch = [&](const FileTask& task, uint64_t* skips) -> Paths {
            switch (task.stage) {
                case 1: return {step1_uncompress(task)};
                case 2: return step2_split(task, cfg.split_size);
                case 3: return {step3_parse(task, skips)};
                case 4: return {step4_sort(task)};
                case 5: return {step5_sparse(task)};
                case 6: step6_ingest(task, *store); return {};
            }
            throw argument_error("bad stage");
        };
        report.records.push_back(detail::execute_stage(cfg, stage, tasks, dispatch, errors));
        if (!errors.empty()) {
            report.ok = false;
            report.error = errors.front();
            return report;
        }
    }
    return report;
}

// Timing report CSV, one row per executed (stage, run).
inline void write_timing_csv(const std::vector<TimingRecord>& records,
                             const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "stage,workers,seconds,bytes_in,bytes_out,files\n";
    for (const auto& r : records)
        out << r.stage << ',' << r.workers << ',' << r.seconds << ',' << r.bytes_in << ','
            << r.bytes_out << ',' << r.files << '\n';
}

}  // namespace assocpipe
