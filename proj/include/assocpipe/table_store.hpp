#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "assoc.hpp"
#include "errors.hpp"

// Embedded sorted (row, column) -> value store: an in-memory write buffer
// plus immutable sorted runs on disk, merged at read time. Tables may carry a
// decimal-string-sum combiner, in which case the visible value of a cell is
// the decimal sum of everything ever put there; without one, the newest put
// wins. Layout: <store>/<table>/run-NNNN.srt + MANIFEST.
//
// Concurrency contract: any number of concurrent writers and readers per
// table. Each put() batch is atomic; a scan sees exactly the batches that
// completed before it began (snapshots are taken under the table lock; run
// files are immutable once written, and stay readable through their open
// descriptors even after compaction unlinks them). flush() and compact()
// never change scan results. There is no write-ahead log: a crash can lose
// the unflushed buffer, which is acceptable because pipeline tasks are
// retryable.

namespace assocpipe {

enum class Combiner { none, decimal_sum };

inline const char* combiner_name(Combiner c) {
    return c == Combiner::none ? "none" : "sum";
}

struct Cell {
    std::string row;
    std::string col;
    std::string val;

    friend bool operator==(const Cell& a, const Cell& b) {
        return a.row == b.row && a.col == b.col && a.val == b.val;
    }
};

namespace detail {

inline long long parse_decimal(const std::string& s, const char* context) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || s.empty() || end != s.c_str() + s.size())
        throw argument_error(std::string(context) + ": '" + s + "' is not a decimal integer");
    return v;
}

inline void check_table_key(const std::string& s) {
    for (char c : s)
        if (c == '\0' || c == '\t' || c == '\n')
            throw argument_error("table key '" + s + "' contains a reserved byte");
}

constexpr char kRunMagic[4] = {'S', 'R', 'T', '1'};
constexpr uint64_t kIndexStride = 256;

inline void run_write_u64(std::ofstream& out, uint64_t v) {
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    v = __builtin_bswap64(v);
#endif
    out.write(reinterpret_cast<const char*>(&v), 8);
}

inline void run_write_str(std::ofstream& out, const std::string& s) {
    run_write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

// Sorted-run file: magic, u64 cell count, length-prefixed cells in (row, col)
// order, then a sparse index (every 256th cell) and a footer so range scans
// can seek instead of replaying the whole file.
inline void write_run(const std::filesystem::path& path,
                      const std::map<std::pair<std::string, std::string>, std::string>& cells) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out.write(kRunMagic, 4);
    run_write_u64(out, cells.size());
    std::vector<std::pair<std::pair<std::string, std::string>, uint64_t>> index;
    uint64_t ordinal = 0;
    for (const auto& [rc, v] : cells) {
        if (ordinal % kIndexStride == 0)
            index.emplace_back(rc, static_cast<uint64_t>(out.tellp()));
        run_write_str(out, rc.first);
        run_write_str(out, rc.second);
        run_write_str(out, v);
        ++ordinal;
    }
    uint64_t index_offset = static_cast<uint64_t>(out.tellp());
    for (const auto& [rc, offset] : index) {
        run_write_str(out, rc.first);
        run_write_str(out, rc.second);
        run_write_u64(out, offset);
    }
    run_write_u64(out, index_offset);
    run_write_u64(out, index.size());
    out.write(kRunMagic, 4);
    out.close();
    if (!out) throw io_error("write to " + path.string() + " failed");
}

class RunReader {
public:
    explicit RunReader(const std::filesystem::path& path)
        : in_(path, std::ios::binary), path_(path.string()) {
        if (!in_) throw io_error("cannot open run " + path_);
        char magic[4];
        in_.read(magic, 4);
        if (in_.gcount() != 4 || std::memcmp(magic, kRunMagic, 4) != 0)
            throw format_error(path_ + ": bad run magic");
        pos_ = 4;
        cell_count_ = read_u64();
        in_.seekg(-20, std::ios::end);
        pos_ = static_cast<uint64_t>(in_.tellg());
        uint64_t index_offset = read_u64();
        uint64_t index_count = read_u64();
        in_.read(magic, 4);
        if (in_.gcount() != 4 || std::memcmp(magic, kRunMagic, 4) != 0)
            throw format_error(path_ + ": bad run footer");
        cells_end_ = index_offset;
        seek(index_offset);
        index_.reserve(index_count);
        for (uint64_t i = 0; i < index_count; ++i) {
            std::string row = read_str();
            std::string col = read_str();
            uint64_t offset = read_u64();
            index_.push_back({{std::move(row), std::move(col)}, offset});
        }
        seek(12);
    }

    // Positions the cursor at the latest indexed cell not after (row, "");
    // iteration then skips the handful of cells before the target.
    void seek_to_row(const std::string& row) {
        uint64_t offset = 12;
        for (const auto& [key, off] : index_) {
            if (key.first <= row)
                offset = off;
            else
                break;
        }
        seek(offset);
    }

    bool next(Cell& out) {
        if (pos_ >= cells_end_) return false;
        out.row = read_str();
        out.col = read_str();
        out.val = read_str();
        return true;
    }

    uint64_t cell_count() const { return cell_count_; }

private:
    void seek(uint64_t offset) {
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(offset));
        pos_ = offset;
    }

    uint64_t read_u64() {
        uint64_t v;
        in_.read(reinterpret_cast<char*>(&v), 8);
        if (in_.gcount() != 8) throw format_error(path_ + ": truncated run file");
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
        v = __builtin_bswap64(v);
#endif
        pos_ += 8;
        return v;
    }

    std::string read_str() {
        uint64_t n = read_u64();
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        if (static_cast<uint64_t>(in_.gcount()) != n)
            throw format_error(path_ + ": truncated run file");
        pos_ += n;
        return s;
    }

    std::ifstream in_;
    std::string path_;
    uint64_t cell_count_ = 0;
    uint64_t cells_end_ = 0;
    uint64_t pos_ = 0;
    std::vector<std::pair<std::pair<std::string, std::string>, uint64_t>> index_;
};

}  // namespace detail

// Streaming merge over a table snapshot; yields each (row, col) once, sorted,
// with the combiner applied. Sources are ordered newest first so overwrite
// semantics fall out of source priority.
class CellStream {
public:
    bool next(Cell& out) {
        if (heap_.empty()) return false;
        out.row = heap_.top().cell.row;
        out.col = heap_.top().cell.col;
        long long acc = 0;
        bool first = true;
        while (!heap_.empty() && heap_.top().cell.row == out.row &&
               heap_.top().cell.col == out.col) {
            Entry e = heap_.top();
            heap_.pop();
            if (combiner_ == Combiner::decimal_sum)
                acc += detail::parse_decimal(e.cell.val, "combiner");
            else if (first)
                out.val = e.cell.val;
            first = false;
            advance(e.source);
        }
        if (combiner_ == Combiner::decimal_sum) out.val = std::to_string(acc);
        return true;
    }

private:
    friend class Table;

    struct Entry {
        Cell cell;
        std::size_t source;  // doubles as priority: lower is newer

        bool operator>(const Entry& o) const {
            return std::tie(cell.row, cell.col, source) >
                   std::tie(o.cell.row, o.cell.col, o.source);
        }
    };

    CellStream(Combiner combiner,
               std::map<std::pair<std::string, std::string>, std::string> buffer,
               std::vector<std::unique_ptr<detail::RunReader>> runs)
        : combiner_(combiner), buffer_(std::move(buffer)), runs_(std::move(runs)) {
        buffer_it_ = buffer_.begin();
        for (std::size_t i = 0; i <= runs_.size(); ++i) advance(i);
    }

    // source 0 is the buffer; source i >= 1 is runs_[i-1] (newest first)
    void advance(std::size_t source) {
        if (source == 0) {
            if (buffer_it_ == buffer_.end()) return;
            heap_.push({{buffer_it_->first.first, buffer_it_->first.second, buffer_it_->second},
                        0});
            ++buffer_it_;
            return;
        }
        Cell c;
        if (runs_[source - 1]->next(c)) heap_.push({std::move(c), source});
    }

    Combiner combiner_;
    std::map<std::pair<std::string, std::string>, std::string> buffer_;
    std::map<std::pair<std::string, std::string>, std::string>::const_iterator buffer_it_;
    std::vector<std::unique_ptr<detail::RunReader>> runs_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

class Table {
public:
    const std::string& name() const { return name_; }
    Combiner combiner() const { return combiner_; }

    // Atomic batch insert. On combiner tables values accumulate; otherwise a
    // re-put of a cell overwrites.
    std::size_t put(const std::vector<Cell>& batch) {
        for (const auto& c : batch) {
            detail::check_table_key(c.row);
            detail::check_table_key(c.col);
            if (combiner_ == Combiner::decimal_sum) detail::parse_decimal(c.val, "put");
        }
        std::lock_guard<std::mutex> lock(mu_);
        for (const auto& c : batch) {
            auto key = std::make_pair(c.row, c.col);
            if (combiner_ == Combiner::decimal_sum) {
                auto it = buffer_.find(key);
                if (it == buffer_.end())
                    buffer_.emplace(std::move(key), c.val);
                else
                    it->second = std::to_string(detail::parse_decimal(it->second, "combiner") +
                                                detail::parse_decimal(c.val, "combiner"));
            } else {
                buffer_[std::move(key)] = c.val;
            }
        }
        return batch.size();
    }

    // One cell per array entry; value_override reproduces putVal semantics.
    std::size_t put_array(const AssociativeArray& e,
                          std::optional<std::string> value_override = std::nullopt) {
        std::vector<Cell> batch;
        batch.reserve(e.nnz());
        for (const auto& [rc, v] : e.entries())
            batch.push_back({e.row_key(rc.first), e.col_key(rc.second),
                             value_override ? *value_override : v.to_string()});
        return put(batch);
    }

    std::vector<Cell> scan_row(const std::string& row_key) {
        return scan_range(row_key, row_key);
    }

    // Inclusive row range, sorted, combiner applied.
    std::vector<Cell> scan_range(const std::string& row_lo, const std::string& row_hi) {
        std::vector<Cell> out;
        auto stream = snapshot_from(row_lo);
        Cell c;
        while (stream.next(c)) {
            if (c.row > row_hi) break;
            if (c.row >= row_lo) out.push_back(std::move(c));
        }
        return out;
    }

    std::vector<Cell> scan_row_prefix(const std::string& prefix) {
        std::vector<Cell> out;
        auto stream = snapshot_from(prefix);
        Cell c;
        while (stream.next(c)) {
            bool is_match = c.row.size() >= prefix.size() &&
                            c.row.compare(0, prefix.size(), prefix) == 0;
            if (is_match)
                out.push_back(std::move(c));
            else if (c.row > prefix)
                break;  // sorted: past every key carrying the prefix
        }
        return out;
    }

    CellStream scan_all() { return snapshot_from(std::nullopt); }

    // Persists the buffer as a new sorted run; scan results are unchanged.
    void flush() {
        std::lock_guard<std::mutex> lock(mu_);
        if (buffer_.empty()) return;
        std::string run = next_run_name();
        detail::write_run(dir_ / run, buffer_);
        runs_.push_back(run);
        buffer_.clear();
        write_manifest();
    }

    // Folds buffer and runs into one run with combiners applied; scan results
    // are unchanged. Blocks other table operations while it works.
    void compact() {
        std::lock_guard<std::mutex> lock(mu_);
        if (runs_.empty() && buffer_.empty()) return;
        std::vector<std::string> old_runs = runs_;
        std::map<std::pair<std::string, std::string>, std::string> merged;
        for (const auto& name : runs_) {  // oldest first; later sources overwrite
            detail::RunReader reader(dir_ / name);
            Cell c;
            while (reader.next(c)) fold(merged, std::move(c));
        }
        for (auto& [key, val] : buffer_) fold(merged, {key.first, key.second, val});
        buffer_.clear();
        runs_.clear();
        if (!merged.empty()) {
            std::string run = next_run_name();
            detail::write_run(dir_ / run, merged);
            runs_.push_back(run);
        }
        write_manifest();
        for (const auto& r : old_runs) std::filesystem::remove(dir_ / r);
    }

private:
    friend class Store;

    Table(std::filesystem::path dir, std::string name, Combiner combiner)
        : dir_(std::move(dir)), name_(std::move(name)), combiner_(combiner) {}

    void fold(std::map<std::pair<std::string, std::string>, std::string>& acc, Cell c) {
        auto key = std::make_pair(std::move(c.row), std::move(c.col));
        if (combiner_ == Combiner::decimal_sum) {
            auto it = acc.find(key);
            if (it == acc.end())
                acc.emplace(std::move(key), std::move(c.val));
            else
                it->second = std::to_string(detail::parse_decimal(it->second, "combiner") +
                                            detail::parse_decimal(c.val, "combiner"));
        } else {
            acc[std::move(key)] = std::move(c.val);
        }
    }

    CellStream snapshot_from(std::optional<std::string> row_lo) {
        std::lock_guard<std::mutex> lock(mu_);
        std::map<std::pair<std::string, std::string>, std::string> buf_copy;
        if (row_lo) {
            auto it = buffer_.lower_bound({*row_lo, std::string()});
            buf_copy.insert(it, buffer_.end());
        } else {
            buf_copy = buffer_;
        }
        std::vector<std::unique_ptr<detail::RunReader>> readers;
        readers.reserve(runs_.size());
        for (auto it = runs_.rbegin(); it != runs_.rend(); ++it) {  // newest first
            auto r = std::make_unique<detail::RunReader>(dir_ / *it);
            if (row_lo) r->seek_to_row(*row_lo);
            readers.push_back(std::move(r));
        }
        return CellStream(combiner_, std::move(buf_copy), std::move(readers));
    }

    std::string next_run_name() {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "run-%04llu.srt", (unsigned long long)next_run_id_++);
        return buf;
    }

    void write_manifest() {
        auto tmp = dir_ / "MANIFEST.tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw io_error("cannot write manifest for table " + name_);
            out << "table " << name_ << '\n';
            out << "combiner " << combiner_name(combiner_) << '\n';
            out << "next_run " << next_run_id_ << '\n';
            for (const auto& r : runs_) out << "run " << r << '\n';
            out.close();
            if (!out) throw io_error("manifest write failed for table " + name_);
        }
        std::filesystem::rename(tmp, dir_ / "MANIFEST");
    }

    std::filesystem::path dir_;
    std::string name_;
    Combiner combiner_;
    std::mutex mu_;
    std::map<std::pair<std::string, std::string>, std::string> buffer_;
    std::vector<std::string> runs_;
    uint64_t next_run_id_ = 0;
};

class Store {
public:
    explicit Store(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        std::vector<std::filesystem::path> table_dirs;
        for (const auto& entry : std::filesystem::directory_iterator(dir_))
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "MANIFEST"))
                table_dirs.push_back(entry.path());
        std::sort(table_dirs.begin(), table_dirs.end());
        for (const auto& d : table_dirs) load_table(d);
    }

    // Idempotent: re-creating an existing table with the same combiner is a
    // no-op; a different combiner is a schema error.
    Table& create_table(const std::string& name, Combiner combiner) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = tables_.find(name);
        if (it != tables_.end()) {
            if (it->second->combiner() != combiner)
                throw schema_error("table " + name + " exists with combiner " +
                                   combiner_name(it->second->combiner()) + ", requested " +
                                   combiner_name(combiner));
            return *it->second;
        }
        auto dir = dir_ / name;
        std::filesystem::create_directories(dir);
        auto table = std::unique_ptr<Table>(new Table(dir, name, combiner));
        table->write_manifest();
        return *tables_.emplace(name, std::move(table)).first->second;
    }

    Table* find_table(const std::string& name) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = tables_.find(name);
        return it == tables_.end() ? nullptr : it->second.get();
    }

    Table& table(const std::string& name) {
        Table* t = find_table(name);
        if (!t) throw argument_error("no such table: " + name);
        return *t;
    }

    std::vector<std::string> table_names() {
        std::lock_guard<std::mutex> lock(mu_);
        std::vector<std::string> names;
        for (const auto& [name, t] : tables_) names.push_back(name);
        return names;
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    void load_table(const std::filesystem::path& dir) {
        auto manifest = dir / "MANIFEST";
        std::ifstream in(manifest);
        if (!in) throw io_error("cannot read " + manifest.string());
        std::string name, combiner_word, line;
        uint64_t next_run = 0;
        std::vector<std::string> runs;
        while (std::getline(in, line)) {
            std::size_t space = line.find(' ');
            if (space == std::string::npos)
                throw format_error(manifest.string() + ": malformed line '" + line + "'");
            std::string key = line.substr(0, space), rest = line.substr(space + 1);
            if (key == "table")
                name = rest;
            else if (key == "combiner")
                combiner_word = rest;
            else if (key == "next_run")
                next_run = std::stoull(rest);
            else if (key == "run")
                runs.push_back(rest);
            else
                throw format_error(manifest.string() + ": unknown key '" + key + "'");
        }
        Combiner combiner;
        if (combiner_word == "none")
            combiner = Combiner::none;
        else if (combiner_word == "sum")
            combiner = Combiner::decimal_sum;
        else
            throw schema_error(manifest.string() + ": unknown combiner '" + combiner_word + "'");
        auto table = std::unique_ptr<Table>(new Table(dir, name, combiner));
        table->runs_ = std::move(runs);
        table->next_run_id_ = next_run;
        tables_.emplace(name, std::move(table));
    }

    std::filesystem::path dir_;
    std::mutex mu_;
    std::map<std::string, std::unique_ptr<Table>> tables_;
};

// TSV dump (row, col, val per line) for oracle comparison; cells come out
// sorted with combiners applied.
inline void dump_table(Table& table, std::ostream& out) {
    auto stream = table.scan_all();
    Cell c;
    while (stream.next(c)) out << c.row << '\t' << c.col << '\t' << c.val << '\n';
}

}  // namespace assocpipe
