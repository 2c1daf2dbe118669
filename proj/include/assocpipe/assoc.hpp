#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "semiring.hpp"
#include "value.hpp"

namespace assocpipe {

// Parallel triple lists, sorted row-major, no duplicate (row, col).
struct Triples {
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    std::vector<Value> vals;

    std::size_t size() const { return rows.size(); }
};

// Row/column selector: everything, an explicit key list, a key prefix, or an
// inclusive contiguous range.
class KeySpec {
public:
    static KeySpec all() { return KeySpec(Kind::all); }

    static KeySpec list(std::vector<std::string> keys) {
        KeySpec s(Kind::list);
        std::sort(keys.begin(), keys.end());
        s.keys_ = std::move(keys);
        return s;
    }

    static KeySpec prefix(std::string p) {
        KeySpec s(Kind::prefix);
        s.lo_ = std::move(p);
        return s;
    }

    static KeySpec range(std::string lo, std::string hi) {
        KeySpec s(Kind::range);
        s.lo_ = std::move(lo);
        s.hi_ = std::move(hi);
        return s;
    }

    bool matches(const std::string& key) const {
        switch (kind_) {
            case Kind::all:
                return true;
            case Kind::list:
                return std::binary_search(keys_.begin(), keys_.end(), key);
            case Kind::prefix:
                return key.size() >= lo_.size() && key.compare(0, lo_.size(), lo_) == 0;
            case Kind::range:
                return lo_ <= key && key <= hi_;
        }
        return false;
    }

private:
    enum class Kind { all, list, prefix, range };
    explicit KeySpec(Kind k) : kind_(k) {}

    Kind kind_;
    std::vector<std::string> keys_;
    std::string lo_, hi_;
};

// Labeled sparse 2-D array. Row and column keys are unique strings kept in
// strictly ascending byte order; entries live in a semiring. Immutable after
// construction: every operation returns a new array, so arrays are safe to
// share read-only across workers.
class AssociativeArray {
public:
    using Index = std::size_t;
    using Coord = std::pair<Index, Index>;
    using EntryMap = std::map<Coord, Value>;  // row-major iteration order

    AssociativeArray() = default;

    const std::vector<std::string>& row_keys() const { return row_keys_; }
    const std::vector<std::string>& col_keys() const { return col_keys_; }
    const EntryMap& entries() const { return entries_; }
    ValueKind value_kind() const { return kind_; }

    bool empty() const { return entries_.empty(); }
    std::size_t nnz() const { return entries_.size(); }
    const std::string& row_key(Index i) const { return row_keys_[i]; }
    const std::string& col_key(Index j) const { return col_keys_[j]; }

    std::optional<Index> row_index(const std::string& key) const {
        auto it = std::lower_bound(row_keys_.begin(), row_keys_.end(), key);
        if (it == row_keys_.end() || *it != key) return std::nullopt;
        return static_cast<Index>(it - row_keys_.begin());
    }

    std::optional<Index> col_index(const std::string& key) const {
        auto it = std::lower_bound(col_keys_.begin(), col_keys_.end(), key);
        if (it == col_keys_.end() || *it != key) return std::nullopt;
        return static_cast<Index>(it - col_keys_.begin());
    }

    std::optional<Value> at(const std::string& row, const std::string& col) const {
        auto r = row_index(row);
        auto c = col_index(col);
        if (!r || !c) return std::nullopt;
        auto it = entries_.find({*r, *c});
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool has(const std::string& row, const std::string& col) const {
        return at(row, col).has_value();
    }

    // Empty arrays compare equal regardless of value kind; an empty array has
    // no observable kind.
    friend bool operator==(const AssociativeArray& a, const AssociativeArray& b) {
        if (a.entries_.empty() && b.entries_.empty()) return true;
        return a.kind_ == b.kind_ && a.row_keys_ == b.row_keys_ &&
               a.col_keys_ == b.col_keys_ && a.entries_ == b.entries_;
    }
    friend bool operator!=(const AssociativeArray& a, const AssociativeArray& b) {
        return !(a == b);
    }

    struct NamedEntry {
        std::string row;
        std::string col;
        Value val;
    };

    // Single construction funnel: filters structural zeros, resolves (row,col)
    // collisions in input order, dedups and sorts keys, drops dangling labels.
    // `numeric_zero` is the unstorable additive identity for numeric input
    // (0 for plus_times; a semiring op passes its own).
    static AssociativeArray build(std::vector<NamedEntry> items, CollisionRule rule,
                                  ValueKind kind_hint, double numeric_zero = 0.0) {
        std::map<std::pair<std::string, std::string>, Value> resolved;
        ValueKind kind = kind_hint;
        bool kind_seen = false;
        for (auto& it : items) {
            if (!kind_seen) {
                kind = it.val.kind();
                kind_seen = true;
            } else if (it.val.kind() != kind) {
                throw type_error("mixed value kinds in one array");
            }
            if (it.val.is_number() ? it.val.num() == numeric_zero : it.val.str().empty())
                continue;
            auto key = std::make_pair(std::move(it.row), std::move(it.col));
            auto [pos, inserted] = resolved.try_emplace(std::move(key), it.val);
            if (!inserted) pos->second = resolve_collision(rule, pos->second, it.val);
        }
        // sum collisions can cancel back to zero
        for (auto it = resolved.begin(); it != resolved.end();) {
            bool zero = it->second.is_number() ? it->second.num() == numeric_zero
                                               : it->second.str().empty();
            it = zero ? resolved.erase(it) : std::next(it);
        }

        AssociativeArray out;
        out.kind_ = kind;
        std::set<std::string> rows, cols;
        for (const auto& [rc, v] : resolved) {
            rows.insert(rc.first);
            cols.insert(rc.second);
        }
        out.row_keys_.assign(rows.begin(), rows.end());
        out.col_keys_.assign(cols.begin(), cols.end());
        for (const auto& [rc, v] : resolved) {
            Index r = *out.row_index(rc.first);
            Index c = *out.col_index(rc.second);
            out.entries_.emplace(Coord{r, c}, v);
        }
        return out;
    }

private:
    std::vector<std::string> row_keys_;
    std::vector<std::string> col_keys_;
    EntryMap entries_;
    ValueKind kind_ = ValueKind::numeric;
};

inline AssociativeArray from_triples(const std::vector<std::string>& rows,
                                     const std::vector<std::string>& cols,
                                     const std::vector<Value>& vals,
                                     CollisionRule rule = CollisionRule::min) {
    if (rows.size() != cols.size() || rows.size() != vals.size())
        throw argument_error("from_triples: rows, cols, vals must have equal length");
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) items.push_back({rows[i], cols[i], vals[i]});
    return AssociativeArray::build(std::move(items), rule, ValueKind::numeric);
}

inline AssociativeArray from_triples(const std::vector<std::string>& rows,
                                     const std::vector<std::string>& cols,
                                     const std::vector<std::string>& vals,
                                     CollisionRule rule = CollisionRule::min) {
    std::vector<Value> vv;
    vv.reserve(vals.size());
    for (const auto& s : vals) vv.push_back(Value::text(s));
    return from_triples(rows, cols, vv, rule);
}

inline AssociativeArray from_triples(const std::vector<std::string>& rows,
                                     const std::vector<std::string>& cols,
                                     const std::vector<double>& vals,
                                     CollisionRule rule = CollisionRule::sum) {
    std::vector<Value> vv;
    vv.reserve(vals.size());
    for (double d : vals) vv.push_back(Value::number(d));
    return from_triples(rows, cols, vv, rule);
}

inline Triples find(const AssociativeArray& a) {
    Triples t;
    t.rows.reserve(a.nnz());
    t.cols.reserve(a.nnz());
    t.vals.reserve(a.nnz());
    for (const auto& [rc, v] : a.entries()) {
        t.rows.push_back(a.row_key(rc.first));
        t.cols.push_back(a.col_key(rc.second));
        t.vals.push_back(v);
    }
    return t;
}

namespace detail {

inline std::vector<AssociativeArray::NamedEntry> named_entries(const AssociativeArray& a) {
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(a.nnz());
    for (const auto& [rc, v] : a.entries())
        items.push_back({a.row_key(rc.first), a.col_key(rc.second), v});
    return items;
}

inline void check_same_kind(const AssociativeArray& a, const AssociativeArray& b,
                            const char* op) {
    if (!a.empty() && !b.empty() && a.value_kind() != b.value_kind())
        throw type_error(std::string(op) + ": operands have different value kinds");
}

inline void require_numeric(const AssociativeArray& a, const char* op) {
    if (!a.empty() && a.value_kind() != ValueKind::numeric)
        throw type_error(std::string(op) + ": requires a numeric array");
}

}  // namespace detail

// Key union. Entries present in one operand pass through; co-located numeric
// entries combine with semiring add, string entries by the collision rule.
inline AssociativeArray add(const AssociativeArray& a, const AssociativeArray& b,
                            CollisionRule rule = CollisionRule::min) {
    detail::check_same_kind(a, b, "add");
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.value_kind() == ValueKind::numeric) rule = CollisionRule::sum;
    auto items = detail::named_entries(a);
    auto more = detail::named_entries(b);
    items.insert(items.end(), std::make_move_iterator(more.begin()),
                 std::make_move_iterator(more.end()));
    return AssociativeArray::build(std::move(items), rule, a.value_kind());
}

// Coordinate-set difference: removes from `a` every (row, col) present in
// `b`, regardless of value.
inline AssociativeArray subtract(const AssociativeArray& a, const AssociativeArray& b) {
    detail::check_same_kind(a, b, "subtract");
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(a.nnz());
    for (const auto& [rc, v] : a.entries()) {
        const auto& row = a.row_key(rc.first);
        const auto& col = a.col_key(rc.second);
        if (!b.has(row, col)) items.push_back({row, col, v});
    }
    return AssociativeArray::build(std::move(items), CollisionRule::first, a.value_kind());
}

// Key intersection with semiring mul of co-located entries.
inline AssociativeArray element_mul(const AssociativeArray& a, const AssociativeArray& b,
                                    const Semiring& s = Semiring::plus_times()) {
    detail::require_numeric(a, "element_mul");
    detail::require_numeric(b, "element_mul");
    std::vector<AssociativeArray::NamedEntry> items;
    for (const auto& [rc, v] : a.entries()) {
        const auto& row = a.row_key(rc.first);
        const auto& col = a.col_key(rc.second);
        auto other = b.at(row, col);
        if (other) items.push_back({row, col, Value::number(s.mul(v.num(), other->num()))});
    }
    return AssociativeArray::build(std::move(items), CollisionRule::first, ValueKind::numeric,
                                   s.zero);
}

// Array multiplication. The contraction joins a's column keys with b's row
// keys by exact string match; disjoint inner keys yield an empty array.
inline AssociativeArray matmul(const AssociativeArray& a, const AssociativeArray& b,
                               const Semiring& s = Semiring::plus_times()) {
    detail::require_numeric(a, "matmul");
    detail::require_numeric(b, "matmul");
    // a column index -> b row index, where the key strings match
    std::vector<std::optional<AssociativeArray::Index>> inner(a.col_keys().size());
    for (std::size_t j = 0; j < a.col_keys().size(); ++j)
        inner[j] = b.row_index(a.col_key(j));

    std::vector<std::vector<std::pair<AssociativeArray::Index, double>>> b_rows(
        b.row_keys().size());
    for (const auto& [rc, v] : b.entries()) b_rows[rc.first].emplace_back(rc.second, v.num());

    std::map<AssociativeArray::Coord, double> acc;
    for (const auto& [rc, v] : a.entries()) {
        auto k = inner[rc.second];
        if (!k) continue;
        for (const auto& [j, w] : b_rows[*k]) {
            auto [pos, inserted] = acc.try_emplace({rc.first, j}, s.zero);
            pos->second = s.add(pos->second, s.mul(v.num(), w));
        }
    }

    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(acc.size());
    for (const auto& [rc, d] : acc)
        items.push_back({a.row_key(rc.first), b.col_key(rc.second), Value::number(d)});
    return AssociativeArray::build(std::move(items), CollisionRule::first, ValueKind::numeric,
                                   s.zero);
}

// Kronecker product; result keys concatenate operand keys around `sep`.
inline AssociativeArray kron(const AssociativeArray& a, const AssociativeArray& b,
                             const Semiring& s = Semiring::plus_times(),
                             const std::string& sep = ".") {
    detail::require_numeric(a, "kron");
    detail::require_numeric(b, "kron");
    for (const auto* keys : {&a.row_keys(), &a.col_keys(), &b.row_keys(), &b.col_keys()})
        for (const auto& k : *keys)
            if (k.find(sep) != std::string::npos)
                throw argument_error("kron: separator '" + sep + "' occurs inside key '" + k +
                                     "', labels would be ambiguous");
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(a.nnz() * b.nnz());
    for (const auto& [arc, av] : a.entries())
        for (const auto& [brc, bv] : b.entries())
            items.push_back({a.row_key(arc.first) + sep + b.row_key(brc.first),
                             a.col_key(arc.second) + sep + b.col_key(brc.second),
                             Value::number(s.mul(av.num(), bv.num()))});
    return AssociativeArray::build(std::move(items), CollisionRule::first, ValueKind::numeric,
                                   s.zero);
}

inline AssociativeArray transpose(const AssociativeArray& a) {
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(a.nnz());
    for (const auto& [rc, v] : a.entries())
        items.push_back({a.col_key(rc.second), a.row_key(rc.first), v});
    return AssociativeArray::build(std::move(items), CollisionRule::first, a.value_kind());
}

// Sub-array restricted to matching keys; labels left without entries drop.
inline AssociativeArray select(const AssociativeArray& a, const KeySpec& row_spec,
                               const KeySpec& col_spec) {
    std::vector<char> row_ok(a.row_keys().size()), col_ok(a.col_keys().size());
    for (std::size_t i = 0; i < a.row_keys().size(); ++i) row_ok[i] = row_spec.matches(a.row_key(i));
    for (std::size_t j = 0; j < a.col_keys().size(); ++j) col_ok[j] = col_spec.matches(a.col_key(j));
    std::vector<AssociativeArray::NamedEntry> items;
    for (const auto& [rc, v] : a.entries())
        if (row_ok[rc.first] && col_ok[rc.second])
            items.push_back({a.row_key(rc.first), a.col_key(rc.second), v});
    return AssociativeArray::build(std::move(items), CollisionRule::first, a.value_kind());
}

// Positional row relabeling; entries unchanged, keys re-sorted.
inline AssociativeArray put_row(const AssociativeArray& a,
                                const std::vector<std::string>& new_rows) {
    if (new_rows.size() != a.row_keys().size())
        throw argument_error("put_row: expected " + std::to_string(a.row_keys().size()) +
                             " labels, got " + std::to_string(new_rows.size()));
    std::set<std::string> uniq(new_rows.begin(), new_rows.end());
    if (uniq.size() != new_rows.size()) throw argument_error("put_row: duplicate labels");
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(a.nnz());
    for (const auto& [rc, v] : a.entries())
        items.push_back({new_rows[rc.first], a.col_key(rc.second), v});
    return AssociativeArray::build(std::move(items), CollisionRule::first, a.value_kind());
}

inline AssociativeArray put_col(const AssociativeArray& a,
                                const std::vector<std::string>& new_cols) {
    if (new_cols.size() != a.col_keys().size())
        throw argument_error("put_col: expected " + std::to_string(a.col_keys().size()) +
                             " labels, got " + std::to_string(new_cols.size()));
    std::set<std::string> uniq(new_cols.begin(), new_cols.end());
    if (uniq.size() != new_cols.size()) throw argument_error("put_col: duplicate labels");
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(a.nnz());
    for (const auto& [rc, v] : a.entries())
        items.push_back({a.row_key(rc.first), new_cols[rc.second], v});
    return AssociativeArray::build(std::move(items), CollisionRule::first, a.value_kind());
}

// Elementwise concatenation with separator; a one-element right side
// broadcasts across the left.
inline std::vector<std::string> cat_str(const std::vector<std::string>& a,
                                        const std::string& sep,
                                        const std::vector<std::string>& b) {
    if (b.size() != a.size() && b.size() != 1)
        throw argument_error("cat_str: right side must have length " +
                             std::to_string(a.size()) + " or 1");
    std::vector<std::string> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back(a[i] + sep + (b.size() == 1 ? b[0] : b[i]));
    return out;
}

// Exploded-schema transform: entry (r, c, v) becomes (r, c<sep>v, 1). The
// result is the incidence matrix of the row-to-value graph.
inline AssociativeArray val2col(const AssociativeArray& a, const std::string& sep) {
    if (sep.empty()) throw argument_error("val2col: separator must be nonempty");
    if (!a.empty() && a.value_kind() != ValueKind::text)
        throw type_error("val2col: requires a string-valued array");
    for (const auto& c : a.col_keys())
        if (c.find(sep) != std::string::npos)
            throw argument_error("val2col: separator '" + sep + "' already occurs in column '" +
                                 c + "'");
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(a.nnz());
    for (const auto& [rc, v] : a.entries())
        items.push_back(
            {a.row_key(rc.first), a.col_key(rc.second) + sep + v.str(), Value::number(1.0)});
    return AssociativeArray::build(std::move(items), CollisionRule::max, ValueKind::numeric);
}

// Inverse of val2col for well-formed inputs.
inline AssociativeArray col2val(const AssociativeArray& e, const std::string& sep) {
    if (sep.empty()) throw argument_error("col2val: separator must be nonempty");
    std::vector<std::pair<std::string, std::string>> split_cols;
    split_cols.reserve(e.col_keys().size());
    for (const auto& c : e.col_keys()) {
        std::size_t first = c.find(sep);
        if (first == std::string::npos || c.find(sep, first + sep.size()) != std::string::npos)
            throw argument_error("col2val: column '" + c + "' must contain '" + sep +
                                 "' exactly once");
        split_cols.emplace_back(c.substr(0, first), c.substr(first + sep.size()));
    }
    std::set<std::pair<std::string, std::string>> seen;  // (row, prefix)
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(e.nnz());
    for (const auto& [rc, v] : e.entries()) {
        if (!v.is_number() || v.num() != 1.0)
            throw argument_error("col2val: all entries must equal 1");
        const auto& [prefix, suffix] = split_cols[rc.second];
        if (!seen.insert({e.row_key(rc.first), prefix}).second)
            throw argument_error("col2val: row '" + e.row_key(rc.first) +
                                 "' has two columns with prefix '" + prefix + "'");
        items.push_back({e.row_key(rc.first), prefix, Value::text(suffix)});
    }
    return AssociativeArray::build(std::move(items), CollisionRule::first, ValueKind::text);
}

// dim=1 collapses rows into single row key "1"; dim=2 collapses columns into
// single column key "1". Values are semiring-add reductions.
inline AssociativeArray sum(const AssociativeArray& a, int dim,
                            const Semiring& s = Semiring::plus_times()) {
    detail::require_numeric(a, "sum");
    if (dim != 1 && dim != 2) throw argument_error("sum: dim must be 1 or 2");
    std::map<std::string, double> acc;
    for (const auto& [rc, v] : a.entries()) {
        const std::string& key = dim == 1 ? a.col_key(rc.second) : a.row_key(rc.first);
        auto [pos, inserted] = acc.try_emplace(key, s.zero);
        pos->second = s.add(pos->second, v.num());
    }
    std::vector<AssociativeArray::NamedEntry> items;
    items.reserve(acc.size());
    for (const auto& [key, d] : acc) {
        if (dim == 1)
            items.push_back({"1", key, Value::number(d)});
        else
            items.push_back({key, "1", Value::number(d)});
    }
    return AssociativeArray::build(std::move(items), CollisionRule::first, ValueKind::numeric,
                                   s.zero);
}

}  // namespace assocpipe
