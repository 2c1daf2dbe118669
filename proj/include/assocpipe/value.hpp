#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <utility>

#include "errors.hpp"

namespace assocpipe {

enum class ValueKind : uint8_t { numeric = 0, text = 1 };

// Renders a double the way num2str would: integral values print without a
// decimal point, everything else with the shortest digit string that parses
// back to the same bits.
inline std::string format_number(double v) {
    if (std::isfinite(v) && std::nearbyint(v) == v && std::fabs(v) <= 9.007199254740992e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// Tagged scalar stored in an associative array: a 64-bit float or a string.
// One array holds one kind; the additive identities (0, "") are unstorable.
class Value {
public:
    Value() = default;

    static Value number(double v) {
        Value out;
        out.kind_ = ValueKind::numeric;
        out.num_ = v;
        return out;
    }

    static Value text(std::string s) {
        Value out;
        out.kind_ = ValueKind::text;
        out.str_ = std::move(s);
        return out;
    }

    ValueKind kind() const { return kind_; }
    bool is_number() const { return kind_ == ValueKind::numeric; }

    double num() const {
        if (kind_ != ValueKind::numeric) throw type_error("value is not numeric");
        return num_;
    }

    const std::string& str() const {
        if (kind_ != ValueKind::text) throw type_error("value is not a string");
        return str_;
    }

    // True for the unstorable identity of the value's kind.
    bool is_additive_zero() const {
        return kind_ == ValueKind::numeric ? num_ == 0.0 : str_.empty();
    }

    std::string to_string() const {
        return kind_ == ValueKind::numeric ? format_number(num_) : str_;
    }

    friend bool operator==(const Value& a, const Value& b) {
        if (a.kind_ != b.kind_) return false;
        return a.kind_ == ValueKind::numeric ? a.num_ == b.num_ : a.str_ == b.str_;
    }
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

    // Ordering used by the min/max collision rules. Numerics order by value,
    // strings by raw bytes.
    friend bool operator<(const Value& a, const Value& b) {
        if (a.kind_ != b.kind_) throw type_error("cannot order values of different kinds");
        return a.kind_ == ValueKind::numeric ? a.num_ < b.num_ : a.str_ < b.str_;
    }

private:
    ValueKind kind_ = ValueKind::numeric;
    double num_ = 0.0;
    std::string str_;
};

// Resolution when construction or addition sees two values at one (row, col).
// min/max/first are idempotent; sum is numeric-only.
enum class CollisionRule { min, max, first, sum };

inline Value resolve_collision(CollisionRule rule, const Value& current, const Value& incoming) {
    switch (rule) {
        case CollisionRule::min:
            return incoming < current ? incoming : current;
        case CollisionRule::max:
            return current < incoming ? incoming : current;
        case CollisionRule::first:
            return current;
        case CollisionRule::sum:
            if (!current.is_number() || !incoming.is_number())
                throw type_error("collision rule 'sum' requires numeric values");
            return Value::number(current.num() + incoming.num());
    }
    throw argument_error("unknown collision rule");
}

inline const char* collision_rule_name(CollisionRule rule) {
    switch (rule) {
        case CollisionRule::min: return "min";
        case CollisionRule::max: return "max";
        case CollisionRule::first: return "first";
        case CollisionRule::sum: return "sum";
    }
    return "?";
}

}  // namespace assocpipe
