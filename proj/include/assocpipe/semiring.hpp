#pragma once

#include <algorithm>
#include <limits>
#include <string_view>

namespace assocpipe {

// Numeric semiring: commutative-associative add with identity `zero`,
// associative mul with identity `one`, mul distributing over add. Entries
// equal to `zero` are structural and never stored.
struct Semiring {
    const char* name;
    double zero;
    double one;
    double (*add)(double, double);
    double (*mul)(double, double);

    static const Semiring& plus_times() {
        static const Semiring s{"plus_times", 0.0, 1.0,
                                [](double a, double b) { return a + b; },
                                [](double a, double b) { return a * b; }};
        return s;
    }

    static const Semiring& min_plus() {
        static const Semiring s{"min_plus", std::numeric_limits<double>::infinity(), 0.0,
                                [](double a, double b) { return std::min(a, b); },
                                [](double a, double b) { return a + b; }};
        return s;
    }

    static const Semiring& max_plus() {
        static const Semiring s{"max_plus", -std::numeric_limits<double>::infinity(), 0.0,
                                [](double a, double b) { return std::max(a, b); },
                                [](double a, double b) { return a + b; }};
        return s;
    }

    static const Semiring& max_min() {
        static const Semiring s{"max_min", -std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity(),
                                [](double a, double b) { return std::max(a, b); },
                                [](double a, double b) { return std::min(a, b); }};
        return s;
    }

    static const Semiring* by_name(std::string_view name) {
        for (const Semiring* s : {&plus_times(), &min_plus(), &max_plus(), &max_min()})
            if (name == s->name) return s;
        return nullptr;
    }
};

}  // namespace assocpipe
