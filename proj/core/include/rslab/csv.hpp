#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace rslab::csv {

// Shortest round-trip decimal form, locale independent.  All file output goes
// through here so that identical runs produce byte-identical artifacts.
inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    // Trim to the shortest representation that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof shorter, "%.*g", prec, x);
        double back = 0.0;
        std::sscanf(shorter, "%lf", &back);
        if (back == x) return shorter;
    }
    return buf;
}

inline void write_quoted(std::ostream& os, const std::string& s) {
    bool needs = s.find_first_of(",\"\n") != std::string::npos;
    if (!needs) {
        os << s;
        return;
    }
    os << '"';
    for (char c : s) {
        if (c == '"') os << "\"\"";
        else os << c;
    }
    os << '"';
}

} // namespace rslab::csv
