#pragma once

#include <cstdio>
#include <string>

namespace heavyclip {

inline const char* csv_version_header() { return "# heavyclip-csv v1"; }

// Deterministic shortest-round-trip-ish numeric formatting: %.17g reproduces
// the exact double on re-parse and is byte-stable across runs.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline std::string csv_num(long v) { return std::to_string(v); }
inline std::string csv_num(int v) { return std::to_string(v); }

}  // namespace heavyclip
