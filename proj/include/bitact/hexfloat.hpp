#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include "bitact/common.hpp"

namespace bitact {

/// Doubles travel through text files as C hexfloats so that every file
/// round-trips bit-exactly.
inline std::string to_hexfloat(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", x);
    return buf;
}

inline double from_hexfloat(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw IngestionError("malformed hexfloat: " + s);
    return v;
}

}  // namespace bitact
