#pragma once

#include <cstdio>
#include <string>

namespace posc {

// 17 significant digits: round-trip exact for 64-bit doubles.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace posc
