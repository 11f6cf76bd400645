#pragma once

#include <cstdio>
#include <string>

namespace cforge {

// Full-precision decimal that round-trips a double exactly (17 significant
// digits; integers print without a fraction).
inline std::string fmt_f64(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace cforge
