#pragma once

#include <cstdio>
#include <string>

namespace relugd {

// 17 significant digits round-trips a double exactly.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace relugd
