// format.hpp — round-trip-exact decimal formatting shared by metadata and CSV

#pragma once

#include <cstdio>
#include <string>

namespace spinbath {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace spinbath
