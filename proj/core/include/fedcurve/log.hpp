#pragma once

#include <cstdio>
#include <string>

namespace fedcurve {

inline void log_warn(const std::string& msg) {
    std::fprintf(stderr, "[fedcurve] warning: %s\n", msg.c_str());
}

inline void log_info(const std::string& msg) {
    std::fprintf(stderr, "[fedcurve] %s\n", msg.c_str());
}

} // namespace fedcurve
