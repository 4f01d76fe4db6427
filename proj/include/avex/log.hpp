// stderr logging gated by AVEX_LOG: quiet by default, "info"/"1" for run
// progress, "debug"/"2" for per-batch detail.
#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace avex {

inline int log_level() {
    static const int lvl = [] {
        const char* e = std::getenv("AVEX_LOG");
        if (!e) return 0;
        if (std::strcmp(e, "debug") == 0 || std::strcmp(e, "2") == 0) return 2;
        if (std::strcmp(e, "info") == 0 || std::strcmp(e, "1") == 0) return 1;
        return 0;
    }();
    return lvl;
}

inline void log_at(int level, const char* fmt, ...) {
    if (log_level() < level) return;
    va_list ap;
    va_start(ap, fmt);
    std::vfprintf(stderr, fmt, ap);
    va_end(ap);
    std::fputc('\n', stderr);
}

#define AVEX_INFO(...) ::avex::log_at(1, __VA_ARGS__)
#define AVEX_DEBUG(...) ::avex::log_at(2, __VA_ARGS__)

}  // namespace avex
