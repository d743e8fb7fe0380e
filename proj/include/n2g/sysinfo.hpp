#pragma once

#include <chrono>
#include <cstdint>

namespace n2g {

/// Peak resident set size of this process in bytes (VmHWM), 0 if unavailable.
std::uint64_t peak_rss_bytes();
/// Current resident set size in bytes (VmRSS), 0 if unavailable.
std::uint64_t current_rss_bytes();
/// Resets the kernel's peak-RSS watermark to the current RSS. Returns false
/// where the kernel does not support it.
bool reset_peak_rss();

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace n2g
