#include "n2g/sysinfo.hpp"

#include <fstream>
#include <string>

namespace n2g {

namespace {

std::uint64_t status_kib(const char* key) {
    std::ifstream in("/proc/self/status");
    std::string line;
    const std::string prefix = std::string(key) + ":";
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) return std::stoull(line.substr(prefix.size()));
    }
    return 0;
}

} // namespace

std::uint64_t peak_rss_bytes() { return status_kib("VmHWM") * 1024; }

std::uint64_t current_rss_bytes() { return status_kib("VmRSS") * 1024; }

bool reset_peak_rss() {
    std::ofstream out("/proc/self/clear_refs");
    if (!out) return false;
    out << "5";
    out.flush();
    return static_cast<bool>(out);
}

} // namespace n2g
