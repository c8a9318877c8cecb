#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace cca {

// Locale-independent decimal formatting, 17 significant digits so CSV output
// round-trips doubles exactly and is byte-identical across runs.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace cca
