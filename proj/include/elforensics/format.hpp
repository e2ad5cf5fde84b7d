#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <string>

namespace elforensics {

// Shortest decimal string that round-trips to the same double.
inline std::string format_shortest(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline std::string format_fixed(double v, int decimals) {
    std::array<char, 64> buf{};
    auto [ptr, ec] =
        std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, decimals);
    return std::string(buf.data(), ptr);
}

// Fewest decimals (at least 1) that represent `step` exactly up to 1e-9.
inline int decimals_for_step(double step) {
    for (int d = 1; d < 9; ++d) {
        const double scaled = step * std::pow(10.0, d);
        if (std::abs(scaled - std::round(scaled)) < 1e-9 * std::max(1.0, scaled)) return d;
    }
    return 9;
}

}  // namespace elforensics
