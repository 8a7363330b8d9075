#include "metamorph/metrics.hpp"

namespace metamorph {

namespace {

std::string fixed_point(std::uint64_t scaled, int decimals) {
    std::string digits = std::to_string(scaled);
    if (decimals == 0) {
        return digits;
    }
    if (digits.size() <= static_cast<std::size_t>(decimals)) {
        digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
    return digits;
}

std::string rounded(std::uint64_t k, std::uint64_t n, int shift, int decimals) {
    if (n == 0) {
        return fixed_point(0, decimals);
    }
    std::uint64_t scale = 1;
    for (int i = 0; i < shift; ++i) {
        scale *= 10;
    }
    // floor(k*scale/n + 1/2)
    return fixed_point((2 * k * scale + n) / (2 * n), decimals);
}

} // namespace

std::string format_ratio(std::uint64_t k, std::uint64_t n, int decimals) { return rounded(k, n, decimals, decimals); }

std::string format_percent(std::uint64_t k, std::uint64_t n, int decimals) {
    return rounded(k, n, decimals + 2, decimals);
}

} // namespace metamorph
