#pragma once

#include <cstdint>
#include <string>

namespace metamorph {

/// k/n rounded half-up to `decimals` places using integer arithmetic, as text
/// ("0.63"). n = 0 yields zero.
std::string format_ratio(std::uint64_t k, std::uint64_t n, int decimals = 2);

/// 100*k/n rounded half-up to `decimals` places, as text ("64.71").
std::string format_percent(std::uint64_t k, std::uint64_t n, int decimals = 2);

} // namespace metamorph
