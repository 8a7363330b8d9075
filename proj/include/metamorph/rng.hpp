#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace metamorph {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Deterministic stream keyed by (session seed, item id). Uniforms use the top
/// 53 bits so results do not depend on the standard library's distributions.
class Rng {
  public:
    Rng(std::uint64_t seed, std::string_view key) {
        const std::uint64_t h = fnv1a(key);
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  private:
    std::mt19937_64 engine_;
};

} // namespace metamorph
