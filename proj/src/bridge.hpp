#pragma once

#include <memory>

#include "metamorph/sut.hpp"

namespace metamorph::detail {

/// Samples per simulate message chunk.
inline constexpr std::size_t kBridgeChunk = 100000;

std::unique_ptr<Sut> open_bridge(const SutDescriptor &descriptor, const SutOptions &options);

} // namespace metamorph::detail
