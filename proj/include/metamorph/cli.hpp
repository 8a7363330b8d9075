#pragma once

#include <ostream>

namespace metamorph {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPhaseFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the metamorph command line.
int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace metamorph
