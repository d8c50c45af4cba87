#pragma once

#include <iosfwd>

namespace dqf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Entry point behind the `dqf` executable: simulate | compute | score | serve.
/// Messages go to `out` and `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dqf::cli
