#pragma once

#include <cstdint>
#include <ostream>

namespace hairnet {

/// Finite-difference checks of every operator and loss plus the hand-evaluated loss values.
/// Prints one line per check; returns false if any fails.
bool run_selftest(std::ostream& out, int instances = 5, std::uint64_t seed = 1);

}  // namespace hairnet
