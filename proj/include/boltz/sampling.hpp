#pragma once

#include <cstdint>
#include <random>

#include "boltz/fields.hpp"

namespace boltz {

using Rng = std::mt19937_64;

// Sum of one to three random Maxwellians with a multiplicative cellwise ripple in [0.5, 1.5].
// Nonnegative and rapidly decaying, so every weighted norm of interest stays finite.
Field random_nonnegative_field(const VelocityGrid& grid, Rng& rng);

// Difference of two independent random nonnegative fields.
Field random_signed_field(const VelocityGrid& grid, Rng& rng);

}  // namespace boltz
