#pragma once

#include <cstdint>
#include <vector>

#include "dkg/image.hpp"

namespace dkg::synthetic {

/// Deterministic stand-ins for medical scans: a smooth background with a few
/// overlapping bright ellipses and light noise, replicated to RGB. Strongly
/// correlated neighbors and low entropy, like real plaintexts.
RasterImage phantom(int resolution, std::uint64_t seed);
std::vector<RasterImage> phantom_set(int count, int resolution, std::uint64_t seed);

}  // namespace dkg::synthetic
