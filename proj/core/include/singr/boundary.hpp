#pragma once

#include <optional>
#include <string_view>

#include "singr/geodesic.hpp"
#include "singr/volume.hpp"

namespace singr {

enum class BoundarySide { kInner, kOuter, kBoth };

std::string_view to_string(BoundarySide side) noexcept;
std::optional<BoundarySide> parse_boundary_side(std::string_view text) noexcept;

struct BoundarySet {
  SeedSet seeds;
  BoundarySide side = BoundarySide::kInner;
};

/// Voxels that face (6-neighbourhood, 4 in a plane) a voxel of the opposite class.
/// The grid border does not count as an opposite-class neighbour. Constant masks
/// yield an empty set.
BoundarySet extract_boundary(const Mask& mask, BoundarySide side = BoundarySide::kInner);

}  // namespace singr
