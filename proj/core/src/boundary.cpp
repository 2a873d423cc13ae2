#include "singr/boundary.hpp"


namespace singr {

std::string_view to_string(BoundarySide side) noexcept {
  switch (side) {
    case BoundarySide::kInner: return "inner";
    case BoundarySide::kOuter: return "outer";
    case BoundarySide::kBoth: return "both";
  }
  return "inner";
}

std::optional<BoundarySide> parse_boundary_side(std::string_view text) noexcept {
  if (text == "inner") return BoundarySide::kInner;
  if (text == "outer") return BoundarySide::kOuter;
  if (text == "both") return BoundarySide::kBoth;
  return std::nullopt;
}

BoundarySet extract_boundary(const Mask& mask, BoundarySide side) {
  const Dims& d = mask.dims();
  const auto bits = mask.bits();
  const std::size_t sx = 1, sy = d.nx, sz = d.nx * d.ny;

  std::vector<std::size_t> members;
  for (std::size_t z = 0, p = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      for (std::size_t x = 0; x < d.nx; ++x, ++p) {
        const bool fg = bits[p] != 0;
        if (fg && side == BoundarySide::kOuter) continue;
        if (!fg && side == BoundarySide::kInner) continue;

        bool faces_other = false;
        auto probe = [&](bool valid, std::size_t q) {
          if (valid && (bits[q] != 0) != fg) faces_other = true;
        };
        probe(x > 0, p - sx);
        probe(x + 1 < d.nx, p + sx);
        probe(y > 0, p - sy);
        probe(y + 1 < d.ny, p + sy);
        probe(z > 0, p - sz);
        probe(z + 1 < d.nz, p + sz);
        if (faces_other) members.push_back(p);
      }
    }
  }
  return BoundarySet{SeedSet(d, std::move(members)), side};
}

}  // namespace singr
