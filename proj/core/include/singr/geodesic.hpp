#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "singr/volume.hpp"

namespace singr {

/// Sorted, duplicate-free set of linear voxel indices on a grid.
class SeedSet {
 public:
  SeedSet() = default;
  SeedSet(Dims dims, std::vector<std::size_t> linear_indices);
  SeedSet(Dims dims, const std::vector<GridIndex>& indices);

  const Dims& dims() const noexcept { return dims_; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  bool contains(std::size_t linear) const;

  std::vector<GridIndex> grid_indices() const;

 private:
  Dims dims_{};
  std::vector<std::size_t> indices_;
};

struct GeoConfig {
  static constexpr int kUnbounded = std::numeric_limits<int>::max();

  int connectivity = 26;
  /// Forward/backward sweep pairs; kUnbounded runs until the tolerance is met.
  int max_pass_pairs = 4;
  double convergence_tol = 1e-6;

  /// Sweeps until nothing changes; matches the Dijkstra oracle.
  static GeoConfig converged(int connectivity = 26) {
    return GeoConfig{connectivity, kUnbounded, 0.0};
  }
};

struct GeodesicMap {
  Dims dims{};
  Spacing spacing{};
  std::vector<double> values;
  double lambda = 0.0;
  SeedSet seeds;
  int pass_pairs_run = 0;
};

/// Discrete step cost between neighbours p and q:
/// (1 - lambda) * spacing-scaled L1 step + lambda * sum over channels |I(q) - I(p)|.
double edge_weight(const Volume& image, const GridIndex& p, const GridIndex& q, double lambda);

/// Unsigned geodesic distance from `seeds` by alternating raster sweeps.
GeodesicMap geodesic_raster(const Volume& image, const SeedSet& seeds, double lambda,
                            const GeoConfig& cfg = {});

/// Exact multi-source Dijkstra over the same voxel graph. Reference oracle.
GeodesicMap geodesic_dijkstra(const Volume& image, const SeedSet& seeds, double lambda,
                              int connectivity = 26);

}  // namespace singr
