#include "singr/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <queue>
#include <utility>

#include "singr/error.hpp"

namespace singr {

SeedSet::SeedSet(Dims dims, std::vector<std::size_t> linear_indices)
    : dims_(dims), indices_(std::move(linear_indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "seed set contains duplicates");
  }
  if (!indices_.empty() && indices_.back() >= dims_.voxels()) {
    throw Error(ErrorCode::kOutOfRange, "seed outside " + to_string(dims_));
  }
}

namespace {

std::vector<std::size_t> linearize(const Dims& dims, const std::vector<GridIndex>& indices) {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (const auto& idx : indices) {
    if (!in_bounds(idx, dims)) throw Error(ErrorCode::kOutOfRange, "seed outside " + to_string(dims));
    out.push_back(linear_index(idx, dims));
  }
  return out;
}

}  // namespace

SeedSet::SeedSet(Dims dims, const std::vector<GridIndex>& indices)
    : SeedSet(dims, linearize(dims, indices)) {}

bool SeedSet::contains(std::size_t linear) const {
  return std::binary_search(indices_.begin(), indices_.end(), linear);
}

std::vector<GridIndex> SeedSet::grid_indices() const {
  std::vector<GridIndex> out;
  out.reserve(indices_.size());
  for (auto i : indices_) out.push_back(grid_index(i, dims_));
  return out;
}

namespace {

struct Step {
  Offset offset;
  std::ptrdiff_t linear = 0;
  double spatial = 0.0;  // (1 - lambda) * spacing-scaled L1 length
};

inline double intensity_delta(std::span<const double> data, std::size_t voxels,
                              std::size_t channels, std::size_t p, std::size_t q) {
  double sum = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    sum += std::abs(data[q + c * voxels] - data[p + c * voxels]);
  }
  return sum;
}

double spatial_length(const Offset& o, const Spacing& s) {
  return std::abs(o.dx) * s.sx + std::abs(o.dy) * s.sy + std::abs(o.dz) * s.sz;
}

void check_inputs(const Volume& image, const SeedSet& seeds, double lambda, int connectivity) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "geodesic transform needs at least one seed");
  if (!(seeds.dims() == image.dims())) {
    throw Error(ErrorCode::kDimsMismatch, "seed grid " + to_string(seeds.dims()) +
                                              " does not match image " + to_string(image.dims()));
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must lie in [0, 1]");
  }
  if (!is_valid_connectivity(connectivity)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid connectivity " + std::to_string(connectivity));
  }
  if ((connectivity == 4 || connectivity == 8) && image.dims().nz > 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "planar connectivity on a grid with nz > 1 leaves slices disconnected");
  }
}

std::vector<Step> make_steps(int connectivity, const Dims& dims, const Spacing& spacing,
                             double lambda) {
  std::vector<Step> steps;
  for (const Offset& o : neighbor_offsets(connectivity)) {
    Step s;
    s.offset = o;
    s.linear = o.dx + static_cast<std::ptrdiff_t>(dims.nx) *
                          (o.dy + static_cast<std::ptrdiff_t>(dims.ny) * o.dz);
    s.spatial = (1.0 - lambda) * spatial_length(o, spacing);
    steps.push_back(s);
  }
  return steps;
}

inline bool step_valid(const Offset& o, std::size_t x, std::size_t y, std::size_t z,
                       const Dims& d) {
  if ((o.dx < 0 && x == 0) || (o.dx > 0 && x + 1 == d.nx)) return false;
  if ((o.dy < 0 && y == 0) || (o.dy > 0 && y + 1 == d.ny)) return false;
  if ((o.dz < 0 && z == 0) || (o.dz > 0 && z + 1 == d.nz)) return false;
  return true;
}

GeodesicMap empty_map(const Volume& image, const SeedSet& seeds, double lambda) {
  GeodesicMap map;
  map.dims = image.dims();
  map.spacing = image.spacing();
  map.lambda = lambda;
  map.seeds = seeds;
  map.values.assign(image.voxels(), std::numeric_limits<double>::infinity());
  for (auto s : seeds.indices()) map.values[s] = 0.0;
  return map;
}

}  // namespace

double edge_weight(const Volume& image, const GridIndex& p, const GridIndex& q, double lambda) {
  const Dims& d = image.dims();
  if (!in_bounds(p, d) || !in_bounds(q, d)) throw Error(ErrorCode::kOutOfRange, "edge endpoint out of bounds");
  const Offset o{static_cast<int>(q.x) - static_cast<int>(p.x),
                 static_cast<int>(q.y) - static_cast<int>(p.y),
                 static_cast<int>(q.z) - static_cast<int>(p.z)};
  if (std::abs(o.dx) > 1 || std::abs(o.dy) > 1 || std::abs(o.dz) > 1) {
    throw Error(ErrorCode::kInvalidArgument, "edge endpoints are not neighbours");
  }
  const double spatial = (1.0 - lambda) * spatial_length(o, image.spacing());
  if (lambda == 0.0) return spatial;
  return spatial + lambda * intensity_delta(image.values(), image.voxels(), image.channels(),
                                            linear_index(p, d), linear_index(q, d));
}

GeodesicMap geodesic_raster(const Volume& image, const SeedSet& seeds, double lambda,
                            const GeoConfig& cfg) {
  check_inputs(image, seeds, lambda, cfg.connectivity);
  if (cfg.max_pass_pairs < 1) throw Error(ErrorCode::kInvalidArgument, "max_pass_pairs must be positive");
  if (!(cfg.convergence_tol >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "convergence_tol must be >= 0");

  const Dims& d = image.dims();
  const std::size_t voxels = image.voxels();
  const std::size_t channels = image.channels();
  const auto data = image.values();
  const bool use_intensity = lambda > 0.0;

  std::vector<Step> forward, backward;
  for (const Step& s : make_steps(cfg.connectivity, d, image.spacing(), lambda)) {
    (s.linear < 0 ? forward : backward).push_back(s);
  }

  GeodesicMap map = empty_map(image, seeds, lambda);
  std::vector<double>& dist = map.values;
  std::vector<double> previous(voxels);

  auto relax = [&](std::size_t p, std::size_t x, std::size_t y, std::size_t z,
                   const std::vector<Step>& steps) {
    double best = dist[p];
    for (const Step& s : steps) {
      if (!step_valid(s.offset, x, y, z, d)) continue;
      const std::size_t q = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + s.linear);
      const double dq = dist[q];
      if (dq >= best) continue;
      double cost = s.spatial;
      if (use_intensity) cost += lambda * intensity_delta(data, voxels, channels, p, q);
      const double candidate = dq + cost;
      if (candidate < best) best = candidate;
    }
    dist[p] = best;
  };

  for (int pair = 0; pair < cfg.max_pass_pairs; ++pair) {
    std::copy(dist.begin(), dist.end(), previous.begin());

    for (std::size_t z = 0, p = 0; z < d.nz; ++z)
      for (std::size_t y = 0; y < d.ny; ++y)
        for (std::size_t x = 0; x < d.nx; ++x, ++p) relax(p, x, y, z, forward);

    for (std::size_t z = d.nz; z-- > 0;)
      for (std::size_t y = d.ny; y-- > 0;)
        for (std::size_t x = d.nx; x-- > 0;) relax(x + d.nx * (y + d.ny * z), x, y, z, backward);

    map.pass_pairs_run = pair + 1;
    double max_change = 0.0;
    for (std::size_t i = 0; i < voxels; ++i) {
      if (previous[i] == dist[i]) continue;
      max_change = std::isinf(previous[i]) ? std::numeric_limits<double>::infinity()
                                           : std::max(max_change, previous[i] - dist[i]);
    }
    if (max_change <= cfg.convergence_tol) break;
  }
  return map;
}

GeodesicMap geodesic_dijkstra(const Volume& image, const SeedSet& seeds, double lambda,
                              int connectivity) {
  check_inputs(image, seeds, lambda, connectivity);
  const Dims& d = image.dims();

  GeodesicMap map = empty_map(image, seeds, lambda);
  std::vector<double>& dist = map.values;
  std::vector<char> settled(image.voxels(), 0);

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (auto s : seeds.indices()) queue.emplace(0.0, s);

  while (!queue.empty()) {
    const auto [du, u] = queue.top();
    queue.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    const GridIndex gu = grid_index(u, d);
    for (const GridIndex& gv : neighbors(gu, d, connectivity)) {
      const std::size_t v = linear_index(gv, d);
      if (settled[v]) continue;
      const double candidate = du + edge_weight(image, gu, gv, lambda);
      if (candidate < dist[v]) {
        dist[v] = candidate;
        queue.emplace(candidate, v);
      }
    }
  }
  return map;
}

}  // namespace singr
