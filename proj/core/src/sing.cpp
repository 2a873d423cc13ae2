#include "singr/sing.hpp"

#include <algorithm>

#include "singr/error.hpp"

namespace singr {

void SingParams::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must lie in [0, 1]");
  }
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "delta must lie in [0, 1)");
  }
}

SingMap sing_transform(const Volume& image, const Mask& mask, const SingParams& params) {
  params.validate();
  if (!(image.dims() == mask.dims())) {
    throw Error(ErrorCode::kDimsMismatch, "image dims " + to_string(image.dims()) +
                                              " do not match mask dims " + to_string(mask.dims()));
  }

  SingMap out;
  out.dims = mask.dims();
  out.spacing = mask.spacing();
  out.params = params;

  const std::size_t n = mask.voxels();
  const std::size_t fg_count = mask.count();
  if (fg_count == 0) {
    out.values.assign(n, -1.0);
    out.warnings |= kSingWarnEmptyMask;
    return out;
  }
  if (fg_count == n) {
    out.values.assign(n, 1.0);
    out.warnings |= kSingWarnFullMask;
    return out;
  }

  const BoundarySet boundary = extract_boundary(mask, params.side);
  // A non-constant mask always has a face-adjacent FG/BG pair, so the seed set is non-empty.
  const GeodesicMap spatial = geodesic_raster(image, boundary.seeds, 0.0, params.geo);
  const GeodesicMap blended = params.lambda == 0.0
                                  ? spatial
                                  : geodesic_raster(image, boundary.seeds, params.lambda, params.geo);

  double beta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) beta = std::max(beta, spatial.values[i]);
  }
  double tau = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (spatial.values[i] <= beta) tau = std::max(tau, blended.values[i]);
  }
  out.beta = beta;
  out.tau = tau;
  if (tau == 0.0) out.warnings |= kSingWarnZeroTau;

  const double delta = params.delta;
  const double scale = tau > 0.0 ? (1.0 - delta) / tau : 0.0;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (spatial.values[i] > beta) {
      out.values[i] = -1.0;
      continue;
    }
    const double sign = mask[i] ? 1.0 : -1.0;
    const double g = blended.values[i];
    // Pin the voxel attaining tau to exactly 1 instead of trusting the rounding of scale * g.
    const double magnitude = g == tau && tau > 0.0 ? 1.0 : std::min(scale * g + delta, 1.0);
    out.values[i] = sign * magnitude;
  }
  return out;
}

std::vector<SingMap> sing_transform_channels(const Volume& image, std::span<const Mask> masks,
                                             const SingParams& params) {
  std::vector<SingMap> out;
  out.reserve(masks.size());
  for (const Mask& m : masks) out.push_back(sing_transform(image, m, params));
  return out;
}

Mask threshold_mask(std::span<const double> values, const Dims& dims, const Spacing& spacing) {
  if (values.size() != dims.voxels()) {
    throw Error(ErrorCode::kDimsMismatch, "value count " + std::to_string(values.size()) +
                                              " does not match " + to_string(dims));
  }
  std::vector<std::uint8_t> bits(values.size());
  std::transform(values.begin(), values.end(), bits.begin(),
                 [](double v) { return static_cast<std::uint8_t>(v > 0.0 ? 1 : 0); });
  return Mask(dims, spacing, std::move(bits));
}

Mask threshold_mask(const SingMap& map) { return threshold_mask(map.values, map.dims, map.spacing); }

}  // namespace singr
