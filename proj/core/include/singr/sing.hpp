#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "singr/boundary.hpp"
#include "singr/geodesic.hpp"
#include "singr/volume.hpp"

namespace singr {

struct SingParams {
  double lambda = 0.5;
  double delta = 0.5;
  BoundarySide side = BoundarySide::kInner;
  GeoConfig geo{};

  /// Throws Error(kInvalidArgument) unless 0 <= lambda <= 1 and 0 <= delta < 1.
  void validate() const;
};

enum SingWarning : std::uint32_t {
  kSingWarnNone = 0,
  kSingWarnEmptyMask = 1u << 0,
  kSingWarnFullMask = 1u << 1,
  kSingWarnZeroTau = 1u << 2,
};

/// Signed normalized geodesic soft labels.
///   foreground           -> [delta, 1]
///   background inside B  -> [-1, -delta]
///   background outside B -> exactly -1
struct SingMap {
  Dims dims{};
  Spacing spacing{};
  std::vector<double> values;
  double beta = 0.0;
  double tau = 0.0;
  SingParams params{};
  std::uint32_t warnings = kSingWarnNone;
};

SingMap sing_transform(const Volume& image, const Mask& mask, const SingParams& params = {});

/// One independent transform per target channel.
std::vector<SingMap> sing_transform_channels(const Volume& image, std::span<const Mask> masks,
                                             const SingParams& params = {});

/// Foreground iff value > 0; exact zeros are background.
Mask threshold_mask(std::span<const double> values, const Dims& dims, const Spacing& spacing = {});
Mask threshold_mask(const SingMap& map);

}  // namespace singr
