#pragma once

#include <vector>

#include "singr/volume.hpp"

namespace singr {

struct MetricReport {
  double dice = 0.0;
  double iou = 0.0;
  double hd95 = 0.0;
};

/// Both empty -> 1, exactly one empty -> 0.
double dice(const Mask& pred, const Mask& ref);
double iou(const Mask& pred, const Mask& ref);

/// 95th percentile symmetric surface distance in mm.
///
/// Surfaces are the inner boundaries of each mask (a mask with no inner
/// boundary, i.e. one filling the whole grid, uses all of its voxels).
/// Directed distances are nearest-surface Euclidean distances between voxel
/// centres; each direction is reduced with a linearly interpolated 95th
/// percentile and the larger of the two is returned.
/// Both empty -> 0; exactly one empty -> the physical grid diagonal.
double hd95(const Mask& pred, const Mask& ref);

MetricReport evaluate_masks(const Mask& pred, const Mask& ref);

/// Linear interpolation between order statistics (numpy's default). `values` is sorted in place.
double percentile_linear(std::vector<double>& values, double q);

}  // namespace singr
