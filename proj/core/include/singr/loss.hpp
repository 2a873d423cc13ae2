#pragma once

#include <span>
#include <vector>

namespace singr {

struct LossConfig {
  double gamma = 1.0;
  double epsilon = 0.0;

  void validate() const;
};

struct LossReport {
  double loss = 0.0;
  /// Detached per-voxel sample weight.
  std::vector<double> weights;
  std::vector<double> grad_wrt_z;
  /// Chain rule through z = tanh(logit): grad_wrt_z * (1 - z^2).
  std::vector<double> grad_wrt_logit;
};

std::vector<double> tanh_map(std::span<const double> logits);

/// Order-fixed pairwise summation; result does not depend on threading.
double pairwise_sum(std::span<const double> values);

/// Focal-L1 regression loss, mean over voxels. Sample weights are treated as
/// constants in the gradient. Voxels with zero residual contribute 0 and have
/// zero gradient, which also resolves 0/0 when epsilon == 0.
LossReport focal_l1(std::span<const double> target, std::span<const double> pred,
                    const LossConfig& cfg = {});

/// Per-voxel weight used by focal_l1 (0 where the residual is 0).
double focal_l1_weight(double s, double z, const LossConfig& cfg = {});

/// mean(|S - Z| * w) with externally frozen weights.
double frozen_weight_loss(std::span<const double> target, std::span<const double> pred,
                          std::span<const double> weights);

/// Plain mean absolute / squared error with gradients in the same report layout
/// (weights are all 1).
LossReport l1_loss(std::span<const double> target, std::span<const double> pred);
LossReport l2_loss(std::span<const double> target, std::span<const double> pred);

}  // namespace singr
