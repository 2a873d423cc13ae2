#include "singr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "singr/error.hpp"

namespace singr {

void LossConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be non-negative");
  }
}

std::vector<double> tanh_map(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  std::transform(logits.begin(), logits.end(), out.begin(), [](double x) { return std::tanh(x); });
  return out;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

void check_pair(std::span<const double> target, std::span<const double> pred, bool bounded) {
  if (target.size() != pred.size()) {
    throw Error(ErrorCode::kDimsMismatch, "target has " + std::to_string(target.size()) +
                                              " voxels but prediction has " +
                                              std::to_string(pred.size()));
  }
  if (target.empty()) throw Error(ErrorCode::kInvalidArgument, "loss over an empty grid");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!std::isfinite(target[i]) || !std::isfinite(pred[i])) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite value at voxel " + std::to_string(i));
    }
    if (bounded && (std::abs(target[i]) > 1.0 || std::abs(pred[i]) > 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "value outside [-1, 1] at voxel " + std::to_string(i));
    }
  }
}

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

LossReport finish(std::span<const double> pred,
                  std::vector<double> weights, std::vector<double> contributions,
                  std::vector<double> grad_z) {
  LossReport r;
  r.loss = pairwise_sum(contributions) / static_cast<double>(contributions.size());
  r.grad_wrt_logit.resize(grad_z.size());
  for (std::size_t i = 0; i < grad_z.size(); ++i) {
    r.grad_wrt_logit[i] = grad_z[i] * (1.0 - pred[i] * pred[i]);
  }
  r.weights = std::move(weights);
  r.grad_wrt_z = std::move(grad_z);
  return r;
}

}  // namespace

double focal_l1_weight(double s, double z, const LossConfig& cfg) {
  const double residual = std::abs(s - z);
  if (residual == 0.0) return 0.0;
  const double exponent = s * z >= 0.0 ? cfg.gamma : 0.0;
  const double numerator = exponent == 0.0 ? 1.0 : std::pow(residual, exponent);
  return numerator / (std::max(std::abs(s), std::abs(z)) + cfg.epsilon);
}

LossReport focal_l1(std::span<const double> target, std::span<const double> pred,
                    const LossConfig& cfg) {
  cfg.validate();
  check_pair(target, pred, true);
  const std::size_t n = target.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> weights(n), contributions(n), grad_z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = focal_l1_weight(target[i], pred[i], cfg);
    const double diff = target[i] - pred[i];
    weights[i] = w;
    contributions[i] = std::abs(diff) * w;
    grad_z[i] = -sign_of(diff) * w * inv_n;
  }
  return finish(pred, std::move(weights), std::move(contributions), std::move(grad_z));
}

double frozen_weight_loss(std::span<const double> target, std::span<const double> pred,
                          std::span<const double> weights) {
  check_pair(target, pred, false);
  if (weights.size() != target.size()) throw Error(ErrorCode::kDimsMismatch, "weight count mismatch");
  std::vector<double> contributions(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    contributions[i] = std::abs(target[i] - pred[i]) * weights[i];
  }
  return pairwise_sum(contributions) / static_cast<double>(contributions.size());
}

LossReport l1_loss(std::span<const double> target, std::span<const double> pred) {
  check_pair(target, pred, false);
  const std::size_t n = target.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> contributions(n), grad_z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = target[i] - pred[i];
    contributions[i] = std::abs(diff);
    grad_z[i] = -sign_of(diff) * inv_n;
  }
  return finish(pred, std::vector<double>(n, 1.0), std::move(contributions),
                std::move(grad_z));
}

LossReport l2_loss(std::span<const double> target, std::span<const double> pred) {
  check_pair(target, pred, false);
  const std::size_t n = target.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> contributions(n), grad_z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = target[i] - pred[i];
    contributions[i] = diff * diff;
    grad_z[i] = -2.0 * diff * inv_n;
  }
  return finish(pred, std::vector<double>(n, 1.0), std::move(contributions),
                std::move(grad_z));
}

}  // namespace singr
