#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "singr/loss.hpp"
#include "singr/metrics.hpp"
#include "singr/sing.hpp"
#include "singr/volume.hpp"

namespace singr {

/// Blurred noisy ellipse images with their pre-blur ground-truth masks.
struct SyntheticDataset {
  std::uint64_t seed = 0;
  std::vector<Volume> images;
  std::vector<Mask> masks;

  std::size_t size() const noexcept { return images.size(); }
};

inline constexpr std::size_t kSyntheticSide = 64;

SyntheticDataset gen_synthetic(std::uint64_t seed, std::size_t n);

/// Per-pixel regressor over a k x k intensity patch:
///   logit = w2 . tanh(W1 * (patch - 0.5) + b1) + b2
/// Patches are clamped at the image border. Parameters are laid out as
/// W1 (input-major, k*k x hidden), b1, w2, b2.
class PatchModel {
 public:
  PatchModel(int patch = 7, int hidden = 32);

  int patch() const noexcept { return patch_; }
  int hidden() const noexcept { return hidden_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  void init(std::uint64_t seed);

  /// Logits for every voxel of a single-channel image, patches taken in-plane.
  /// When `hidden_cache` is given it receives the hidden activations for backward().
  std::vector<double> forward(const Volume& image, std::vector<double>* hidden_cache = nullptr) const;

  /// Accumulates d(objective)/d(theta) into `grad` given d(objective)/d(logit).
  /// `hidden_cache` must come from forward() on the same image and parameters, or be null.
  void backward(const Volume& image, std::span<const double> grad_logit, std::span<double> grad,
                const std::vector<double>* hidden_cache = nullptr) const;

 private:
  std::size_t w1_offset() const noexcept { return 0; }
  std::size_t b1_offset() const noexcept;
  std::size_t w2_offset() const noexcept;
  std::size_t b2_offset() const noexcept;
  void gather_patch(const Volume& image, std::size_t x, std::size_t y, std::size_t z,
                    std::span<double> out) const;
  void hidden_layer(std::span<const double> patch, std::span<double> hidden) const;

  int patch_;
  int hidden_;
  std::vector<double> params_;
};

enum class LabelMode { kSing, kHard };

struct TrainConfig {
  LabelMode mode = LabelMode::kSing;
  int epochs = 30;
  std::size_t batch = 16;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  SingParams sing{};
  LossConfig loss{};
  std::uint64_t seed = 7;
  int patch = 7;
  int hidden = 32;

  void validate() const;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded 80/20 permutation split; identical for every label mode.
DatasetSplit split_dataset(std::size_t n, std::uint64_t seed);

/// Regression targets: SiNG maps in sing mode, +-1 from the mask in hard mode.
std::vector<std::vector<double>> make_targets(const SyntheticDataset& data, LabelMode mode,
                                              const SingParams& sing = {});

struct BatchObjective {
  double loss = 0.0;
  std::vector<double> grad;
  /// Detached per-voxel weights for each image (all ones in hard mode).
  std::vector<std::vector<double>> weights;
};

/// Mean over the batch of the per-image loss, with the parameter gradient.
BatchObjective batch_objective(const PatchModel& model, const SyntheticDataset& data,
                               const std::vector<std::vector<double>>& targets,
                               std::span<const std::size_t> batch, LabelMode mode,
                               const LossConfig& loss);

/// Same objective with the sample weights frozen to `weights`; value only.
double frozen_batch_objective(const PatchModel& model, const SyntheticDataset& data,
                              const std::vector<std::vector<double>>& targets,
                              std::span<const std::size_t> batch,
                              const std::vector<std::vector<double>>& weights);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_dice = 0.0;
};

struct EvaluationReport {
  std::vector<MetricReport> per_image;
  MetricReport mean;
  MetricReport std_error;
};

struct TrainResult {
  PatchModel model;
  std::vector<EpochRecord> history;
  DatasetSplit split;
};

/// Adam on shuffled mini-batches; epoch 0 in `history` is the untrained model.
/// Throws Error(kDivergence) on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const SyntheticDataset& data);

/// Same as train() but on an explicit split (e.g. training and validating on one image).
TrainResult train_on(const TrainConfig& cfg, const SyntheticDataset& data, DatasetSplit split);

/// Metrics of 0-thresholded tanh(logits) against the masks, with mean and standard error.
EvaluationReport evaluate_logits(const std::vector<std::vector<double>>& logits,
                                 const std::vector<Mask>& masks);

EvaluationReport evaluate(const PatchModel& model, const SyntheticDataset& data,
                          std::span<const std::size_t> indices);

}  // namespace singr
