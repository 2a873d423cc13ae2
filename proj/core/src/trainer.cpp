#include "singr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "random.hpp"
#include "singr/error.hpp"

namespace singr {

namespace {

using detail::Rng;

constexpr double kBlurSigma = 1.5;
constexpr double kNoiseAmplitude = 0.1;

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable blur with clamped borders on a side x side image.
void blur(std::vector<double>& img, std::size_t side, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int n = static_cast<int>(side);
  std::vector<double> tmp(img.size());
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * img[y * n + std::clamp(x + t, 0, n - 1)];
      tmp[y * n + x] = acc;
    }
  }
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * tmp[std::clamp(y + t, 0, n - 1) * n + x];
      img[y * n + x] = acc;
    }
  }
}

}  // namespace

SyntheticDataset gen_synthetic(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "dataset size must be at least 1");
  constexpr std::size_t side = kSyntheticSide;
  const Dims dims{side, side, 1};

  Rng rng(detail::derive_seed(seed, detail::kStreamData));
  SyntheticDataset data;
  data.seed = seed;
  data.images.reserve(n);
  data.masks.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint8_t> bits(side * side, 0);
    const auto ellipses = 1 + rng.below(3);
    for (std::uint64_t e = 0; e < ellipses; ++e) {
      const double cx = rng.uniform(14.0, 50.0);
      const double cy = rng.uniform(14.0, 50.0);
      const double a = rng.uniform(4.0, 12.0);
      const double b = rng.uniform(4.0, 12.0);
      const double theta = rng.uniform(0.0, std::numbers::pi);
      const double c = std::cos(theta), s = std::sin(theta);
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double dx = static_cast<double>(x) - cx;
          const double dy = static_cast<double>(y) - cy;
          const double u = (dx * c + dy * s) / a;
          const double v = (-dx * s + dy * c) / b;
          if (u * u + v * v <= 1.0) bits[y * side + x] = 1;
        }
      }
    }
    // The pixel nearest each centre lies within half a pixel of it, so it is
    // inside the ellipse (semi-axes >= 4) and the mask is never empty.

    const double background = rng.uniform(0.1, 0.3);
    const double foreground = rng.uniform(0.6, 0.9);
    std::vector<double> img(side * side);
    for (std::size_t p = 0; p < img.size(); ++p) img[p] = bits[p] ? foreground : background;
    blur(img, side, kBlurSigma);
    for (double& v : img) {
      v = std::clamp(v + rng.uniform(-kNoiseAmplitude, kNoiseAmplitude), 0.0, 1.0);
    }

    data.images.emplace_back(dims, 1, Spacing{}, std::move(img));
    data.masks.emplace_back(dims, Spacing{}, std::move(bits));
  }
  return data;
}

PatchModel::PatchModel(int patch, int hidden) : patch_(patch), hidden_(hidden) {
  if (patch < 1 || patch % 2 == 0) throw Error(ErrorCode::kInvalidArgument, "patch size must be odd and positive");
  if (hidden < 1) throw Error(ErrorCode::kInvalidArgument, "hidden width must be positive");
  const std::size_t inputs = static_cast<std::size_t>(patch) * patch;
  params_.assign(static_cast<std::size_t>(hidden) * inputs + 2 * hidden + 1, 0.0);
}

std::size_t PatchModel::b1_offset() const noexcept {
  return static_cast<std::size_t>(hidden_) * patch_ * patch_;
}
std::size_t PatchModel::w2_offset() const noexcept { return b1_offset() + hidden_; }
std::size_t PatchModel::b2_offset() const noexcept { return w2_offset() + hidden_; }

void PatchModel::init(std::uint64_t seed) {
  Rng rng(detail::derive_seed(seed, detail::kStreamInit));
  const double inputs = static_cast<double>(patch_ * patch_);
  const double limit1 = std::sqrt(6.0 / (inputs + hidden_));
  for (std::size_t i = 0; i < b1_offset(); ++i) params_[i] = rng.uniform(-limit1, limit1);
  for (int j = 0; j < hidden_; ++j) params_[b1_offset() + j] = 0.0;
  // Zero output layer: the untrained model emits logit 0 everywhere, i.e. no foreground.
  for (int j = 0; j < hidden_; ++j) params_[w2_offset() + j] = 0.0;
  params_[b2_offset()] = 0.0;
}

void PatchModel::gather_patch(const Volume& image, std::size_t x, std::size_t y, std::size_t z,
                              std::span<double> out) const {
  const Dims& d = image.dims();
  const int r = patch_ / 2;
  const auto data = image.channel(0);
  const long long nx = static_cast<long long>(d.nx), ny = static_cast<long long>(d.ny);
  const std::size_t plane = d.nx * d.ny * z;
  std::size_t k = 0;
  for (int dy = -r; dy <= r; ++dy) {
    const auto yy = static_cast<std::size_t>(std::clamp(static_cast<long long>(y) + dy, 0LL, ny - 1));
    for (int dx = -r; dx <= r; ++dx) {
      const auto xx = static_cast<std::size_t>(std::clamp(static_cast<long long>(x) + dx, 0LL, nx - 1));
      out[k++] = data[plane + yy * d.nx + xx] - 0.5;
    }
  }
}

void PatchModel::hidden_layer(std::span<const double> patch, std::span<double> hidden) const {
  const std::size_t h = static_cast<std::size_t>(hidden_);
  const double* w1 = params_.data();
  const double* b1 = params_.data() + b1_offset();
  std::copy(b1, b1 + h, hidden.begin());
  // Input-major weights keep the inner loop free of a reduction, so it vectorizes.
  for (std::size_t k = 0; k < patch.size(); ++k) {
    const double pk = patch[k];
    const double* col = w1 + k * h;
    for (std::size_t j = 0; j < h; ++j) hidden[j] += col[j] * pk;
  }
  for (std::size_t j = 0; j < h; ++j) hidden[j] = std::tanh(hidden[j]);
}

std::vector<double> PatchModel::forward(const Volume& image, std::vector<double>* hidden_cache) const {
  const Dims& d = image.dims();
  const std::size_t h = static_cast<std::size_t>(hidden_);
  std::vector<double> patch(static_cast<std::size_t>(patch_) * patch_);
  std::vector<double> hidden(h);
  std::vector<double> logits(image.voxels());
  if (hidden_cache) hidden_cache->resize(image.voxels() * h);
  const double* w2 = params_.data() + w2_offset();
  const double b2 = params_[b2_offset()];

  for (std::size_t z = 0, p = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      for (std::size_t x = 0; x < d.nx; ++x, ++p) {
        gather_patch(image, x, y, z, patch);
        hidden_layer(patch, hidden);
        double out = b2;
        for (std::size_t j = 0; j < h; ++j) out += w2[j] * hidden[j];
        logits[p] = out;
        if (hidden_cache) std::copy(hidden.begin(), hidden.end(), hidden_cache->begin() + p * h);
      }
    }
  }
  return logits;
}

void PatchModel::backward(const Volume& image, std::span<const double> grad_logit,
                          std::span<double> grad, const std::vector<double>* hidden_cache) const {
  const std::size_t h = static_cast<std::size_t>(hidden_);
  if (grad_logit.size() != image.voxels() || grad.size() != params_.size() ||
      (hidden_cache && hidden_cache->size() != image.voxels() * h)) {
    throw Error(ErrorCode::kDimsMismatch, "gradient buffer sizes do not match the model/image");
  }
  const Dims& d = image.dims();
  const std::size_t inputs = static_cast<std::size_t>(patch_) * patch_;
  std::vector<double> patch(inputs);
  std::vector<double> hidden(h), gh(h);
  const double* w2 = params_.data() + w2_offset();
  double* gw1 = grad.data();
  double* gb1 = grad.data() + b1_offset();
  double* gw2 = grad.data() + w2_offset();
  double& gb2 = grad[b2_offset()];

  for (std::size_t z = 0, p = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      for (std::size_t x = 0; x < d.nx; ++x, ++p) {
        const double g = grad_logit[p];
        if (g == 0.0) continue;
        gather_patch(image, x, y, z, patch);
        if (hidden_cache) {
          std::copy_n(hidden_cache->begin() + p * h, h, hidden.begin());
        } else {
          hidden_layer(patch, hidden);
        }
        gb2 += g;
        for (std::size_t j = 0; j < h; ++j) {
          gw2[j] += g * hidden[j];
          gh[j] = g * w2[j] * (1.0 - hidden[j] * hidden[j]);
          gb1[j] += gh[j];
        }
        for (std::size_t k = 0; k < inputs; ++k) {
          const double pk = patch[k];
          double* col = gw1 + k * h;
          for (std::size_t j = 0; j < h; ++j) col[j] += gh[j] * pk;
        }
      }
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be non-negative");
  if (batch == 0) throw Error(ErrorCode::kInvalidArgument, "batch must be positive");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  sing.validate();
  loss.validate();
}

DatasetSplit split_dataset(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(detail::derive_seed(seed, detail::kStreamSplit));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

std::vector<std::vector<double>> make_targets(const SyntheticDataset& data, LabelMode mode,
                                              const SingParams& sing) {
  std::vector<std::vector<double>> targets;
  targets.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (mode == LabelMode::kSing) {
      targets.push_back(sing_transform(data.images[i], data.masks[i], sing).values);
    } else {
      const auto bits = data.masks[i].bits();
      std::vector<double> t(bits.size());
      std::transform(bits.begin(), bits.end(), t.begin(), [](std::uint8_t b) { return b ? 1.0 : -1.0; });
      targets.push_back(std::move(t));
    }
  }
  return targets;
}

BatchObjective batch_objective(const PatchModel& model, const SyntheticDataset& data,
                               const std::vector<std::vector<double>>& targets,
                               std::span<const std::size_t> batch, LabelMode mode,
                               const LossConfig& loss) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  BatchObjective out;
  out.grad.assign(model.parameter_count(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (std::size_t idx : batch) {
    const Volume& image = data.images.at(idx);
    std::vector<double> hidden;
    const auto z = tanh_map(model.forward(image, &hidden));
    LossReport r = mode == LabelMode::kSing ? focal_l1(targets.at(idx), z, loss)
                                            : l1_loss(targets.at(idx), z);
    out.loss += r.loss * inv_batch;
    for (double& g : r.grad_wrt_logit) g *= inv_batch;
    model.backward(image, r.grad_wrt_logit, out.grad, &hidden);
    out.weights.push_back(std::move(r.weights));
  }
  return out;
}

double frozen_batch_objective(const PatchModel& model, const SyntheticDataset& data,
                              const std::vector<std::vector<double>>& targets,
                              std::span<const std::size_t> batch,
                              const std::vector<std::vector<double>>& weights) {
  if (weights.size() != batch.size()) throw Error(ErrorCode::kDimsMismatch, "one weight grid per batch item expected");
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto z = tanh_map(model.forward(data.images.at(batch[b])));
    total += frozen_weight_loss(targets.at(batch[b]), z, weights[b]);
  }
  return total / static_cast<double>(batch.size());
}

EvaluationReport evaluate_logits(const std::vector<std::vector<double>>& logits,
                                 const std::vector<Mask>& masks) {
  if (logits.size() != masks.size()) throw Error(ErrorCode::kDimsMismatch, "one logit grid per mask expected");
  EvaluationReport report;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const Mask pred = threshold_mask(tanh_map(logits[i]), masks[i].dims(), masks[i].spacing());
    report.per_image.push_back(evaluate_masks(pred, masks[i]));
  }
  const auto n = static_cast<double>(report.per_image.size());
  if (report.per_image.empty()) return report;

  auto aggregate = [&](double MetricReport::*field, double& mean, double& se) {
    double sum = 0.0;
    for (const auto& m : report.per_image) sum += m.*field;
    mean = sum / n;
    if (report.per_image.size() < 2) {
      se = 0.0;
      return;
    }
    double ss = 0.0;
    for (const auto& m : report.per_image) ss += (m.*field - mean) * (m.*field - mean);
    se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  };
  aggregate(&MetricReport::dice, report.mean.dice, report.std_error.dice);
  aggregate(&MetricReport::iou, report.mean.iou, report.std_error.iou);
  aggregate(&MetricReport::hd95, report.mean.hd95, report.std_error.hd95);
  return report;
}

EvaluationReport evaluate(const PatchModel& model, const SyntheticDataset& data,
                          std::span<const std::size_t> indices) {
  std::vector<std::vector<double>> logits;
  std::vector<Mask> masks;
  for (std::size_t i : indices) {
    logits.push_back(model.forward(data.images.at(i)));
    masks.push_back(data.masks.at(i));
  }
  return evaluate_logits(logits, masks);
}

namespace {

double mean_dice(const PatchModel& model, const SyntheticDataset& data,
                 std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i : indices) {
    const auto z = tanh_map(model.forward(data.images[i]));
    sum += dice(threshold_mask(z, data.masks[i].dims(), data.masks[i].spacing()), data.masks[i]);
  }
  return sum / static_cast<double>(indices.size());
}

}  // namespace

TrainResult train_on(const TrainConfig& cfg, const SyntheticDataset& data, DatasetSplit split) {
  cfg.validate();
  if (split.train.empty()) throw Error(ErrorCode::kInvalidArgument, "training split is empty");

  TrainResult result{PatchModel(cfg.patch, cfg.hidden), {}, std::move(split)};
  PatchModel& model = result.model;
  model.init(cfg.seed);
  const auto targets = make_targets(data, cfg.mode, cfg.sing);
  const auto& train_idx = result.split.train;
  const auto& val_idx = result.split.val;

  {
    const auto initial = batch_objective(model, data, targets, train_idx, cfg.mode, cfg.loss);
    result.history.push_back({0, initial.loss, mean_dice(model, data, val_idx)});
  }

  const std::size_t np = model.parameter_count();
  std::vector<double> m(np, 0.0), v(np, 0.0);
  std::vector<std::size_t> order = train_idx;
  Rng shuffle(detail::derive_seed(cfg.seed, detail::kStreamShuffle));
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const BatchObjective obj = batch_objective(model, data, targets, batch, cfg.mode, cfg.loss);
      if (!std::isfinite(obj.loss)) {
        throw Error(ErrorCode::kDivergence, "non-finite training loss at epoch " +
                                                std::to_string(epoch) + ", batch " +
                                                std::to_string(batches));
      }
      ++step;
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      auto theta = model.parameters();
      for (std::size_t k = 0; k < np; ++k) {
        const double g = obj.grad[k];
        m[k] = cfg.adam_beta1 * m[k] + (1.0 - cfg.adam_beta1) * g;
        v[k] = cfg.adam_beta2 * v[k] + (1.0 - cfg.adam_beta2) * g * g;
        theta[k] -= cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.adam_eps);
      }
      epoch_loss += obj.loss;
      ++batches;
    }
    result.history.push_back({epoch, epoch_loss / static_cast<double>(batches),
                              mean_dice(model, data, val_idx)});
  }
  return result;
}

TrainResult train(const TrainConfig& cfg, const SyntheticDataset& data) {
  return train_on(cfg, data, split_dataset(data.size(), cfg.seed));
}

}  // namespace singr
