#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "singr/error.hpp"
#include "singr/io.hpp"
#include "singr/loss.hpp"
#include "singr/metrics.hpp"
#include "singr/sing.hpp"
#include "singr/trainer.hpp"

namespace singr::cli {

namespace fs = std::filesystem;

namespace {

/// Thrown for failures that map to the usage exit code after parsing succeeded.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Wraps any failure while reading inputs; reported with the data exit code.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kOutOfRange: return kExitUsage;
    case ErrorCode::kDimsMismatch:
    case ErrorCode::kFormat:
    case ErrorCode::kUnsupported: return kExitData;
    case ErrorCode::kIo:
    case ErrorCode::kDivergence: return kExitRuntime;
  }
  return kExitRuntime;
}

std::optional<VolumeFormat> format_override(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto f = parse_volume_format(text);
  if (!f) throw UsageError("unknown --format '" + text + "' (expected svol or nifti)");
  return f;
}

Volume load_input(const fs::path& path, std::optional<VolumeFormat> format) {
  try {
    return read_volume(path, format);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

std::string shape_of(const Volume& v) {
  return to_string(v.dims()) + " (" + std::to_string(v.channels()) + " channel" +
         (v.channels() == 1 ? "" : "s") + ")";
}

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string strip_volume_extension(const std::string& name) {
  for (std::string_view ext : {".nii.gz", ".nii", ".svol"}) {
    if (name.size() > ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0) {
      return name.substr(0, name.size() - ext.size());
    }
  }
  return name;
}

fs::path channel_output(const fs::path& out, std::size_t k) {
  fs::path p = out;
  const std::string stem = strip_volume_extension(out.filename().string());
  p.replace_filename(stem + "_c" + std::to_string(k) + ".svol");
  return p;
}

// ---------------------------------------------------------------- transform

struct TransformOptions {
  std::string image, mask, out, format;
  double lambda = 0.5;
  double delta = 0.5;
  int connectivity = 26;
  std::string boundary = "inner";
  std::string passes = "4";
  bool no_normalize = false;
  int jobs = 1;
};

SingParams sing_params_from(const TransformOptions& o) {
  SingParams p;
  p.lambda = o.lambda;
  p.delta = o.delta;
  if (!(o.lambda >= 0.0 && o.lambda <= 1.0)) throw UsageError("--lambda must lie in [0, 1]");
  if (!(o.delta >= 0.0 && o.delta < 1.0)) throw UsageError("--delta must lie in [0, 1)");
  auto side = parse_boundary_side(o.boundary);
  if (!side) throw UsageError("--boundary must be inner, outer or both");
  p.side = *side;
  if (!is_valid_connectivity(o.connectivity)) throw UsageError("--connectivity must be 4, 6, 8, 18 or 26");
  p.geo.connectivity = o.connectivity;
  if (o.passes == "auto") {
    p.geo.max_pass_pairs = GeoConfig::kUnbounded;
  } else {
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(o.passes, &used);
      if (used != o.passes.size()) n = 0;
    } catch (const std::exception&) {
      n = 0;
    }
    if (n < 1) throw UsageError("--passes must be a positive integer or 'auto'");
    p.geo.max_pass_pairs = n;
  }
  if (o.jobs < 1) throw UsageError("--jobs must be positive");
  return p;
}

/// Transforms one image/mask pair; returns the messages to print.
std::string transform_one(const fs::path& image_path, const fs::path& mask_path, const fs::path& out_path,
                          const SingParams& params, bool normalize, std::optional<VolumeFormat> format) {
  Volume image = load_input(image_path, format);
  const Volume labels = load_input(mask_path, format);
  if (!(image.dims() == labels.dims())) {
    throw Error(ErrorCode::kDimsMismatch, "image " + image_path.string() + " is " + shape_of(image) +
                                              " but mask " + mask_path.string() + " is " +
                                              shape_of(labels));
  }
  if (normalize) image = normalize_minmax(image);
  const auto masks = masks_from_volume(labels);

  std::ostringstream log;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const SingMap s = sing_transform(image, masks[k], params);
    const fs::path target = masks.size() == 1 ? out_path : channel_output(out_path, k);
    write_svol(s, target);
    if (s.warnings & kSingWarnEmptyMask) log << "warning: " << target.string() << ": mask is empty, all values -1\n";
    if (s.warnings & kSingWarnFullMask) log << "warning: " << target.string() << ": mask is full, all values +1\n";
    if (s.warnings & kSingWarnZeroTau) log << "warning: " << target.string() << ": tau is 0, values are +-delta\n";
  }
  return log.str();
}

std::vector<std::string> volume_files(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && sniff_format(entry.path())) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

int cmd_transform(const TransformOptions& o, std::ostream& out, std::ostream& err) {
  const SingParams params = sing_params_from(o);
  const auto format = format_override(o.format);
  const bool normalize = !o.no_normalize;

  if (!fs::is_directory(o.image) || !fs::is_directory(o.mask)) {
    err << transform_one(o.image, o.mask, o.out, params, normalize, format);
    out << "wrote " << o.out << "\n";
    return kExitOk;
  }

  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + o.out);
  const auto names = volume_files(o.image);

  struct Outcome {
    int code = kExitOk;
    std::string log;
  };
  std::vector<Outcome> outcomes(names.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < names.size(); i = next++) {
      const fs::path target = fs::path(o.out) / (strip_volume_extension(names[i]) + ".svol");
      try {
        outcomes[i].log = transform_one(fs::path(o.image) / names[i], fs::path(o.mask) / names[i], target,
                                        params, normalize, format);
        outcomes[i].log += "wrote " + target.string() + "\n";
      } catch (const DataError& e) {
        outcomes[i] = {kExitData, std::string("error: ") + e.what() + "\n"};
      } catch (const Error& e) {
        outcomes[i] = {exit_code_for(e.code()), std::string("error: ") + e.what() + "\n"};
      } catch (const std::exception& e) {
        outcomes[i] = {kExitRuntime, std::string("error: ") + e.what() + "\n"};
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(o.jobs), std::max<std::size_t>(names.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kExitOk;
  for (const auto& r : outcomes) {
    (r.code == kExitOk ? out : err) << r.log;
    code = std::max(code, r.code);
  }
  return code;
}

// ---------------------------------------------------------------- metrics

int cmd_metrics(const std::string& pred_path, const std::string& ref_path, const std::string& format_text,
                std::ostream& out) {
  const auto format = format_override(format_text);
  const Volume pred = load_input(pred_path, format);
  const Volume ref = load_input(ref_path, format);
  if (!(pred.dims() == ref.dims()) || pred.channels() != ref.channels()) {
    throw Error(ErrorCode::kDimsMismatch, "prediction is " + shape_of(pred) + " but reference is " + shape_of(ref));
  }
  const auto pm = masks_from_volume(pred);
  const auto rm = masks_from_volume(ref);
  out << "dice,iou,hd95_mm\n";
  for (std::size_t c = 0; c < pm.size(); ++c) {
    // Reference spacing governs the surface distances.
    const Mask p(pm[c].dims(), rm[c].spacing(), std::vector<std::uint8_t>(pm[c].bits().begin(), pm[c].bits().end()));
    const MetricReport r = evaluate_masks(p, rm[c]);
    out << format6(r.dice) << "," << format6(r.iou) << "," << format6(r.hd95) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- loss-curve

int cmd_loss_curve(double gamma, double epsilon, double s, const std::string& out_path, std::ostream& out) {
  if (!(s >= -1.0 && s <= 1.0)) throw UsageError("--s must lie in [-1, 1]");
  const LossConfig cfg{gamma, epsilon};
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::ostringstream csv;
  csv << "z,focal_l1,l1\n";
  char buf[128];
  for (int k = 0; k <= 200; ++k) {
    const double z = static_cast<double>(k - 100) / 100.0;
    const double target[1] = {s};
    const double pred[1] = {z};
    const double focal = focal_l1(target, pred, cfg).loss;
    const double l1 = l1_loss(target, pred).loss;
    std::snprintf(buf, sizeof buf, "%.2f,%.9f,%.9f\n", z, focal, l1);
    csv << buf;
  }
  if (out_path.empty()) {
    out << csv.str();
  } else {
    const std::string text = csv.str();
    write_bytes(out_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  return kExitOk;
}

// ---------------------------------------------------------------- train-demo

struct TrainDemoOptions {
  std::uint64_t seed = 7;
  std::size_t n = 250;
  int epochs = 30;
  std::size_t batch = 16;
  double lr = 1e-3;
  double lambda = 0.5;
  double delta = 0.5;
  double gamma = 1.0;
  std::string mode = "sing";
  std::string out_dir = ".";
};

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int cmd_train_demo(const TrainDemoOptions& o, std::ostream& out) {
  std::vector<LabelMode> modes;
  if (o.mode == "sing" || o.mode == "both") modes.push_back(LabelMode::kSing);
  if (o.mode == "hard" || o.mode == "both") modes.push_back(LabelMode::kHard);
  if (modes.empty()) throw UsageError("--mode must be sing, hard or both");
  if (o.n < 2) throw UsageError("--n must be at least 2");

  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch = o.batch;
  cfg.learning_rate = o.lr;
  cfg.seed = o.seed;
  cfg.sing.lambda = o.lambda;
  cfg.sing.delta = o.delta;
  cfg.loss.gamma = o.gamma;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const SyntheticDataset data = gen_synthetic(o.seed, o.n);
  for (LabelMode mode : modes) {
    cfg.mode = mode;
    const char* name = mode == LabelMode::kSing ? "sing" : "hard";
    fs::path dir = o.out_dir;
    if (modes.size() > 1) dir /= name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());

    const TrainResult result = train(cfg, data);
    std::ostringstream history;
    history << "epoch,train_loss,val_dice\n";
    for (const auto& h : result.history) {
      history << h.epoch << "," << format6(h.train_loss) << "," << format6(h.val_dice) << "\n";
    }
    write_text(dir / "history.csv", history.str());

    const EvaluationReport report = evaluate(result.model, data, result.split.val);
    std::ostringstream eval;
    eval << "image,dice,iou,hd95_mm\n";
    for (std::size_t i = 0; i < report.per_image.size(); ++i) {
      const auto& m = report.per_image[i];
      eval << result.split.val[i] << "," << format6(m.dice) << "," << format6(m.iou) << "," << format6(m.hd95) << "\n";
    }
    write_text(dir / "eval.csv", eval.str());

    out << name << ": val dice " << format6(report.mean.dice) << " +- " << format6(report.std_error.dice)
        << ", iou " << format6(report.mean.iou) << ", hd95 " << format6(report.mean.hd95) << " mm\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- slice

int cmd_slice(const std::string& input, const std::string& axis_text, long long index, std::size_t channel,
              const std::string& out_path, const std::string& format_text) {
  int axis = -1;
  if (axis_text == "x") axis = 0;
  if (axis_text == "y") axis = 1;
  if (axis_text == "z") axis = 2;
  if (axis < 0) throw UsageError("--axis must be x, y or z");
  const auto format = format_override(format_text);
  const Volume v = load_input(input, format);
  if (channel >= v.channels()) throw UsageError("--channel out of range for " + shape_of(v));
  if (index < 0) throw UsageError("--index must be non-negative");
  const auto bytes = encode_slice_pgm(v, axis, static_cast<std::size_t>(index), channel);
  write_bytes(out_path, bytes);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"singr: signed normalized geodesic soft labels and Focal-L1 tooling"};
  app.require_subcommand(1);

  TransformOptions t;
  auto* transform = app.add_subcommand("transform", "Convert an image/mask pair into a soft-label map");
  transform->add_option("--image", t.image, "Image volume (file or directory)")->required();
  transform->add_option("--mask", t.mask, "Mask volume (file or directory)")->required();
  transform->add_option("--out", t.out, "Output .svol (or directory)")->required();
  transform->add_option("--lambda", t.lambda, "Intensity weight in [0, 1]")->capture_default_str();
  transform->add_option("--delta", t.delta, "Margin in [0, 1)")->capture_default_str();
  transform->add_option("--connectivity", t.connectivity, "4, 6, 8, 18 or 26")->capture_default_str();
  transform->add_option("--boundary", t.boundary, "inner, outer or both")->capture_default_str();
  transform->add_option("--passes", t.passes, "Sweep pairs, or 'auto' to converge")->capture_default_str();
  transform->add_flag("--no-normalize", t.no_normalize, "Skip per-channel min-max normalization");
  transform->add_option("--jobs", t.jobs, "Parallel files in directory mode")->capture_default_str();
  transform->add_option("--format", t.format, "Input format override: svol or nifti");

  std::string pred, ref, metrics_format;
  auto* metrics = app.add_subcommand("metrics", "Dice, IoU and HD95 between two masks");
  metrics->add_option("--pred", pred, "Predicted mask or signed map (> 0 is foreground)")->required();
  metrics->add_option("--ref", ref, "Reference mask")->required();
  metrics->add_option("--format", metrics_format, "Input format override: svol or nifti");

  double gamma = 1.0, epsilon = 0.0, s = 1.0;
  std::string curve_out;
  auto* curve = app.add_subcommand("loss-curve", "Sample Focal-L1 and L1 against the prediction");
  curve->add_option("--gamma", gamma)->capture_default_str();
  curve->add_option("--epsilon", epsilon)->capture_default_str();
  curve->add_option("--s", s, "Fixed target value")->capture_default_str();
  curve->add_option("--out", curve_out, "CSV path (stdout when omitted)");

  TrainDemoOptions d;
  auto* demo = app.add_subcommand("train-demo", "Train the toy patch regressor on synthetic shapes");
  demo->add_option("--seed", d.seed)->capture_default_str();
  demo->add_option("--n", d.n, "Number of synthetic images")->capture_default_str();
  demo->add_option("--epochs", d.epochs)->capture_default_str();
  demo->add_option("--batch", d.batch)->capture_default_str();
  demo->add_option("--lr", d.lr)->capture_default_str();
  demo->add_option("--lambda", d.lambda)->capture_default_str();
  demo->add_option("--delta", d.delta)->capture_default_str();
  demo->add_option("--gamma", d.gamma)->capture_default_str();
  demo->add_option("--mode", d.mode, "sing, hard or both")->capture_default_str();
  demo->add_option("--out-dir", d.out_dir)->capture_default_str();

  std::string slice_in, slice_axis = "z", slice_out, slice_format;
  long long slice_index = 0;
  std::size_t slice_channel = 0;
  auto* slice = app.add_subcommand("slice", "Export one slice as an 8-bit PGM");
  slice->add_option("--input", slice_in)->required();
  slice->add_option("--axis", slice_axis, "x, y or z")->capture_default_str();
  slice->add_option("--index", slice_index)->required();
  slice->add_option("--channel", slice_channel)->capture_default_str();
  slice->add_option("--out", slice_out)->required();
  slice->add_option("--format", slice_format, "Input format override: svol or nifti");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*transform) return cmd_transform(t, out, err);
    if (*metrics) return cmd_metrics(pred, ref, metrics_format, out);
    if (*curve) return cmd_loss_curve(gamma, epsilon, s, curve_out, out);
    if (*demo) return cmd_train_demo(d, out);
    if (*slice) return cmd_slice(slice_in, slice_axis, slice_index, slice_channel, slice_out, slice_format);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace singr::cli
