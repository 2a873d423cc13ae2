// Acceptance gate: one PASS/FAIL line per primary criterion.
// Usage: singr_acceptance [name-substring ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "singr/geodesic.hpp"
#include "singr/io.hpp"
#include "singr/loss.hpp"
#include "singr/metrics.hpp"
#include "singr/sing.hpp"
#include "singr/trainer.hpp"
#include "support/oracles.hpp"

namespace {

using namespace singr;
using Clock = std::chrono::steady_clock;

constexpr double kGeodesicRelTol = 1e-5;
constexpr double kGeodesicBudgetS = 60.0;
constexpr double kGradTol = 1e-6;
constexpr double kThetaRelTol = 1e-4;
constexpr double kLossCurveBudgetS = 1.0;
constexpr double kHd95Tol = 1e-6;
constexpr double kRoundingUlps = 4.0;
constexpr double kToyDiceFloor = 0.85;
constexpr double kToyBudgetS = 300.0;
constexpr double kLargeBudgetS = 10.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

SeedSet random_seeds(std::mt19937_64& rng, const Dims& d) {
  std::uniform_int_distribution<std::size_t> count(1, std::min<std::size_t>(5, d.voxels()));
  std::vector<std::size_t> all(d.voxels());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(count(rng));
  return SeedSet(d, all);
}

Outcome geodesic_oracle() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> sp(0.5, 2.0);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Dims d = testing::random_dims(rng, 12);
    const Volume v = testing::random_volume(rng, d, 1 + trial % 2, {sp(rng), sp(rng), sp(rng)});
    const SeedSet seeds = random_seeds(rng, d);
    for (double lambda : {0.0, 0.5, 1.0}) {
      const auto oracle = geodesic_dijkstra(v, seeds, lambda);
      const auto fast = geodesic_raster(v, seeds, lambda, GeoConfig::converged());
      for (std::size_t i = 0; i < d.voxels(); ++i) {
        const double rel = std::abs(fast.values[i] - oracle.values[i]) / std::max(1.0, std::abs(oracle.values[i]));
        worst = std::max(worst, rel);
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst <= kGeodesicRelTol && elapsed < kGeodesicBudgetS,
          fmt("50 volumes x 3 lambdas, max rel err %.3g (tol %.0e), %.2f s (budget 60 s)", worst, kGeodesicRelTol,
              elapsed)};
}

Outcome lambda_zero_closed_form() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> sp(0.3, 3.0);
  std::size_t mismatches = 0, checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Dims d = testing::random_dims(rng, 12);
    const Spacing s = trial < 5 ? Spacing{} : Spacing{sp(rng), sp(rng), sp(rng)};
    const Volume v = testing::random_volume(rng, d, 1, s);
    const SeedSet seeds = random_seeds(rng, d);
    const auto brute = testing::brute_manhattan(d, s, seeds.grid_indices());
    const auto g = geodesic_raster(v, seeds, 0.0);
    for (std::size_t i = 0; i < d.voxels(); ++i, ++checked) {
      mismatches += static_cast<float>(g.values[i]) != static_cast<float>(brute[i]);
    }
  }
  return {mismatches == 0, fmt("20 instances, %.0f voxels, %.0f f32 mismatches", static_cast<double>(checked),
                               static_cast<double>(mismatches))};
}

Outcome sing_invariants() {
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Dims d = testing::random_dims(rng, 10);
    const Volume image = testing::random_volume(rng, d);
    Mask mask(d, {});
    switch (trial % 5) {
      case 0: break;
      case 1: mask = Mask(d, {}, std::vector<std::uint8_t>(d.voxels(), 1)); break;
      case 2: mask.set(std::uniform_int_distribution<std::size_t>(0, d.voxels() - 1)(rng), true); break;
      case 3: mask = testing::random_mask(rng, d, u(rng)); break;
      default: mask = testing::random_blob(rng, d); break;
    }
    SingParams p;
    p.lambda = u(rng);
    p.delta = 0.05 + 0.9 * u(rng);
    if (trial % 2) p.geo = GeoConfig::converged();
    const SingMap s = sing_transform(image, mask, p);

    bool ok = threshold_mask(s) == mask;
    const std::size_t fg = mask.count();
    if (fg == 0 || fg == d.voxels()) {
      for (double v : s.values) ok &= v == (fg == 0 ? -1.0 : 1.0);
    } else {
      const auto g0 = geodesic_dijkstra(image, extract_boundary(mask).seeds, 0.0);
      double min_fg = 2.0, max_bg = -2.0, max_abs = 0.0;
      for (std::size_t i = 0; i < d.voxels(); ++i) {
        const double v = s.values[i];
        if (mask[i]) {
          ok &= v >= p.delta && v <= 1.0;
          min_fg = std::min(min_fg, v);
        } else {
          ok &= v >= -1.0 && v <= -p.delta;
          max_bg = std::max(max_bg, v);
        }
        if (p.geo.max_pass_pairs == GeoConfig::kUnbounded && g0.values[i] > s.beta) ok &= v == -1.0;
        max_abs = std::max(max_abs, std::abs(v));
      }
      ok &= min_fg - max_bg >= 2.0 * p.delta - 1e-12;
      if (s.tau > 0.0) ok &= max_abs == 1.0;
    }
    failures += !ok;
  }

  const Dims line{1, 1, 7};
  SingParams p;
  p.lambda = 0.0;
  p.delta = 0.5;
  p.geo = GeoConfig::converged();
  const SingMap ex = sing_transform(Volume(line, 1, {}), Mask(line, {}, {0, 0, 1, 1, 1, 0, 0}), p);
  const bool example = ex.values == std::vector<double>{-1, -1, 0.5, 1, 0.5, -1, -1};
  return {failures == 0 && example,
          fmt("100 masks, %.0f invariant failures; 1x1x7 example ", static_cast<double>(failures)) +
              (example ? "exact" : "WRONG")};
}

Outcome focal_point_values() {
  auto single = [](double s, double z) {
    const double sv[1] = {s}, zv[1] = {z};
    return focal_l1(sv, zv).loss;
  };
  const bool points = single(1, -1) == 2.0 && single(1, 0.5) == 0.25 && single(0.5, 0.25) == 0.125 &&
                      single(0.4, 0.4) == 0.0 && single(0, 0) == 0.0;
  std::mt19937_64 rng(1004);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> s(10000), z(10000);
  for (auto& x : s) x = u(rng);
  for (auto& x : z) x = u(rng);
  const auto a = focal_l1(s, z), b = focal_l1(z, s);
  std::size_t violations = a.loss == b.loss ? 0 : 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = std::abs(s[i] - z[i]);
    const double bound = r / std::max(std::abs(s[i]), std::abs(z[i]));
    const double c = r * a.weights[i];
    if (a.weights[i] != b.weights[i]) ++violations;
    const double slack = kRoundingUlps * std::numeric_limits<double>::epsilon() * bound;
    if (s[i] * z[i] < 0.0 ? std::abs(c - bound) > slack : c > bound + slack) ++violations;
  }
  return {points && violations == 0,
          std::string("point values ") + (points ? "exact" : "WRONG") +
              fmt("; 1e4 pairs, %.0f symmetry/dominance violations", static_cast<double>(violations))};
}

Outcome gradient_checks() {
  std::mt19937_64 rng(1005);
  std::uniform_real_distribution<double> us(-1.0, 1.0), ul(-2.0, 2.0);
  double worst_z = 0.0, worst_logit = 0.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> s(64), logits(64);
    for (auto& x : s) x = us(rng);
    for (auto& x : logits) x = ul(rng);
    const auto z = tanh_map(logits);
    const auto r = focal_l1(s, z);
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto zp = z, zm = z, lp = logits, lm = logits;
      zp[i] += h;
      zm[i] -= h;
      lp[i] += h;
      lm[i] -= h;
      const double fdz = (frozen_weight_loss(s, zp, r.weights) - frozen_weight_loss(s, zm, r.weights)) / (2 * h);
      const double fdl = (frozen_weight_loss(s, tanh_map(lp), r.weights) -
                          frozen_weight_loss(s, tanh_map(lm), r.weights)) / (2 * h);
      worst_z = std::max(worst_z, std::abs(fdz - r.grad_wrt_z[i]));
      worst_logit = std::max(worst_logit, std::abs(fdl - r.grad_wrt_logit[i]));
    }
  }

  const auto data = gen_synthetic(7, 2);
  const auto targets = make_targets(data, LabelMode::kSing);
  PatchModel model;
  model.init(7);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (double& p : model.parameters()) p += jitter(rng);
  const std::vector<std::size_t> batch{0, 1};
  const auto obj = batch_objective(model, data, targets, batch, LabelMode::kSing, LossConfig{});
  double num = 0.0, den = 0.0;
  const double ht = 1e-5;
  for (std::size_t k = 0; k < model.parameter_count(); k += 5) {
    const double saved = model.parameters()[k];
    model.parameters()[k] = saved + ht;
    const double fp = frozen_batch_objective(model, data, targets, batch, obj.weights);
    model.parameters()[k] = saved - ht;
    const double fm = frozen_batch_objective(model, data, targets, batch, obj.weights);
    model.parameters()[k] = saved;
    const double fd = (fp - fm) / (2 * ht);
    num += (fd - obj.grad[k]) * (fd - obj.grad[k]);
    den += fd * fd;
  }
  const double theta_rel = std::sqrt(num / den);
  return {worst_z <= kGradTol && worst_logit <= kGradTol && theta_rel <= kThetaRelTol,
          fmt("dL/dZ max err %.2g, dL/dlogit max err %.2g (tol 1e-6); ", worst_z, worst_logit) +
              fmt("theta rel err %.2g (tol 1e-4)", theta_rel)};
}

Outcome loss_curve_shape() {
  const auto t0 = Clock::now();
  std::ostringstream out, err;
  const char* argv[] = {"singr", "loss-curve", "--s", "1.0"};
  const int code = cli::run(4, argv, out, err);
  const double elapsed = seconds_since(t0);
  if (code != 0) return {false, "loss-curve exited with " + std::to_string(code) + ": " + err.str()};

  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  std::vector<double> zs, focal, l1;
  while (std::getline(in, line)) {
    double z, f, l;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &z, &f, &l) != 3) return {false, "unparsable row: " + line};
    zs.push_back(z);
    focal.push_back(f);
    l1.push_back(l);
  }
  bool decreasing = zs.size() == 201;
  for (std::size_t k = 1; k < focal.size(); ++k) decreasing &= focal[k] < focal[k - 1];

  // Hard rows (Z < 0) sit above every easy row and carry the full L1 penalty.
  double min_hard = 1e9, max_easy = -1e9;
  bool hard_is_l1 = true, easy_below_l1 = true;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    if (zs[k] < 0.0) {
      min_hard = std::min(min_hard, focal[k]);
      hard_is_l1 &= focal[k] == l1[k];
    } else {
      max_easy = std::max(max_easy, focal[k]);
      easy_below_l1 &= focal[k] <= l1[k];
    }
  }
  // Same residual, both branches: a hard pair weighs more than the easy formula would give it.
  std::mt19937_64 rng(1006);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::size_t hard_pairs = 0, hard_wins = 0;
  for (int k = 0; k < 10000; ++k) {
    const double s = u(rng), z = -u(rng);
    const double r = s - z;
    if (r >= 1.0) continue;
    ++hard_pairs;
    const double denom = std::max(std::abs(s), std::abs(z));
    const double hard = r * focal_l1_weight(s, z);
    const double easy = r * std::pow(r, 1.0) / denom;
    hard_wins += hard > easy;
  }
  const bool ok = decreasing && min_hard > max_easy && hard_is_l1 && easy_below_l1 && hard_pairs > 0 &&
                  hard_wins == hard_pairs && elapsed < kLossCurveBudgetS;
  return {ok, std::string(decreasing ? "strictly decreasing" : "NOT decreasing") +
                  fmt("; min hard %.4f > max easy %.4f; hard beats easy formula on %.0f", min_hard, max_easy,
                      static_cast<double>(hard_wins)) +
                  fmt("/%.0f pairs; %.3f s", static_cast<double>(hard_pairs), elapsed)};
}

Outcome metrics_oracle() {
  std::mt19937_64 rng(1007);
  std::uniform_real_distribution<double> sp(0.5, 2.0);
  std::size_t overlap_bad = 0, identity_bad = 0;
  double worst_hd = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const Dims d = testing::random_dims(rng, 12);
    const Spacing s{sp(rng), sp(rng), sp(rng)};
    const Mask a = trial % 3 ? testing::random_blob(rng, d, s) : testing::random_mask(rng, d, 0.2, s);
    const Mask b = testing::random_blob(rng, d, s);
    std::size_t inter = 0;
    for (std::size_t i = 0; i < d.voxels(); ++i) inter += a[i] && b[i];
    const std::size_t na = a.count(), nb = b.count();
    const double ref_dice = na + nb == 0 ? 1.0 : 2.0 * inter / static_cast<double>(na + nb);
    const double ref_iou = na + nb == 0 ? 1.0 : inter / static_cast<double>(na + nb - inter);
    const auto r = evaluate_masks(a, b);
    overlap_bad += r.dice != ref_dice || r.iou != ref_iou;
    identity_bad += std::abs(r.iou - r.dice / (2.0 - r.dice)) > 1e-12;
    worst_hd = std::max(worst_hd, std::abs(r.hd95 - testing::brute_hd95(a, b)));
  }
  return {overlap_bad == 0 && identity_bad == 0 && worst_hd <= kHd95Tol,
          fmt("30 pairs: %.0f dice/iou mismatches, %.0f identity failures, ", static_cast<double>(overlap_bad),
              static_cast<double>(identity_bad)) +
              fmt("max hd95 err %.2g (tol 1e-6)", worst_hd)};
}

Outcome toy_end_to_end() {
  const auto t0 = Clock::now();
  const auto data = gen_synthetic(7, 250);
  TrainConfig cfg;
  cfg.seed = 7;
  const auto sing = train(cfg, data);
  const auto sing_eval = evaluate(sing.model, data, sing.split.val);
  cfg.mode = LabelMode::kHard;
  const auto hard = train(cfg, data);
  const auto hard_eval = evaluate(hard.model, data, hard.split.val);
  const double elapsed = seconds_since(t0);
  const bool split_ok = sing.split.train.size() == 200 && sing.split.val.size() == 50;
  return {split_ok && sing_eval.mean.dice >= kToyDiceFloor && elapsed < kToyBudgetS,
          fmt("sing val Dice %.4f +- %.4f (floor 0.85); ", sing_eval.mean.dice, sing_eval.std_error.dice) +
              fmt("hard val Dice %.4f +- %.4f (reported); ", hard_eval.mean.dice, hard_eval.std_error.dice) +
              fmt("%.1f s for both (budget 300 s)", elapsed)};
}

Outcome large_volume() {
  std::mt19937_64 rng(1008);
  const Dims d{128, 128, 128};
  const Volume image = testing::random_volume(rng, d);
  Mask mask(d, {});
  for (std::size_t z = 0, p = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x, ++p) {
        const double r = std::hypot(x - 60.0, y - 70.0, (z - 64.0) * 1.3);
        mask.set(p, r < 30.0);
      }
  const auto t0 = Clock::now();
  const SingMap s = sing_transform(image, mask, SingParams{});
  const double elapsed = seconds_since(t0);
  const bool round_trip = threshold_mask(s) == mask;
  return {elapsed <= kLargeBudgetS && round_trip,
          fmt("128^3 pass-limited sing_transform %.2f s (budget 10 s)", elapsed) +
              (round_trip ? "; threshold round-trip ok" : "; threshold round-trip FAILED")};
}

Outcome io_suite() {
  const auto dir = testing::temp_dir("acceptance_io");
  std::mt19937_64 rng(1009);
  std::uniform_real_distribution<float> u(-100.0f, 100.0f);
  bool svol_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const Dims d = testing::random_dims(rng, 10);
    std::vector<double> data(d.voxels() * (1 + trial % 3));
    for (auto& x : data) x = u(rng);
    const Volume v(d, 1 + trial % 3, {0.5, 1.0, 2.5}, data);
    write_svol(v, dir / "a.svol");
    const Volume back = read_svol(dir / "a.svol");
    svol_ok &= back.dims() == d && back.channels() == v.channels() && back.spacing() == v.spacing();
    svol_ok &= std::equal(data.begin(), data.end(), back.values().begin(), back.values().end());
    write_svol(back, dir / "b.svol");
    std::ifstream fa(dir / "a.svol", std::ios::binary), fb(dir / "b.svol", std::ios::binary);
    svol_ok &= std::string(std::istreambuf_iterator<char>(fa), {}) == std::string(std::istreambuf_iterator<char>(fb), {});
  }

  struct Case {
    std::int16_t datatype, bitpix;
    std::vector<std::uint8_t> payload;
    std::vector<double> expected;
    float slope, inter;
  };
  const std::vector<Case> cases{
      {2, 8, testing::raw_bytes<std::uint8_t>({0, 17, 255, 3}), {0, 17, 255, 3}, 0.0f, 0.0f},
      {4, 16, testing::raw_bytes<std::int16_t>({-32768, -1, 0, 32767}), {-32768, -1, 0, 32767}, 0.0f, 0.0f},
      {16, 32, testing::raw_bytes<float>({0.25f, -7.5f, 1e6f, 0.0f}), {0.25, -7.5, 1e6, 0.0}, 0.0f, 0.0f},
      {4, 16, testing::raw_bytes<std::int16_t>({3, 0, -2, 10}), {7, 1, -3, 21}, 2.0f, 1.0f},
      {2, 8, testing::raw_bytes<std::uint8_t>({4, 0, 1, 2}), {2.5, 0.5, 1.0, 1.5}, 0.5f, 0.5f},
  };
  std::size_t nifti_bad = 0, nifti_files = 0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    testing::NiftiFixture f;
    f.datatype = cases[k].datatype;
    f.bitpix = cases[k].bitpix;
    f.dim = {3, 2, 2, 1};
    f.scl_slope = cases[k].slope;
    f.scl_inter = cases[k].inter;
    f.payload = cases[k].payload;
    const auto bytes = testing::nifti_bytes(f);
    for (bool gz : {false, true}) {
      const auto p = dir / ("f" + std::to_string(k) + (gz ? ".nii.gz" : ".nii"));
      testing::write_file(p, gz ? testing::gzip_bytes(bytes) : bytes);
      const Volume v = read_volume(p);
      ++nifti_files;
      nifti_bad += !std::equal(cases[k].expected.begin(), cases[k].expected.end(), v.values().begin(), v.values().end());
    }
  }
  return {svol_ok && nifti_bad == 0,
          std::string("SVOL round-trip ") + (svol_ok ? "bit-exact" : "MISMATCH") +
              fmt("; NIfTI %.0f/%.0f fixtures exact (uint8, int16, float32; gzip on/off; scl)",
                  static_cast<double>(nifti_files - nifti_bad), static_cast<double>(nifti_files))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"geodesic_oracle", geodesic_oracle},     {"lambda0_closed_form", lambda_zero_closed_form},
      {"sing_invariants", sing_invariants},     {"focal_point_values", focal_point_values},
      {"gradient_checks", gradient_checks},     {"loss_curve_shape", loss_curve_shape},
      {"metrics_oracle", metrics_oracle},       {"toy_end_to_end", toy_end_to_end},
      {"performance_128", large_volume},        {"io_roundtrip", io_suite},
  };
  int failed = 0, ran = 0;
  for (const auto& [name, check] : criteria) {
    bool selected = argc < 2;
    for (int i = 1; i < argc; ++i) selected |= std::strstr(name, argv[i]) != nullptr;
    if (!selected) continue;
    ++ran;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
