#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "singr/error.hpp"
#include "singr/metrics.hpp"
#include "support/oracles.hpp"

namespace singr {
namespace {

TEST(Overlap, WorkedExample) {
  const Mask a({6, 1, 1}, {}, {1, 1, 1, 1, 0, 0});
  const Mask b({6, 1, 1}, {}, {0, 0, 1, 1, 0, 0});
  EXPECT_NEAR(dice(a, b), 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(iou(a, b), 0.5);
}

TEST(Overlap, EdgeCases) {
  const Dims d{3, 1, 1};
  const Mask empty(d, {});
  const Mask one(d, {}, {1, 0, 0});
  const Mask other(d, {}, {0, 0, 1});
  EXPECT_EQ(dice(empty, empty), 1.0);
  EXPECT_EQ(iou(empty, empty), 1.0);
  EXPECT_EQ(dice(empty, one), 0.0);
  EXPECT_EQ(dice(one, other), 0.0);
  EXPECT_EQ(dice(one, one), 1.0);
  EXPECT_EQ(iou(one, one), 1.0);
}

TEST(Overlap, DimsMismatch) {
  EXPECT_THROW(dice(Mask({2, 1, 1}, {}), Mask({3, 1, 1}, {})), Error);
  EXPECT_THROW(hd95(Mask({2, 1, 1}, {}), Mask({3, 1, 1}, {})), Error);
}

TEST(Hd95, SingleVoxelsThreeApart) {
  const Mask a({7, 1, 1}, {}, {0, 1, 0, 0, 0, 0, 0});
  const Mask b({7, 1, 1}, {}, {0, 0, 0, 0, 1, 0, 0});
  EXPECT_DOUBLE_EQ(hd95(a, b), 3.0);
}

TEST(Hd95, EmptyConventions) {
  const Dims d{3, 4, 12};
  const Spacing s{1.0, 2.0, 0.5};
  const Mask empty(d, s);
  Mask one(d, s);
  one.set(5, true);
  EXPECT_EQ(hd95(empty, empty), 0.0);
  EXPECT_DOUBLE_EQ(hd95(one, empty), std::sqrt(9.0 + 64.0 + 36.0));
  EXPECT_EQ(hd95(one, one), 0.0);
}

TEST(Percentile, LinearInterpolation) {
  std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(percentile_linear(v, 50.0), 2.5);
  EXPECT_DOUBLE_EQ(percentile_linear(v, 100.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile_linear(v, 0.0), 1.0);
  std::vector<double> w{0, 10};
  EXPECT_DOUBLE_EQ(percentile_linear(w, 95.0), 9.5);
}

TEST(Metrics, MatchBruteForceOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> sp(0.5, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Dims d = testing::random_dims(rng, 12);
    const Spacing s{sp(rng), sp(rng), sp(rng)};
    const Mask a = trial % 2 ? testing::random_blob(rng, d, s) : testing::random_mask(rng, d, 0.3, s);
    const Mask b = testing::random_blob(rng, d, s);
    std::size_t inter = 0;
    for (std::size_t i = 0; i < d.voxels(); ++i) inter += a[i] && b[i];
    const std::size_t na = a.count(), nb = b.count();
    const double ref_dice = na + nb == 0 ? 1.0 : 2.0 * inter / static_cast<double>(na + nb);
    const double ref_iou = na + nb == 0 ? 1.0 : inter / static_cast<double>(na + nb - inter);
    const MetricReport r = evaluate_masks(a, b);
    EXPECT_EQ(r.dice, ref_dice);
    EXPECT_EQ(r.iou, ref_iou);
    EXPECT_NEAR(r.hd95, testing::brute_hd95(a, b), 1e-6);
    EXPECT_NEAR(r.iou, r.dice / (2.0 - r.dice), 1e-12);
    EXPECT_NEAR(hd95(a, b), hd95(b, a), 1e-12);
  }
}

}  // namespace
}  // namespace singr
