#include "singr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "singr/boundary.hpp"
#include "singr/error.hpp"

namespace singr {

namespace {

void check_same_grid(const Mask& a, const Mask& b) {
  if (!(a.dims() == b.dims())) {
    throw Error(ErrorCode::kDimsMismatch, "mask dims " + to_string(a.dims()) + " and " +
                                              to_string(b.dims()) + " differ");
  }
}

struct Overlap {
  std::size_t a = 0, b = 0, both = 0;
};

Overlap overlap(const Mask& a, const Mask& b) {
  check_same_grid(a, b);
  Overlap o;
  const auto ba = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    o.a += ba[i];
    o.b += bb[i];
    o.both += ba[i] & bb[i];
  }
  return o;
}

std::vector<std::size_t> surface(const Mask& m) {
  auto members = extract_boundary(m, BoundarySide::kInner).seeds.indices();
  if (members.empty()) {
    for (std::size_t i = 0; i < m.voxels(); ++i) {
      if (m[i]) members.push_back(i);
    }
  }
  return members;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact 1D squared distance transform (lower envelope of parabolas) over
// `n` samples `stride` apart in `f`, sample pitch `pitch` mm.
void edt_1d(double* f, std::size_t n, std::size_t stride, double pitch, std::vector<double>& buf_f,
            std::vector<double>& pos, std::vector<double>& bound) {
  buf_f.resize(n);
  for (std::size_t i = 0; i < n; ++i) buf_f[i] = f[i * stride];

  pos.clear();
  bound.clear();
  std::vector<double> site_f;
  site_f.reserve(n);
  for (std::size_t q = 0; q < n; ++q) {
    if (std::isinf(buf_f[q])) continue;
    const double pq = static_cast<double>(q) * pitch;
    const double fq = buf_f[q];
    while (!pos.empty()) {
      const double pv = pos.back();
      const double fv = site_f.back();
      const double s = ((fq + pq * pq) - (fv + pv * pv)) / (2.0 * (pq - pv));
      if (s <= bound.back()) {
        pos.pop_back();
        site_f.pop_back();
        bound.pop_back();
      } else {
        bound.push_back(s);
        break;
      }
    }
    if (pos.empty()) bound.push_back(-kInf);
    pos.push_back(pq);
    site_f.push_back(fq);
  }
  if (pos.empty()) return;

  std::size_t k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double pq = static_cast<double>(q) * pitch;
    while (k + 1 < pos.size() && bound[k + 1] < pq) ++k;
    const double d = pq - pos[k];
    f[q * stride] = d * d + site_f[k];
  }
}

// Squared Euclidean distance (mm^2) from every voxel centre to the nearest site.
std::vector<double> squared_edt(const Dims& d, const Spacing& s, const std::vector<std::size_t>& sites) {
  std::vector<double> f(d.voxels(), kInf);
  for (auto i : sites) f[i] = 0.0;
  std::vector<double> buf, pos, bound;
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      edt_1d(f.data() + d.nx * (y + d.ny * z), d.nx, 1, s.sx, buf, pos, bound);
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t x = 0; x < d.nx; ++x)
      edt_1d(f.data() + x + d.nx * d.ny * z, d.ny, d.nx, s.sy, buf, pos, bound);
  for (std::size_t y = 0; y < d.ny; ++y)
    for (std::size_t x = 0; x < d.nx; ++x)
      edt_1d(f.data() + x + d.nx * y, d.nz, d.nx * d.ny, s.sz, buf, pos, bound);
  return f;
}

std::vector<double> directed_distances(const Dims& d, const Spacing& s,
                                       const std::vector<std::size_t>& from,
                                       const std::vector<std::size_t>& to) {
  const auto field = squared_edt(d, s, to);
  std::vector<double> out;
  out.reserve(from.size());
  for (auto i : from) out.push_back(std::sqrt(field[i]));
  return out;
}

}  // namespace

double dice(const Mask& pred, const Mask& ref) {
  const Overlap o = overlap(pred, ref);
  if (o.a + o.b == 0) return 1.0;
  return 2.0 * static_cast<double>(o.both) / static_cast<double>(o.a + o.b);
}

double iou(const Mask& pred, const Mask& ref) {
  const Overlap o = overlap(pred, ref);
  const std::size_t uni = o.a + o.b - o.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(uni);
}

double percentile_linear(std::vector<double>& values, double q) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

double hd95(const Mask& pred, const Mask& ref) {
  check_same_grid(pred, ref);
  const std::size_t na = pred.count();
  const std::size_t nb = ref.count();
  if (na == 0 && nb == 0) return 0.0;
  const Dims& d = ref.dims();
  const Spacing& s = ref.spacing();
  if (na == 0 || nb == 0) {
    return std::hypot(static_cast<double>(d.nx) * s.sx, static_cast<double>(d.ny) * s.sy,
                      static_cast<double>(d.nz) * s.sz);
  }
  const auto sa = surface(pred);
  const auto sb = surface(ref);
  auto ab = directed_distances(d, s, sa, sb);
  auto ba = directed_distances(d, s, sb, sa);
  return std::max(percentile_linear(ab, 95.0), percentile_linear(ba, 95.0));
}

MetricReport evaluate_masks(const Mask& pred, const Mask& ref) {
  return MetricReport{dice(pred, ref), iou(pred, ref), hd95(pred, ref)};
}

}  // namespace singr
