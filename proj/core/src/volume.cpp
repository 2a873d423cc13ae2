#include "singr/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "singr/error.hpp"

namespace singr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimsMismatch: return "dims mismatch";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kDivergence: return "divergence";
  }
  return "unknown";
}

std::string to_string(const Dims& dims) {
  return std::to_string(dims.nx) + "x" + std::to_string(dims.ny) + "x" + std::to_string(dims.nz);
}

int Offset::l1() const noexcept { return std::abs(dx) + std::abs(dy) + std::abs(dz); }

bool is_valid_connectivity(int connectivity) noexcept {
  return connectivity == 4 || connectivity == 8 || connectivity == 6 || connectivity == 18 ||
         connectivity == 26;
}

std::vector<Offset> neighbor_offsets(int connectivity) {
  if (!is_valid_connectivity(connectivity)) {
    throw Error(ErrorCode::kInvalidArgument,
                "invalid connectivity " + std::to_string(connectivity) +
                    " (expected 6, 18, 26, or planar 4, 8)");
  }
  const bool planar = connectivity == 4 || connectivity == 8;
  const int max_nonzero = (connectivity == 4 || connectivity == 6) ? 1
                          : (connectivity == 8 || connectivity == 18) ? 2
                                                                      : 3;
  std::vector<Offset> out;
  for (int dz = -1; dz <= 1; ++dz) {
    if (planar && dz != 0) continue;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nonzero = (dx != 0) + (dy != 0) + (dz != 0);
        if (nonzero == 0 || nonzero > max_nonzero) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

std::vector<GridIndex> neighbors(const GridIndex& idx, const Dims& dims, int connectivity) {
  if (!in_bounds(idx, dims)) {
    throw Error(ErrorCode::kOutOfRange, "grid index outside " + to_string(dims));
  }
  std::vector<GridIndex> out;
  for (const Offset& o : neighbor_offsets(connectivity)) {
    const auto x = static_cast<long long>(idx.x) + o.dx;
    const auto y = static_cast<long long>(idx.y) + o.dy;
    const auto z = static_cast<long long>(idx.z) + o.dz;
    if (x < 0 || y < 0 || z < 0) continue;
    GridIndex n{static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                static_cast<std::size_t>(z)};
    if (in_bounds(n, dims)) out.push_back(n);
  }
  return out;
}

namespace {

void check_grid(const Dims& dims, const Spacing& spacing) {
  if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dims must be positive, got " + to_string(dims));
  }
  for (int a = 0; a < 3; ++a) {
    const double s = spacing.axis(a);
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument, "spacing must be positive and finite");
    }
  }
}

}  // namespace

Volume::Volume(Dims dims, std::size_t channels, Spacing spacing)
    : Volume(dims, channels, spacing, std::vector<double>(dims.voxels() * channels, 0.0)) {}

Volume::Volume(Dims dims, std::size_t channels, Spacing spacing, std::vector<double> data)
    : dims_(dims), channels_(channels), spacing_(spacing), data_(std::move(data)) {
  check_grid(dims_, spacing_);
  if (channels_ == 0) throw Error(ErrorCode::kInvalidArgument, "channels must be positive");
  if (data_.size() != dims_.voxels() * channels_) {
    throw Error(ErrorCode::kDimsMismatch,
                "volume data length " + std::to_string(data_.size()) + " does not match " +
                    to_string(dims_) + "x" + std::to_string(channels_));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::kInvalidArgument, "volume contains non-finite values");
  }
}

std::span<const double> Volume::channel(std::size_t c) const {
  if (c >= channels_) throw Error(ErrorCode::kOutOfRange, "channel index out of range");
  return std::span<const double>(data_).subspan(c * voxels(), voxels());
}

std::span<double> Volume::channel(std::size_t c) {
  if (c >= channels_) throw Error(ErrorCode::kOutOfRange, "channel index out of range");
  return std::span<double>(data_).subspan(c * voxels(), voxels());
}

Mask::Mask(Dims dims, Spacing spacing)
    : Mask(dims, spacing, std::vector<std::uint8_t>(dims.voxels(), 0)) {}

Mask::Mask(Dims dims, Spacing spacing, std::vector<std::uint8_t> bits)
    : dims_(dims), spacing_(spacing), bits_(std::move(bits)) {
  check_grid(dims_, spacing_);
  if (bits_.size() != dims_.voxels()) {
    throw Error(ErrorCode::kDimsMismatch, "mask data length " + std::to_string(bits_.size()) +
                                              " does not match " + to_string(dims_));
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<Mask> masks_from_volume(const Volume& v) {
  std::vector<Mask> out;
  out.reserve(v.channels());
  for (std::size_t c = 0; c < v.channels(); ++c) {
    auto ch = v.channel(c);
    std::vector<std::uint8_t> bits(ch.size());
    std::transform(ch.begin(), ch.end(), bits.begin(),
                   [](double x) { return static_cast<std::uint8_t>(x > 0.0 ? 1 : 0); });
    out.emplace_back(v.dims(), v.spacing(), std::move(bits));
  }
  return out;
}

Volume volume_from_mask(const Mask& m) {
  std::vector<double> data(m.bits().begin(), m.bits().end());
  return Volume(m.dims(), 1, m.spacing(), std::move(data));
}

Volume normalize_minmax(const Volume& v) {
  Volume out = v;
  for (std::size_t c = 0; c < out.channels(); ++c) {
    auto ch = out.channel(c);
    const auto [lo_it, hi_it] = std::minmax_element(ch.begin(), ch.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (range <= 0.0) {
      std::fill(ch.begin(), ch.end(), 0.0);
      continue;
    }
    for (double& x : ch) x = std::clamp((x - lo) / range, 0.0, 1.0);
  }
  return out;
}

}  // namespace singr
