#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace singr {

/// Grid extent. 2D data is represented with nz == 1.
struct Dims {
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::size_t nz = 1;

  std::size_t voxels() const noexcept { return nx * ny * nz; }
  bool operator==(const Dims&) const = default;
};

std::string to_string(const Dims& dims);

/// Voxel size in millimetres.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  double axis(int a) const noexcept { return a == 0 ? sx : (a == 1 ? sy : sz); }
  bool operator==(const Spacing&) const = default;
};

struct GridIndex {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t z = 0;

  bool operator==(const GridIndex&) const = default;
  auto operator<=>(const GridIndex&) const = default;
};

// Linearization is x fastest, then y, then z, then channel.
inline std::size_t linear_index(const GridIndex& idx, const Dims& dims) noexcept {
  return idx.x + dims.nx * (idx.y + dims.ny * idx.z);
}

inline GridIndex grid_index(std::size_t linear, const Dims& dims) noexcept {
  GridIndex idx;
  idx.x = linear % dims.nx;
  linear /= dims.nx;
  idx.y = linear % dims.ny;
  idx.z = linear / dims.ny;
  return idx;
}

inline bool in_bounds(const GridIndex& idx, const Dims& dims) noexcept {
  return idx.x < dims.nx && idx.y < dims.ny && idx.z < dims.nz;
}

/// Integer step between neighbouring voxels.
struct Offset {
  int dx = 0;
  int dy = 0;
  int dz = 0;

  int l1() const noexcept;
  bool operator==(const Offset&) const = default;
};

/// Offsets admitted by a connectivity, in lexicographic (dz, dy, dx) order,
/// which is also increasing linear-offset order. Valid values are 6, 18, 26
/// and the planar 4 and 8 (no z component).
std::vector<Offset> neighbor_offsets(int connectivity);

bool is_valid_connectivity(int connectivity) noexcept;

/// In-bounds neighbours of `idx`, ordered as neighbor_offsets().
std::vector<GridIndex> neighbors(const GridIndex& idx, const Dims& dims, int connectivity);

/// Multi-channel real-valued 3D image.
class Volume {
 public:
  Volume() = default;
  Volume(Dims dims, std::size_t channels, Spacing spacing);
  Volume(Dims dims, std::size_t channels, Spacing spacing, std::vector<double> data);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t channels() const noexcept { return channels_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  std::size_t voxels() const noexcept { return dims_.voxels(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  std::span<const double> channel(std::size_t c) const;
  std::span<double> channel(std::size_t c);

  double at(const GridIndex& idx, std::size_t c = 0) const {
    return data_[linear_index(idx, dims_) + c * voxels()];
  }

 private:
  Dims dims_{};
  std::size_t channels_ = 1;
  Spacing spacing_{};
  std::vector<double> data_ = std::vector<double>(1, 0.0);
};

/// Binary voxel grid; one byte per voxel holding 0 or 1.
class Mask {
 public:
  Mask() = default;
  Mask(Dims dims, Spacing spacing);
  Mask(Dims dims, Spacing spacing, std::vector<std::uint8_t> bits);

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  std::size_t voxels() const noexcept { return dims_.voxels(); }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  bool at(const GridIndex& idx) const { return bits_[linear_index(idx, dims_)] != 0; }
  bool operator[](std::size_t linear) const { return bits_[linear] != 0; }
  void set(std::size_t linear, bool value) { bits_[linear] = value ? 1 : 0; }

  std::size_t count() const noexcept;

  bool operator==(const Mask&) const = default;

 private:
  Dims dims_{};
  Spacing spacing_{};
  std::vector<std::uint8_t> bits_ = std::vector<std::uint8_t>(1, 0);
};

/// Splits a label volume into one mask per channel; voxels with value > 0 are foreground.
std::vector<Mask> masks_from_volume(const Volume& v);

Volume volume_from_mask(const Mask& m);

/// Per-channel affine map onto [0, 1]; constant channels become all zeros.
Volume normalize_minmax(const Volume& v);

}  // namespace singr
