#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "singr/sing.hpp"
#include "singr/volume.hpp"

namespace singr {

/// SVOL: 36-byte little-endian header followed by f32 voxels in x, y, z, channel order.
///   char[4] "SVOL" | u32 version=1 | u32 nx, ny, nz | u32 channels | f32 sx, sy, sz
inline constexpr std::size_t kSvolHeaderSize = 36;
inline constexpr std::uint32_t kSvolVersion = 1;

void write_svol(const Volume& v, const std::filesystem::path& path);
void write_svol(const Mask& m, const std::filesystem::path& path);
/// Also writes `<path>.meta` with beta, tau, lambda and delta as key=value lines.
void write_svol(const SingMap& s, const std::filesystem::path& path);

Volume read_svol(const std::filesystem::path& path);

struct SingMeta {
  double beta = 0.0;
  double tau = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
};

std::filesystem::path meta_path(const std::filesystem::path& svol_path);
SingMeta read_sing_meta(const std::filesystem::path& meta_file);

/// NIfTI-1 single-file subset: uint8, int16 and float32 data, 3 or 4 dimensions,
/// optional gzip wrapping, scl_slope/scl_inter applied. Orientation is ignored.
Volume read_nifti(const std::filesystem::path& path);

enum class VolumeFormat { kSvol, kNifti };

std::optional<VolumeFormat> parse_volume_format(std::string_view text) noexcept;
std::optional<VolumeFormat> sniff_format(const std::filesystem::path& path);

/// Reads by explicit format, or by extension (.svol, .nii, .nii.gz) when absent.
Volume read_volume(const std::filesystem::path& path,
                   std::optional<VolumeFormat> format = std::nullopt);

/// Binary PGM (P5, 8-bit) of one axis-aligned slice, min-max scaled; constant slices are black.
/// axis: 0 = x, 1 = y, 2 = z.
std::vector<std::uint8_t> encode_slice_pgm(const Volume& v, int axis, std::size_t index,
                                           std::size_t channel = 0);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace singr
