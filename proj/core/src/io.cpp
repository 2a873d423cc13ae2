#include "singr/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <type_traits>

#include "singr/error.hpp"

namespace singr {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return bytes;
}

template <typename T>
T load(const std::uint8_t* p, bool swap) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), p, sizeof(T));
  if (swap) std::reverse(raw.begin(), raw.end());
  T v;
  std::memcpy(&v, raw.data(), sizeof(T));
  return v;
}

constexpr bool kHostLittle = std::endian::native == std::endian::little;

template <typename T>
T load_le(const std::uint8_t* p) {
  return load<T>(p, !kHostLittle);
}

template <typename T>
void store_le(std::vector<std::uint8_t>& out, T v) {
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), &v, sizeof(T));
  if (!kHostLittle) std::reverse(raw.begin(), raw.end());
  out.insert(out.end(), raw.begin(), raw.end());
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw Error(ErrorCode::kUnsupported, std::string(what) + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

void write_svol_raw(const Dims& dims, std::size_t channels, const Spacing& spacing,
                    std::span<const double> values, const fs::path& path) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(kSvolHeaderSize + values.size() * 4);
  bytes.insert(bytes.end(), {'S', 'V', 'O', 'L'});
  store_le<std::uint32_t>(bytes, kSvolVersion);
  store_le<std::uint32_t>(bytes, checked_u32(dims.nx, "nx"));
  store_le<std::uint32_t>(bytes, checked_u32(dims.ny, "ny"));
  store_le<std::uint32_t>(bytes, checked_u32(dims.nz, "nz"));
  store_le<std::uint32_t>(bytes, checked_u32(channels, "channels"));
  store_le<float>(bytes, static_cast<float>(spacing.sx));
  store_le<float>(bytes, static_cast<float>(spacing.sy));
  store_le<float>(bytes, static_cast<float>(spacing.sz));
  for (double v : values) store_le<float>(bytes, static_cast<float>(v));
  write_bytes(path, bytes);
}

}  // namespace

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

void write_svol(const Volume& v, const fs::path& path) {
  write_svol_raw(v.dims(), v.channels(), v.spacing(), v.values(), path);
}

void write_svol(const Mask& m, const fs::path& path) {
  const std::vector<double> values(m.bits().begin(), m.bits().end());
  write_svol_raw(m.dims(), 1, m.spacing(), values, path);
}

fs::path meta_path(const fs::path& svol_path) {
  fs::path p = svol_path;
  p += ".meta";
  return p;
}

void write_svol(const SingMap& s, const fs::path& path) {
  write_svol_raw(s.dims, 1, s.spacing, s.values, path);
  std::ostringstream meta;
  meta << std::setprecision(17);
  meta << "beta=" << s.beta << "\n"
       << "tau=" << s.tau << "\n"
       << "lambda=" << s.params.lambda << "\n"
       << "delta=" << s.params.delta << "\n";
  const std::string text = meta.str();
  write_bytes(meta_path(path), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SingMeta read_sing_meta(const fs::path& meta_file) {
  std::ifstream in(meta_file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + meta_file.string());
  SingMeta meta;
  int seen = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, "bad value for '" + key + "' in " + meta_file.string());
    }
    if (key == "beta") meta.beta = value, seen |= 1;
    else if (key == "tau") meta.tau = value, seen |= 2;
    else if (key == "lambda") meta.lambda = value, seen |= 4;
    else if (key == "delta") meta.delta = value, seen |= 8;
  }
  if (seen != 15) throw Error(ErrorCode::kFormat, "incomplete meta file " + meta_file.string());
  return meta;
}

Volume read_svol(const fs::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SVOL", 4) != 0) {
    throw Error(ErrorCode::kFormat, "bad magic in " + path.string() + " (expected \"SVOL\")");
  }
  if (bytes.size() < kSvolHeaderSize) {
    throw Error(ErrorCode::kFormat, "truncated header in " + path.string());
  }
  const std::uint8_t* p = bytes.data();
  const auto version = load_le<std::uint32_t>(p + 4);
  if (version != kSvolVersion) {
    throw Error(ErrorCode::kUnsupported, "unsupported SVOL version " + std::to_string(version) +
                                             " in " + path.string());
  }
  const Dims dims{load_le<std::uint32_t>(p + 8), load_le<std::uint32_t>(p + 12),
                  load_le<std::uint32_t>(p + 16)};
  const std::size_t channels = load_le<std::uint32_t>(p + 20);
  const Spacing spacing{load_le<float>(p + 24), load_le<float>(p + 28), load_le<float>(p + 32)};
  if (dims.voxels() == 0 || channels == 0) {
    throw Error(ErrorCode::kFormat, "zero dims or channels in " + path.string());
  }
  const std::size_t count = dims.voxels() * channels;
  const std::size_t expected = kSvolHeaderSize + count * 4;
  if (bytes.size() < expected) {
    throw Error(ErrorCode::kFormat, "truncated payload in " + path.string() + ": expected " +
                                        std::to_string(expected - kSvolHeaderSize) + " bytes, found " +
                                        std::to_string(bytes.size() - kSvolHeaderSize));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::kFormat, "trailing bytes after payload in " + path.string());
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = load_le<float>(p + kSvolHeaderSize + 4 * i);
  return Volume(dims, channels, spacing, std::move(data));
}

namespace {

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in, const fs::path& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw Error(ErrorCode::kIo, "zlib initialisation failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kFormat, "corrupt gzip stream in " + path.string());
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kFormat, "truncated gzip stream in " + path.string());
    }
  }
  inflateEnd(&zs);
  return out;
}

constexpr std::size_t kNiftiHeaderSize = 348;

}  // namespace

Volume read_nifti(const fs::path& path) {
  auto bytes = read_all(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) bytes = gunzip(bytes, path);
  if (bytes.size() < kNiftiHeaderSize) throw Error(ErrorCode::kFormat, "malformed NIfTI header: file too short");
  const std::uint8_t* h = bytes.data();

  bool swap = false;
  if (load<std::int32_t>(h, false) != 348) {
    if (load<std::int32_t>(h, true) != 348) {
      throw Error(ErrorCode::kFormat, "malformed NIfTI header: sizeof_hdr is not 348");
    }
    swap = true;
  }
  if (std::memcmp(h + 344, "n+1\0", 4) != 0) {
    if (std::memcmp(h + 344, "ni1\0", 4) == 0) {
      throw Error(ErrorCode::kUnsupported, "unsupported NIfTI: detached header/image pair (ni1)");
    }
    throw Error(ErrorCode::kFormat, "malformed NIfTI header: magic is not \"n+1\"");
  }

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = load<std::int16_t>(h + 40 + 2 * i, swap);
  const auto datatype = load<std::int16_t>(h + 70, swap);
  std::array<float, 8> pixdim{};
  for (int i = 0; i < 8; ++i) pixdim[i] = load<float>(h + 76 + 4 * i, swap);
  const float vox_offset = load<float>(h + 108, swap);
  const float scl_slope = load<float>(h + 112, swap);
  const float scl_inter = load<float>(h + 116, swap);

  if (dim[0] != 3 && dim[0] != 4) {
    throw Error(ErrorCode::kUnsupported, "unsupported NIfTI dimensionality dim[0]=" + std::to_string(dim[0]));
  }
  for (int i = 1; i <= dim[0]; ++i) {
    if (dim[i] < 1) throw Error(ErrorCode::kFormat, "malformed NIfTI header: dim[" + std::to_string(i) + "] < 1");
  }
  std::size_t elem = 0;
  switch (datatype) {
    case 2: elem = 1; break;
    case 4: elem = 2; break;
    case 16: elem = 4; break;
    default:
      throw Error(ErrorCode::kUnsupported, "unsupported NIfTI datatype " + std::to_string(datatype));
  }
  if (!(vox_offset >= static_cast<float>(kNiftiHeaderSize)) || !std::isfinite(vox_offset)) {
    throw Error(ErrorCode::kFormat, "malformed NIfTI header: vox_offset < 348");
  }

  const Dims dims{static_cast<std::size_t>(dim[1]), static_cast<std::size_t>(dim[2]),
                  static_cast<std::size_t>(dim[3])};
  const std::size_t channels = dim[0] == 4 ? static_cast<std::size_t>(dim[4]) : 1;
  auto axis_spacing = [](float p) {
    const double a = std::abs(static_cast<double>(p));
    return a > 0.0 && std::isfinite(a) ? a : 1.0;
  };
  const Spacing spacing{axis_spacing(pixdim[1]), axis_spacing(pixdim[2]), axis_spacing(pixdim[3])};

  const auto offset = static_cast<std::size_t>(vox_offset);
  const std::size_t count = dims.voxels() * channels;
  if (bytes.size() < offset + count * elem) {
    throw Error(ErrorCode::kFormat, "truncated NIfTI payload: expected " + std::to_string(count * elem) +
                                        " bytes after offset " + std::to_string(offset));
  }
  const bool scaled = scl_slope != 0.0f && std::isfinite(scl_slope);
  const double slope = scaled ? scl_slope : 1.0;
  const double inter = scaled && std::isfinite(scl_inter) ? scl_inter : 0.0;

  std::vector<double> data(count);
  const std::uint8_t* payload = bytes.data() + offset;
  for (std::size_t i = 0; i < count; ++i) {
    double raw = 0.0;
    switch (datatype) {
      case 2: raw = payload[i]; break;
      case 4: raw = load<std::int16_t>(payload + 2 * i, swap); break;
      case 16: raw = load<float>(payload + 4 * i, swap); break;
    }
    if (!std::isfinite(raw)) throw Error(ErrorCode::kFormat, "non-finite voxel value in " + path.string());
    data[i] = scaled ? slope * raw + inter : raw;
  }
  return Volume(dims, channels, spacing, std::move(data));
}

std::optional<VolumeFormat> parse_volume_format(std::string_view text) noexcept {
  if (text == "svol") return VolumeFormat::kSvol;
  if (text == "nifti" || text == "nii") return VolumeFormat::kNifti;
  return std::nullopt;
}

std::optional<VolumeFormat> sniff_format(const fs::path& path) {
  const std::string name = path.filename().string();
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".svol")) return VolumeFormat::kSvol;
  if (ends_with(".nii") || ends_with(".nii.gz")) return VolumeFormat::kNifti;
  return std::nullopt;
}

Volume read_volume(const fs::path& path, std::optional<VolumeFormat> format) {
  if (!format) format = sniff_format(path);
  if (!format) {
    throw Error(ErrorCode::kUnsupported, "cannot infer volume format of " + path.string() +
                                             " (expected .svol, .nii or .nii.gz)");
  }
  return *format == VolumeFormat::kSvol ? read_svol(path) : read_nifti(path);
}

std::vector<std::uint8_t> encode_slice_pgm(const Volume& v, int axis, std::size_t index,
                                           std::size_t channel) {
  const Dims& d = v.dims();
  if (axis < 0 || axis > 2) throw Error(ErrorCode::kInvalidArgument, "axis must be x, y or z");
  const std::size_t extent = axis == 0 ? d.nx : (axis == 1 ? d.ny : d.nz);
  if (index >= extent) {
    throw Error(ErrorCode::kOutOfRange, "slice index " + std::to_string(index) + " outside [0, " +
                                            std::to_string(extent) + ")");
  }
  const auto data = v.channel(channel);
  const std::size_t width = axis == 0 ? d.ny : d.nx;
  const std::size_t height = axis == 2 ? d.ny : d.nz;

  std::vector<double> slice;
  slice.reserve(width * height);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      GridIndex g;
      if (axis == 0) g = {index, c, r};
      else if (axis == 1) g = {c, index, r};
      else g = {c, r, index};
      slice.push_back(data[linear_index(g, d)]);
    }
  }
  const auto [lo, hi] = std::minmax_element(slice.begin(), slice.end());
  const double low = *lo, range = *hi - *lo;

  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double s : slice) {
    const double scaled = range > 0.0 ? (s - low) / range * 255.0 : 0.0;
    out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(scaled), 0L, 255L)));
  }
  return out;
}

}  // namespace singr
