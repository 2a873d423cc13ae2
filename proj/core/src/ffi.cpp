#include "singr/ffi.h"

#include <cmath>
#include <exception>
#include <vector>

#include "singr/error.hpp"
#include "singr/loss.hpp"
#include "singr/sing.hpp"

namespace {

using singr::Dims;
using singr::Spacing;

int status_of(const singr::Error& e) { return static_cast<int>(e.code()); }

template <typename Fn>
int guarded(Fn&& fn) noexcept {
  try {
    return fn();
  } catch (const singr::Error& e) {
    return status_of(e);
  } catch (...) {
    return SINGR_FFI_INTERNAL;
  }
}

Dims dims_of(const singr_ffi_v1_shape& s) { return Dims{s.nx, s.ny, s.nz}; }
Spacing spacing_of(const singr_ffi_v1_shape& s) { return Spacing{s.spacing[0], s.spacing[1], s.spacing[2]}; }

}  // namespace

extern "C" {

uint32_t singr_ffi_v1_abi_version(void) { return 1; }

int singr_ffi_v1_sing_transform(const float* image, singr_ffi_v1_shape image_shape,
                                const uint8_t* mask, singr_ffi_v1_shape mask_shape,
                                double lambda, double delta, float* out, size_t out_len,
                                double* beta_out, double* tau_out, uint32_t* warnings_out) {
  return guarded([&]() -> int {
    if (image == nullptr || mask == nullptr || out == nullptr) return SINGR_FFI_INVALID_ARGUMENT;
    if (mask_shape.channels != 1) return SINGR_FFI_INVALID_ARGUMENT;
    const Dims idims = dims_of(image_shape);
    const Dims mdims = dims_of(mask_shape);
    if (!(idims == mdims)) return SINGR_FFI_DIMS_MISMATCH;
    if (out_len != mdims.voxels()) return SINGR_FFI_DIMS_MISMATCH;

    const std::size_t n = idims.voxels() * image_shape.channels;
    singr::Volume vol(idims, image_shape.channels, spacing_of(image_shape),
                      std::vector<double>(image, image + n));
    singr::Mask m(mdims, spacing_of(mask_shape), std::vector<std::uint8_t>(mask, mask + mdims.voxels()));

    singr::SingParams params;
    params.lambda = lambda;
    params.delta = delta;
    const singr::SingMap s = singr::sing_transform(vol, m, params);
    for (std::size_t i = 0; i < s.values.size(); ++i) out[i] = static_cast<float>(s.values[i]);
    if (beta_out) *beta_out = s.beta;
    if (tau_out) *tau_out = s.tau;
    if (warnings_out) *warnings_out = s.warnings;
    return SINGR_FFI_OK;
  });
}

int singr_ffi_v1_focal_l1(const float* s, const float* z, size_t n, double gamma, double epsilon,
                          float* grad_out, float* grad_logit_out, double* loss_out) {
  return guarded([&]() -> int {
    if (s == nullptr || z == nullptr || grad_out == nullptr || loss_out == nullptr) {
      return SINGR_FFI_INVALID_ARGUMENT;
    }
    const std::vector<double> sv(s, s + n), zv(z, z + n);
    const singr::LossReport r = singr::focal_l1(sv, zv, singr::LossConfig{gamma, epsilon});
    for (std::size_t i = 0; i < n; ++i) grad_out[i] = static_cast<float>(r.grad_wrt_z[i]);
    if (grad_logit_out) {
      for (std::size_t i = 0; i < n; ++i) grad_logit_out[i] = static_cast<float>(r.grad_wrt_logit[i]);
    }
    *loss_out = r.loss;
    return SINGR_FFI_OK;
  });
}

const char* singr_ffi_v1_status_name(int status) {
  if (status == SINGR_FFI_OK) return "ok";
  if (status == SINGR_FFI_INTERNAL) return "internal error";
  if (status >= SINGR_FFI_DIVERGENCE && status <= SINGR_FFI_INVALID_ARGUMENT) {
    return singr::to_string(static_cast<singr::ErrorCode>(status));
  }
  return "unknown status";
}

}  // extern "C"
