/* C ABI for the transform and loss. Callers allocate every buffer; the
 * library never keeps a pointer past the call. */
#ifndef SINGR_FFI_H_
#define SINGR_FFI_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SINGR_FFI_OK 0
#define SINGR_FFI_INVALID_ARGUMENT (-1)
#define SINGR_FFI_DIMS_MISMATCH (-2)
#define SINGR_FFI_OUT_OF_RANGE (-3)
#define SINGR_FFI_IO (-4)
#define SINGR_FFI_FORMAT (-5)
#define SINGR_FFI_UNSUPPORTED (-6)
#define SINGR_FFI_DIVERGENCE (-7)
#define SINGR_FFI_INTERNAL (-100)

/* Warning flag bits written through `warnings_out`. */
#define SINGR_FFI_WARN_EMPTY_MASK 0x1u
#define SINGR_FFI_WARN_FULL_MASK 0x2u
#define SINGR_FFI_WARN_ZERO_TAU 0x4u

typedef struct singr_ffi_v1_shape {
  uint32_t nx, ny, nz;
  uint32_t channels;
  float spacing[3];
} singr_ffi_v1_shape;

uint32_t singr_ffi_v1_abi_version(void);

/* image: image_shape.channels * voxels floats; mask: mask_shape voxels bytes
 * (non-zero = foreground, single channel); out: voxels floats. */
int singr_ffi_v1_sing_transform(const float* image, singr_ffi_v1_shape image_shape,
                                const uint8_t* mask, singr_ffi_v1_shape mask_shape,
                                double lambda, double delta, float* out, size_t out_len,
                                double* beta_out, double* tau_out, uint32_t* warnings_out);

/* Mean Focal-L1 over n voxels. grad_out receives d loss / d z, grad_logit_out
 * (nullable) receives d loss / d logit. */
int singr_ffi_v1_focal_l1(const float* s, const float* z, size_t n, double gamma, double epsilon,
                          float* grad_out, float* grad_logit_out, double* loss_out);

const char* singr_ffi_v1_status_name(int status);

#ifdef __cplusplus
}
#endif

#endif /* SINGR_FFI_H_ */
