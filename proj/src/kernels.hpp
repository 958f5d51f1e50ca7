#pragma once

// Dense kernels shared by the graph ops. Row-major float32 throughout.
// Results are deterministic for a given build and machine.

#include <cstddef>
#include <span>

namespace ddist::kernels {

/// c[m,n] (+)= a[m,k] * b[k,n]
void gemm_nn(std::span<const float> a, std::span<const float> b, std::span<float> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);

/// c[m,k] (+)= a[m,n] * b[k,n]^T
void gemm_nt(std::span<const float> a, std::span<const float> b, std::span<float> c,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate);

/// c[k,n] (+)= a[m,k]^T * b[m,n]
void gemm_tn(std::span<const float> a, std::span<const float> b, std::span<float> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kernel_h, kernel_w;
  std::size_t pad_h, pad_w;
  std::size_t out_h, out_w;

  std::size_t patch() const { return channels * kernel_h * kernel_w; }
  std::size_t positions() const { return out_h * out_w; }
};

/// image [C,H,W] -> cols [C*kh*kw, out_h*out_w], rows `stride` floats apart.
void im2col(std::span<const float> image, const ConvGeometry& g, float* cols, std::size_t stride);

/// Scatter-add of cols (rows `stride` floats apart) back into image.
void col2im(const float* cols, std::size_t stride, const ConvGeometry& g, std::span<float> image);

}  // namespace ddist::kernels
