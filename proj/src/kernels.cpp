#include "kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <utility>

namespace ddist::kernels {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

template <typename Product>
void store(Map c, const Product& product, bool accumulate) {
  if (accumulate) {
    c.noalias() += product;
  } else {
    c.noalias() = product;
  }
}

}  // namespace

void gemm_nn(std::span<const float> a, std::span<const float> b, std::span<float> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const auto rows = static_cast<Eigen::Index>(m), inner = static_cast<Eigen::Index>(k),
             cols = static_cast<Eigen::Index>(n);
  store(Map(c.data(), rows, cols), ConstMap(a.data(), rows, inner) * ConstMap(b.data(), inner, cols),
        accumulate);
}

void gemm_nt(std::span<const float> a, std::span<const float> b, std::span<float> c,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  const auto rows = static_cast<Eigen::Index>(m), inner = static_cast<Eigen::Index>(n),
             cols = static_cast<Eigen::Index>(k);
  store(Map(c.data(), rows, cols),
        ConstMap(a.data(), rows, inner) * ConstMap(b.data(), cols, inner).transpose(), accumulate);
}

void gemm_tn(std::span<const float> a, std::span<const float> b, std::span<float> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const auto rows = static_cast<Eigen::Index>(k), inner = static_cast<Eigen::Index>(m),
             cols = static_cast<Eigen::Index>(n);
  store(Map(c.data(), rows, cols),
        ConstMap(a.data(), inner, rows).transpose() * ConstMap(b.data(), inner, cols), accumulate);
}

namespace {

// Output columns [lo, hi) whose tap at kernel column kx lands inside the image.
std::pair<std::size_t, std::size_t> valid_columns(const ConvGeometry& g, std::size_t kx) {
  const auto pad = static_cast<std::ptrdiff_t>(g.pad_w), k = static_cast<std::ptrdiff_t>(kx);
  const auto lo = std::clamp<std::ptrdiff_t>(pad - k, 0, static_cast<std::ptrdiff_t>(g.out_w));
  const auto hi = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.width) + pad - k, lo,
                                             static_cast<std::ptrdiff_t>(g.out_w));
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

void im2col(std::span<const float> image, const ConvGeometry& g, float* cols, std::size_t stride) {
  std::size_t row = 0;
  for (std::size_t ch = 0; ch < g.channels; ++ch) {
    const float* plane = image.data() + ch * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx, ++row) {
        const auto [lo, hi] = valid_columns(g, kx);
        float* out = cols + row * stride;
        for (std::size_t oy = 0; oy < g.out_h; ++oy, out += g.out_w) {
          const auto iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(g.pad_h);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(out, out + g.out_w, 0.0f);
            continue;
          }
          // Offset of output column 0's tap; only columns in [lo, hi) are read.
          const auto base = iy * static_cast<std::ptrdiff_t>(g.width) + static_cast<std::ptrdiff_t>(kx) -
                            static_cast<std::ptrdiff_t>(g.pad_w);
          std::fill(out, out + lo, 0.0f);
          std::copy(plane + base + static_cast<std::ptrdiff_t>(lo), plane + base + static_cast<std::ptrdiff_t>(hi),
                    out + lo);
          std::fill(out + hi, out + g.out_w, 0.0f);
        }
      }
    }
  }
}

void col2im(const float* cols, std::size_t stride, const ConvGeometry& g, std::span<float> image) {
  std::size_t row = 0;
  for (std::size_t ch = 0; ch < g.channels; ++ch) {
    float* plane = image.data() + ch * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx, ++row) {
        const auto [lo, hi] = valid_columns(g, kx);
        const float* in = cols + row * stride;
        for (std::size_t oy = 0; oy < g.out_h; ++oy, in += g.out_w) {
          const auto iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(g.pad_h);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          const auto base = iy * static_cast<std::ptrdiff_t>(g.width) + static_cast<std::ptrdiff_t>(kx) -
                            static_cast<std::ptrdiff_t>(g.pad_w);
          for (std::size_t ox = lo; ox < hi; ++ox) plane[base + static_cast<std::ptrdiff_t>(ox)] += in[ox];
        }
      }
    }
  }
}

}  // namespace ddist::kernels
