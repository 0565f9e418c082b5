#pragma once

#include <cstddef>
#include <stdexcept>

namespace ctag {

/// Convolution geometry: input w x h with `in` channels, `out` filters of
/// size kernel x kernel, padding and stride.
struct ConvParams {
  std::size_t w = 0;
  std::size_t h = 0;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 1;
  std::size_t pad = 0;
  std::size_t stride = 1;

  std::size_t out_w() const { return out_extent(w); }
  std::size_t out_h() const { return out_extent(h); }

  friend bool operator==(const ConvParams&, const ConvParams&) = default;

 private:
  std::size_t out_extent(std::size_t extent) const {
    if (stride == 0) throw std::invalid_argument("conv: stride must be positive");
    if (extent + 2 * pad < kernel) throw std::invalid_argument("conv: non-positive output size");
    return (extent + 2 * pad - kernel) / stride + 1;
  }
};

struct MatmulShape {
  std::size_t t1 = 0;
  std::size_t t2 = 0;
  std::size_t t3 = 0;
  friend bool operator==(const MatmulShape&, const MatmulShape&) = default;
};

/// im2col shape: one row per output pixel, one column per (ky, kx, channel).
inline MatmulShape conv_dims(const ConvParams& c) {
  if (c.w == 0 || c.h == 0 || c.in == 0 || c.out == 0 || c.kernel == 0) {
    throw std::invalid_argument("conv: dimensions must be positive");
  }
  return {c.out_w() * c.out_h(), c.in * c.kernel * c.kernel, c.out};
}

}  // namespace ctag
