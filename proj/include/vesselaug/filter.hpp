#pragma once

// Separable Gaussian filtering over interleaved float rasters.

#include <cmath>
#include <cstddef>
#include <vector>

#include "vesselaug/resample.hpp"

namespace vesselaug {

/// Normalized 1-D Gaussian taps, truncated at ceil(3*sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("gaussian_kernel: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace detail {

/// Convolves interleaved samples with `taps` along x then y, reflecting at
/// the edges. Accumulates in double.
template <typename T>
std::vector<T> separable_convolve(const std::vector<T>& src, int width, int height, int channels,
                                  const std::vector<double>& taps) {
  const int radius = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(src.size());
  std::vector<int> idx(static_cast<std::size_t>(width) + 2 * radius);

  for (int i = 0; i < width + 2 * radius; ++i) idx[i] = reflect_index(i - radius, width);
  for (int y = 0; y < height; ++y) {
    const T* row = src.data() + static_cast<std::size_t>(y) * width * channels;
    double* out = tmp.data() + static_cast<std::size_t>(y) * width * channels;
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int k = 0; k <= 2 * radius; ++k) {
          acc += taps[k] * static_cast<double>(row[idx[x + k] * channels + c]);
        }
        out[x * channels + c] = acc;
      }
    }
  }

  std::vector<T> result(src.size());
  idx.assign(static_cast<std::size_t>(height) + 2 * radius, 0);
  for (int i = 0; i < height + 2 * radius; ++i) idx[i] = reflect_index(i - radius, height);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<double> acc(stride);
  for (int y = 0; y < height; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = 0; k <= 2 * radius; ++k) {
      const double* row = tmp.data() + static_cast<std::size_t>(idx[y + k]) * stride;
      const double t = taps[k];
      for (std::size_t i = 0; i < stride; ++i) acc[i] += t * row[i];
    }
    T* out = result.data() + static_cast<std::size_t>(y) * stride;
    for (std::size_t i = 0; i < stride; ++i) out[i] = static_cast<T>(acc[i]);
  }
  return result;
}

}  // namespace detail

/// Gaussian smoothing of a scalar field (no clipping).
inline std::vector<double> gaussian_smooth(const std::vector<double>& field, int width, int height,
                                           double sigma) {
  return detail::separable_convolve(field, width, height, 1, gaussian_kernel(sigma));
}

}  // namespace vesselaug
