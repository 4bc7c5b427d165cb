#pragma once

// Pixel-level transforms. These take and return only an ImagePlane, so they
// cannot touch vessel or FOV masks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vesselaug/filter.hpp"
#include "vesselaug/image.hpp"
#include "vesselaug/rng.hpp"

namespace vesselaug {

/// Noise standard deviation on the 0-255 intensity scale.
struct WhiteNoiseParams {
  double epsilon = 10.0;
};

struct PixelDropoutParams {
  double p = 0.05;
};

struct GammaParams {
  double gamma = 1.0;
  static constexpr double min_gamma = 0.25;
  static constexpr double max_gamma = 4.0;
};

struct FilterParams {
  double blur_sigma = 1.0;
  double sharpen_amount = 0.0;
  double contrast_factor = 1.0;
};

namespace detail {

template <typename Fn>
ImagePlane map_samples(const ImagePlane& image, Fn&& fn) {
  std::vector<float> out(image.data().begin(), image.data().end());
  for (float& v : out) v = fn(v);
  return ImagePlane(image.width(), image.height(), image.channels(), std::move(out));
}

/// Unchecked variant used to verify the zero-noise limit in tests.
inline ImagePlane white_noise_unchecked(const ImagePlane& image, double epsilon,
                                        RandomStream& rng) {
  const double scale = epsilon / 255.0;
  std::vector<float> out(image.data().begin(), image.data().end());
  for (float& v : out) v = static_cast<float>(v + scale * rng.normal());
  return ImagePlane(image.width(), image.height(), image.channels(), std::move(out));
}

}  // namespace detail

/// out = clip(in + n/255), n ~ N(0, epsilon^2) drawn per sample and channel
/// in storage order.
inline ImagePlane white_noise(const ImagePlane& image, const WhiteNoiseParams& params,
                              RandomStream& rng) {
  if (!(params.epsilon >= 1.0)) {
    throw ParameterError("noise: epsilon must be >= 1 on the 0-255 scale");
  }
  return detail::white_noise_unchecked(image, params.epsilon, rng);
}

inline ImagePlane gamma_correct(const ImagePlane& image, const GammaParams& params) {
  if (!(params.gamma >= GammaParams::min_gamma && params.gamma <= GammaParams::max_gamma)) {
    throw ParameterError("gamma: exponent " + std::to_string(params.gamma) +
                         " outside [0.25,4]");
  }
  if (params.gamma == 1.0) return image;
  const double g = params.gamma;
  return detail::map_samples(image, [g](float v) { return static_cast<float>(std::pow(v, g)); });
}

/// Histogram bin of a sample: round(v * 255).
inline int histogram_bin(float v) { return static_cast<int>(std::lround(v * 255.0f)); }

/// Global per-channel equalization over 256 bins. Each sample maps to
/// (CDF(bin) - CDF(first occupied)) / (1 - CDF(first occupied)); a channel
/// with a single occupied bin is left unchanged.
inline ImagePlane equalize_hist(const ImagePlane& image) {
  const int channels = image.channels();
  const std::size_t n = image.pixel_count();
  const auto src = image.data();
  std::vector<float> out(src.begin(), src.end());

  for (int c = 0; c < channels; ++c) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t i = 0; i < n; ++i) ++hist[histogram_bin(src[i * channels + c])];

    std::array<double, 256> cdf{};
    std::size_t run = 0;
    int first = -1;
    int occupied = 0;
    for (int b = 0; b < 256; ++b) {
      if (hist[b] > 0) {
        if (first < 0) first = b;
        ++occupied;
      }
      run += hist[b];
      cdf[b] = static_cast<double>(run) / static_cast<double>(n);
    }
    if (occupied <= 1) continue;
    const double base = cdf[first];
    const double range = 1.0 - base;
    for (std::size_t i = 0; i < n; ++i) {
      const int b = histogram_bin(src[i * channels + c]);
      out[i * channels + c] = static_cast<float>((cdf[b] - base) / range);
    }
  }
  return ImagePlane(image.width(), image.height(), channels, std::move(out));
}

/// Zeroes each pixel location (all channels) with probability p. One uniform
/// draw per pixel in row-major order.
inline ImagePlane pixel_dropout(const ImagePlane& image, const PixelDropoutParams& params,
                                RandomStream& rng) {
  if (!(params.p >= 0.0 && params.p <= 1.0)) {
    throw ParameterError("dropout: p must lie in [0,1]");
  }
  const int channels = image.channels();
  std::vector<float> out(image.data().begin(), image.data().end());
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    if (rng.uniform() < params.p) {
      for (int c = 0; c < channels; ++c) out[i * channels + c] = 0.0f;
    }
  }
  return ImagePlane(image.width(), image.height(), channels, std::move(out));
}

/// Gaussian blur, kernel truncated at 3 sigma, reflect border.
inline ImagePlane blur(const ImagePlane& image, const FilterParams& params) {
  if (!(params.blur_sigma > 0.0)) throw ParameterError("blur: sigma must be > 0");
  std::vector<float> src(image.data().begin(), image.data().end());
  auto out = detail::separable_convolve(src, image.width(), image.height(), image.channels(),
                                        gaussian_kernel(params.blur_sigma));
  return ImagePlane(image.width(), image.height(), image.channels(), std::move(out));
}

/// Unsharp mask: clip(in + amount * (in - blur(in, sigma))).
inline ImagePlane sharpen(const ImagePlane& image, const FilterParams& params) {
  if (!(params.sharpen_amount >= 0.0)) throw ParameterError("sharpen: amount must be >= 0");
  if (params.sharpen_amount == 0.0) return image;
  const ImagePlane blurred = blur(image, params);
  const auto src = image.data();
  const auto low = blurred.data();
  std::vector<float> out(src.size());
  const double a = params.sharpen_amount;
  for (std::size_t i = 0; i < src.size(); ++i) {
    out[i] = static_cast<float>(src[i] + a * (static_cast<double>(src[i]) - low[i]));
  }
  return ImagePlane(image.width(), image.height(), image.channels(), std::move(out));
}

/// clip(mean + factor * (in - mean)) with the mean taken per channel.
inline ImagePlane adjust_contrast(const ImagePlane& image, const FilterParams& params) {
  if (!(params.contrast_factor >= 0.0)) throw ParameterError("contrast: factor must be >= 0");
  if (params.contrast_factor == 1.0) return image;
  const int channels = image.channels();
  const std::size_t n = image.pixel_count();
  const auto src = image.data();
  std::vector<double> mean(channels, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) mean[c] += src[i * channels + c];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<float> out(src.size());
  const double f = params.contrast_factor;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) {
      out[i * channels + c] = static_cast<float>(mean[c] + f * (src[i * channels + c] - mean[c]));
    }
  }
  return ImagePlane(image.width(), image.height(), channels, std::move(out));
}

}  // namespace vesselaug
