#pragma once

// Backward-warp kernel shared by all geometric transforms.
//
// Pixel centers sit at integer coordinates; x indexes columns, y rows.
// A CoordinateMap stores, for every output pixel, the source coordinate to
// sample. Reflection is symmetric about the raster edge (-1 -> 0,
// width -> width-1), which keeps normalized filters mean-preserving.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "vesselaug/image.hpp"

namespace vesselaug {

enum class Interpolation { bilinear, nearest };
enum class Border { reflect, constant_zero };

struct CoordinateMap {
  int width = 0;
  int height = 0;
  std::vector<double> x;
  std::vector<double> y;

  CoordinateMap() = default;
  CoordinateMap(int w, int h)
      : width(w), height(h), x(static_cast<std::size_t>(w) * h), y(static_cast<std::size_t>(w) * h) {}

  std::size_t index(int px, int py) const { return static_cast<std::size_t>(py) * width + px; }

  static CoordinateMap identity(int w, int h) {
    CoordinateMap map(w, h);
    for (int py = 0; py < h; ++py) {
      for (int px = 0; px < w; ++px) {
        map.x[map.index(px, py)] = px;
        map.y[map.index(px, py)] = py;
      }
    }
    return map;
  }

  /// Builds a map from a callable `fn(px, py) -> std::pair<double,double>`.
  template <typename Fn>
  static CoordinateMap from_function(int w, int h, Fn&& fn) {
    CoordinateMap map(w, h);
    for (int py = 0; py < h; ++py) {
      for (int px = 0; px < w; ++px) {
        const auto [sx, sy] = fn(px, py);
        map.x[map.index(px, py)] = sx;
        map.y[map.index(px, py)] = sy;
      }
    }
    return map;
  }
};

namespace detail {

/// Symmetric reflection of an integer index into [0, n).
inline int reflect_index(long long i, int n) {
  if (i >= 0 && i < n) return static_cast<int>(i);
  const long long period = 2LL * n;
  long long m = i % period;
  if (m < 0) m += period;
  return static_cast<int>(m < n ? m : period - 1 - m);
}

/// Core kernel over interleaved samples of type T with `channels` per pixel.
/// `fetch` for constant border yields zero outside the raster.
template <typename T>
std::vector<T> resample_samples(const T* src, int width, int height, int channels,
                                const CoordinateMap& map, Interpolation interp, Border border) {
  std::vector<T> out(static_cast<std::size_t>(map.width) * map.height * channels, T{});
  const bool reflect = border == Border::reflect;

  for (int py = 0; py < map.height; ++py) {
    for (int px = 0; px < map.width; ++px) {
      const std::size_t o = map.index(px, py);
      const double sx = map.x[o];
      const double sy = map.y[o];
      T* dst = out.data() + o * channels;
      if (!std::isfinite(sx) || !std::isfinite(sy)) continue;

      if (interp == Interpolation::nearest) {
        long long ix = static_cast<long long>(std::floor(sx + 0.5));
        long long iy = static_cast<long long>(std::floor(sy + 0.5));
        if (reflect) {
          ix = reflect_index(ix, width);
          iy = reflect_index(iy, height);
        } else if (ix < 0 || iy < 0 || ix >= width || iy >= height) {
          continue;
        }
        const T* s = src + (static_cast<std::size_t>(iy) * width + ix) * channels;
        for (int c = 0; c < channels; ++c) dst[c] = s[c];
        continue;
      }

      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double ax = sx - fx0;
      const double ay = sy - fy0;
      const long long x0 = static_cast<long long>(fx0);
      const long long y0 = static_cast<long long>(fy0);
      const long long xs[2] = {x0, x0 + 1};
      const long long ys[2] = {y0, y0 + 1};
      const double wx[2] = {1.0 - ax, ax};
      const double wy[2] = {1.0 - ay, ay};

      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      for (int j = 0; j < 2; ++j) {
        if (wy[j] == 0.0) continue;
        long long yy = ys[j];
        if (reflect) {
          yy = reflect_index(yy, height);
        } else if (yy < 0 || yy >= height) {
          continue;
        }
        for (int i = 0; i < 2; ++i) {
          if (wx[i] == 0.0) continue;
          long long xx = xs[i];
          if (reflect) {
            xx = reflect_index(xx, width);
          } else if (xx < 0 || xx >= width) {
            continue;
          }
          const double w = wx[i] * wy[j];
          const T* s = src + (static_cast<std::size_t>(yy) * width + xx) * channels;
          for (int c = 0; c < channels; ++c) acc[c] += w * static_cast<double>(s[c]);
        }
      }
      for (int c = 0; c < channels; ++c) dst[c] = static_cast<T>(acc[c]);
    }
  }
  return out;
}

}  // namespace detail

inline ImagePlane resample(const ImagePlane& image, const CoordinateMap& map, Interpolation interp,
                           Border border) {
  auto out = detail::resample_samples(image.data().data(), image.width(), image.height(),
                                      image.channels(), map, interp, border);
  return ImagePlane(map.width, map.height, image.channels(), std::move(out));
}

/// Masks are always resampled with nearest interpolation so the output stays
/// binary.
inline BinaryMask resample(const BinaryMask& mask, const CoordinateMap& map, Border border) {
  auto out = detail::resample_samples(mask.data().data(), mask.width(), mask.height(), 1, map,
                                      Interpolation::nearest, border);
  return BinaryMask(map.width, map.height, std::move(out));
}

/// Applies one map to every plane of a sample: the image with bilinear
/// interpolation and `image_border`, vessel and FOV masks with nearest
/// interpolation and a zero border.
inline Sample warp_sample(const Sample& sample, const CoordinateMap& map,
                          Border image_border = Border::reflect) {
  ImagePlane image = resample(sample.image(), map, Interpolation::bilinear, image_border);
  BinaryMask vessels = resample(sample.vessels(), map, Border::constant_zero);
  std::optional<BinaryMask> fov;
  if (sample.fov()) fov = resample(*sample.fov(), map, Border::constant_zero);
  return Sample(std::move(image), std::move(vessels), std::move(fov), sample.id());
}

}  // namespace vesselaug
