#pragma once

// Affine-family transforms: rotation, flipping, zoom-out, random cropping,
// shifting and shearing. Every op moves image, vessels and FOV together.
//
// Geometric maps are expressed about the raster center
// ((width-1)/2, (height-1)/2) and applied backwards: each output pixel
// looks up its source coordinate.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vesselaug/image.hpp"
#include "vesselaug/resample.hpp"
#include "vesselaug/rng.hpp"

namespace vesselaug {

enum class FlipAxis { none, horizontal, vertical, both };
enum class ShearAxis { x, y };

inline std::string_view to_string(FlipAxis axis) {
  switch (axis) {
    case FlipAxis::none: return "none";
    case FlipAxis::horizontal: return "horizontal";
    case FlipAxis::vertical: return "vertical";
    case FlipAxis::both: return "both";
  }
  return "none";
}

inline FlipAxis parse_flip_axis(std::string_view name) {
  if (name == "none") return FlipAxis::none;
  if (name == "horizontal") return FlipAxis::horizontal;
  if (name == "vertical") return FlipAxis::vertical;
  if (name == "both") return FlipAxis::both;
  throw ParameterError("unknown flip axis '" + std::string(name) + "'");
}

inline std::string_view to_string(ShearAxis axis) { return axis == ShearAxis::x ? "x" : "y"; }

inline ShearAxis parse_shear_axis(std::string_view name) {
  if (name == "x") return ShearAxis::x;
  if (name == "y") return ShearAxis::y;
  throw ParameterError("unknown shear axis '" + std::string(name) + "'");
}

namespace detail {

/// Permutes pixels of every plane with an integer index map; `src_index`
/// returns -1 for pixels that should be filled with zero.
template <typename IndexFn>
Sample permute_sample(const Sample& sample, int out_w, int out_h, IndexFn&& src_index) {
  const int channels = sample.image().channels();
  const std::size_t n = static_cast<std::size_t>(out_w) * out_h;
  std::vector<float> image(n * channels, 0.0f);
  std::vector<std::uint8_t> vessels(n, 0);
  std::vector<std::uint8_t> fov(sample.fov() ? n : 0, 0);
  const auto img = sample.image().data();
  const auto ves = sample.vessels().data();
  const int src_w = sample.width();

  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const auto [sx, sy] = src_index(x, y);
      if (sx < 0 || sy < 0) continue;
      const std::size_t o = static_cast<std::size_t>(y) * out_w + x;
      const std::size_t s = static_cast<std::size_t>(sy) * src_w + sx;
      for (int c = 0; c < channels; ++c) image[o * channels + c] = img[s * channels + c];
      vessels[o] = ves[s];
      if (sample.fov()) fov[o] = sample.fov()->data()[s];
    }
  }
  std::optional<BinaryMask> fov_mask;
  if (sample.fov()) fov_mask = BinaryMask(out_w, out_h, std::move(fov));
  return Sample(ImagePlane(out_w, out_h, channels, std::move(image)),
                BinaryMask(out_w, out_h, std::move(vessels)), std::move(fov_mask), sample.id());
}

}  // namespace detail

/// Source-coordinate map for a rotation by `angle_degrees` about the center.
/// Multiples of 90 degrees use exact trigonometric values.
inline CoordinateMap rotation_map(int width, int height, double angle_degrees) {
  double turns = std::fmod(angle_degrees, 360.0);
  if (turns < 0) turns += 360.0;
  double c = std::cos(turns * std::numbers::pi / 180.0);
  double s = std::sin(turns * std::numbers::pi / 180.0);
  if (turns == 0.0) {
    c = 1.0, s = 0.0;
  } else if (turns == 90.0) {
    c = 0.0, s = 1.0;
  } else if (turns == 180.0) {
    c = -1.0, s = 0.0;
  } else if (turns == 270.0) {
    c = 0.0, s = -1.0;
  }
  const double cx = (width - 1) * 0.5;
  const double cy = (height - 1) * 0.5;
  return CoordinateMap::from_function(width, height, [&](int x, int y) {
    const double u = x - cx;
    const double v = y - cy;
    return std::pair{cx + c * u - s * v, cy + s * u + c * v};
  });
}

/// Rotation about the raster center; canvas size is kept and uncovered
/// corners follow the border policy (reflect for the image, zero for masks).
/// A quarter turn on [[a,b],[c,d]] yields [[b,d],[a,c]].
inline Sample rotate(const Sample& sample, double angle_degrees) {
  if (!std::isfinite(angle_degrees)) throw ParameterError("rotate: angle must be finite");
  return warp_sample(sample, rotation_map(sample.width(), sample.height(), angle_degrees),
                     Border::reflect);
}

/// Rotation by an angle drawn uniformly from [min_degrees, max_degrees).
inline Sample rotate(const Sample& sample, RandomStream& rng, double min_degrees = 0.0,
                     double max_degrees = 360.0) {
  return rotate(sample, rng.uniform(min_degrees, max_degrees));
}

inline Sample flip(const Sample& sample, FlipAxis axis) {
  if (axis == FlipAxis::none) return sample;
  const int w = sample.width();
  const int h = sample.height();
  const bool mirror_x = axis == FlipAxis::horizontal || axis == FlipAxis::both;
  const bool mirror_y = axis == FlipAxis::vertical || axis == FlipAxis::both;
  return detail::permute_sample(sample, w, h, [&](int x, int y) {
    return std::pair{mirror_x ? w - 1 - x : x, mirror_y ? h - 1 - y : y};
  });
}

inline CoordinateMap zoom_out_map(int width, int height, double factor) {
  const double cx = (width - 1) * 0.5;
  const double cy = (height - 1) * 0.5;
  return CoordinateMap::from_function(width, height, [&](int x, int y) {
    return std::pair{cx + (x - cx) / factor, cy + (y - cy) / factor};
  });
}

/// Shrinks content by `factor` about the center; the uncovered frame is
/// zero in every plane.
inline Sample zoom_out(const Sample& sample, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw ParameterError("zoom_out: factor must lie in (0,1], got " + std::to_string(factor));
  }
  if (factor == 1.0) return sample;
  return warp_sample(sample, zoom_out_map(sample.width(), sample.height(), factor),
                     Border::constant_zero);
}

/// Square window of side `size` with top-left corner at (x, y).
inline Sample crop(const Sample& sample, int size, int x, int y) {
  if (size <= 0 || size > std::min(sample.width(), sample.height())) {
    throw ParameterError("crop: size " + std::to_string(size) + " exceeds raster " +
                         std::to_string(sample.width()) + "x" + std::to_string(sample.height()));
  }
  if (x < 0 || y < 0 || x + size > sample.width() || y + size > sample.height()) {
    throw ParameterError("crop: window at (" + std::to_string(x) + "," + std::to_string(y) +
                         ") leaves the raster");
  }
  return detail::permute_sample(sample, size, size,
                                [&](int ox, int oy) { return std::pair{ox + x, oy + y}; });
}

struct CropOffset {
  int x = 0;
  int y = 0;
};

/// Offsets drawn uniformly over all valid positions, x first.
inline CropOffset draw_crop_offset(int width, int height, int size, RandomStream& rng) {
  if (size <= 0 || size > std::min(width, height)) {
    throw ParameterError("random_crop: size " + std::to_string(size) + " exceeds raster " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  CropOffset offset;
  offset.x = static_cast<int>(rng.uniform_int(0, width - size));
  offset.y = static_cast<int>(rng.uniform_int(0, height - size));
  return offset;
}

inline Sample random_crop(const Sample& sample, int size, RandomStream& rng) {
  const CropOffset o = draw_crop_offset(sample.width(), sample.height(), size, rng);
  return crop(sample, size, o.x, o.y);
}

/// Random size drawn from [min_size, max_size] (clamped to the raster), then
/// the offset.
inline Sample random_crop(const Sample& sample, int min_size, int max_size, RandomStream& rng) {
  const int limit = std::min(sample.width(), sample.height());
  const int hi = std::min(max_size, limit);
  const int lo = std::min(min_size, hi);
  const int size = static_cast<int>(rng.uniform_int(lo, hi));
  return random_crop(sample, size, rng);
}

/// Integer translation: content moves by (+dx, +dy); vacated pixels are zero.
inline Sample shift(const Sample& sample, int dx, int dy) {
  const int w = sample.width();
  const int h = sample.height();
  if (std::abs(dx) >= w || std::abs(dy) >= h) {
    throw ParameterError("shift: (" + std::to_string(dx) + "," + std::to_string(dy) +
                         ") is not smaller than the raster");
  }
  return detail::permute_sample(sample, w, h, [&](int x, int y) {
    const int sx = x - dx;
    const int sy = y - dy;
    if (sx < 0 || sy < 0 || sx >= w || sy >= h) return std::pair{-1, -1};
    return std::pair{sx, sy};
  });
}

/// Inverse of the forward shear [[1,f],[0,1]] (x) or [[1,0],[f,1]] (y).
inline CoordinateMap shear_map(int width, int height, double factor, ShearAxis axis) {
  const double cx = (width - 1) * 0.5;
  const double cy = (height - 1) * 0.5;
  return CoordinateMap::from_function(width, height, [&](int x, int y) {
    if (axis == ShearAxis::x) return std::pair{x - factor * (y - cy), static_cast<double>(y)};
    return std::pair{static_cast<double>(x), y - factor * (x - cx)};
  });
}

inline Sample shear(const Sample& sample, double factor, ShearAxis axis = ShearAxis::x) {
  if (!(factor >= -0.5 && factor <= 0.5)) {
    throw ParameterError("shear: factor must lie in [-0.5,0.5], got " + std::to_string(factor));
  }
  return warp_sample(sample, shear_map(sample.width(), sample.height(), factor, axis),
                     Border::reflect);
}

}  // namespace vesselaug
