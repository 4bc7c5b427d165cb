#pragma once

// Warp-family transforms: elastic deformation, grid distortion and radial
// optical distortion. All three build one CoordinateMap and apply it to the
// image (bilinear, reflect) and both masks (nearest, zero).

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vesselaug/filter.hpp"
#include "vesselaug/image.hpp"
#include "vesselaug/resample.hpp"
#include "vesselaug/rng.hpp"

namespace vesselaug {

struct ElasticParams {
  double alpha = 34.0;  // displacement magnitude, pixels
  double sigma = 4.0;   // smoothing radius, pixels

  void validate() const {
    if (!(alpha >= 0.0)) throw ParameterError("elastic: alpha must be >= 0");
    if (!(sigma > 0.0)) throw ParameterError("elastic: sigma must be > 0");
  }
};

struct DisplacementField {
  int width = 0;
  int height = 0;
  std::vector<double> dx;
  std::vector<double> dy;
};

/// Draws two full-resolution standard-normal fields (dx first, row-major),
/// smooths each with a Gaussian of radius sigma and scales by alpha.
inline DisplacementField elastic_displacement(int width, int height, const ElasticParams& params,
                                              RandomStream& rng) {
  params.validate();
  const std::size_t n = static_cast<std::size_t>(width) * height;
  DisplacementField field{width, height, std::vector<double>(n), std::vector<double>(n)};
  for (double& v : field.dx) v = rng.normal();
  for (double& v : field.dy) v = rng.normal();
  field.dx = gaussian_smooth(field.dx, width, height, params.sigma);
  field.dy = gaussian_smooth(field.dy, width, height, params.sigma);
  for (double& v : field.dx) v *= params.alpha;
  for (double& v : field.dy) v *= params.alpha;
  return field;
}

inline Sample elastic_deform(const Sample& sample, const ElasticParams& params, RandomStream& rng) {
  DisplacementField field = elastic_displacement(sample.width(), sample.height(), params, rng);
  if (params.alpha == 0.0) return sample;
  CoordinateMap map(sample.width(), sample.height());
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const std::size_t i = map.index(x, y);
      map.x[i] = x + field.dx[i];
      map.y[i] = y + field.dy[i];
    }
  }
  return warp_sample(sample, map, Border::reflect);
}

struct GridDistortParams {
  int cells = 5;                 // cells per axis, >= 2
  double distort_limit = 0.3;    // factors drawn from [1-d, 1+d]
  std::vector<double> factors_x;  // explicit factors; drawn when empty
  std::vector<double> factors_y;

  void validate() const {
    if (cells < 2) throw ParameterError("grid: cells per axis must be >= 2");
    if (!(distort_limit >= 0.0 && distort_limit <= 0.5)) {
      throw ParameterError("grid: distortion limit must lie in [0,0.5]");
    }
    for (const auto* factors : {&factors_x, &factors_y}) {
      if (!factors->empty() && factors->size() != static_cast<std::size_t>(cells)) {
        throw ParameterError("grid: factor count does not match cell count");
      }
      for (double f : *factors) {
        if (!(f > 0.0)) throw ParameterError("grid: factors must be positive");
      }
    }
  }
};

/// Output-side cell boundaries along an axis of continuous extent `length`:
/// cell i is stretched by factors[i] and the total is renormalized to
/// `length`. Returns cells+1 increasing values from 0 to length.
inline std::vector<double> grid_cell_boundaries(double length, const std::vector<double>& factors) {
  double total = 0.0;
  for (double f : factors) total += f;
  std::vector<double> bounds(factors.size() + 1, 0.0);
  double run = 0.0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    run += factors[i];
    bounds[i + 1] = length * run / total;
  }
  bounds.back() = length;
  return bounds;
}

/// Piecewise-linear, strictly increasing map from an output coordinate in
/// [0, length] to the source coordinate, given the output boundaries.
inline double grid_source_coordinate(double u, double length, const std::vector<double>& bounds) {
  const std::size_t cells = bounds.size() - 1;
  const double source_width = length / static_cast<double>(cells);
  std::size_t i = 0;
  while (i + 1 < cells && u >= bounds[i + 1]) ++i;
  const double t = (u - bounds[i]) / (bounds[i + 1] - bounds[i]);
  return (static_cast<double>(i) + t) * source_width;
}

/// Per-pixel source coordinates along one axis of `pixels` samples. Pixel p
/// covers [p, p+1) in continuous coordinates; its center is p + 0.5.
inline std::vector<double> grid_axis_map(int pixels, const std::vector<double>& factors) {
  const double length = pixels;
  const auto bounds = grid_cell_boundaries(length, factors);
  std::vector<double> out(pixels);
  for (int p = 0; p < pixels; ++p) out[p] = grid_source_coordinate(p + 0.5, length, bounds) - 0.5;
  return out;
}

/// Fills any missing factor arrays from the stream (x axis first).
inline GridDistortParams resolve_grid_factors(GridDistortParams params, RandomStream& rng) {
  params.validate();
  const double d = params.distort_limit;
  for (auto* factors : {&params.factors_x, &params.factors_y}) {
    if (!factors->empty()) continue;
    factors->resize(params.cells);
    for (double& f : *factors) f = rng.uniform(1.0 - d, 1.0 + d);
  }
  return params;
}

/// Warps with explicit factors; `params.factors_x/y` must be filled.
inline Sample grid_distort(const Sample& sample, const GridDistortParams& params) {
  params.validate();
  if (params.factors_x.empty() || params.factors_y.empty()) {
    throw ParameterError("grid: factors not resolved");
  }
  const auto xs = grid_axis_map(sample.width(), params.factors_x);
  const auto ys = grid_axis_map(sample.height(), params.factors_y);
  const auto map = CoordinateMap::from_function(
      sample.width(), sample.height(), [&](int x, int y) { return std::pair{xs[x], ys[y]}; });
  return warp_sample(sample, map, Border::reflect);
}

inline Sample grid_distort(const Sample& sample, const GridDistortParams& params,
                           RandomStream& rng) {
  return grid_distort(sample, resolve_grid_factors(params, rng));
}

struct OpticalDistortParams {
  double k = 0.0;

  void validate() const {
    if (!(k >= -0.5 && k <= 0.5)) {
      throw ParameterError("optical: coefficient must lie in [-0.5,0.5], got " + std::to_string(k));
    }
  }
};

/// Source radius for a normalized output radius r: r * (1 + k r^2).
inline double optical_source_radius(double r, double k) { return r * (1.0 + k * r * r); }

/// Radius is normalized by the center-to-corner distance, so r lies in [0,1]
/// inside the raster.
inline CoordinateMap optical_map(int width, int height, double k) {
  const double cx = (width - 1) * 0.5;
  const double cy = (height - 1) * 0.5;
  const double norm = std::max(std::hypot(cx, cy), 1e-12);
  return CoordinateMap::from_function(width, height, [&](int x, int y) {
    const double u = x - cx;
    const double v = y - cy;
    const double r = std::hypot(u, v) / norm;
    const double scale = 1.0 + k * r * r;
    return std::pair{cx + u * scale, cy + v * scale};
  });
}

/// k > 0 gives pincushion, k < 0 barrel distortion.
inline Sample optical_distort(const Sample& sample, const OpticalDistortParams& params) {
  params.validate();
  if (params.k == 0.0) return sample;
  return warp_sample(sample, optical_map(sample.width(), sample.height(), params.k),
                     Border::reflect);
}

}  // namespace vesselaug
