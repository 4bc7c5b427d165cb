#pragma once

// Raster types shared by every transform and metric.
//
// All rasters are row-major. Images store interleaved float samples in
// [0,1]; masks store bytes that are exactly 0 or 1. Every type validates
// its invariants at construction and is immutable afterwards.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vesselaug {

/// Raised for malformed input data: bad dimensions, out-of-range values,
/// mismatched rasters. The CLI maps it to the data-error exit code.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid transform parameters (gamma out of bounds, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline float clip01(float v) {
  // NaN compares false everywhere; map it to 0.
  if (!(v > 0.0f)) return 0.0f;
  return v < 1.0f ? v : 1.0f;
}

inline void check_dims(int width, int height, const char* what) {
  if (width <= 0 || height <= 0) {
    throw DataError(std::string(what) + ": zero-dimension raster (" + std::to_string(width) +
                    "x" + std::to_string(height) + ")");
  }
}

}  // namespace detail

class ImagePlane {
 public:
  ImagePlane() = default;

  /// Zero-filled raster.
  ImagePlane(int width, int height, int channels)
      : ImagePlane(width, height, channels,
                   std::vector<float>(static_cast<std::size_t>(width > 0 ? width : 0) *
                                      static_cast<std::size_t>(height > 0 ? height : 0) *
                                      static_cast<std::size_t>(channels > 0 ? channels : 0))) {}

  /// Takes ownership of `data`; every sample is clipped to [0,1].
  ImagePlane(int width, int height, int channels, std::vector<float> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    detail::check_dims(width, height, "ImagePlane");
    if (channels != 1 && channels != 3) {
      throw DataError("ImagePlane: channels must be 1 or 3, got " + std::to_string(channels));
    }
    if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
      throw DataError("ImagePlane: data length " + std::to_string(data_.size()) +
                      " does not match " + std::to_string(width) + "x" +
                      std::to_string(height) + "x" + std::to_string(channels));
    }
    for (float& v : data_) v = detail::clip01(v);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const { return data_.empty(); }

  float at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::span<const float> data() const { return data_; }

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

class BinaryMask {
 public:
  BinaryMask() = default;

  BinaryMask(int width, int height, std::uint8_t fill = 0)
      : BinaryMask(width, height,
                   std::vector<std::uint8_t>(static_cast<std::size_t>(width > 0 ? width : 0) *
                                                 static_cast<std::size_t>(height > 0 ? height : 0),
                                             fill)) {}

  BinaryMask(int width, int height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    detail::check_dims(width, height, "BinaryMask");
    if (data_.size() != pixel_count()) {
      throw DataError("BinaryMask: data length " + std::to_string(data_.size()) +
                      " does not match " + std::to_string(width) + "x" + std::to_string(height));
    }
    for (std::uint8_t v : data_) {
      if (v > 1) throw DataError("BinaryMask: value " + std::to_string(v) + " is not 0 or 1");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const std::uint8_t> data() const { return data_; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel vessel scores in [0,1]. Unlike ImagePlane, out-of-range or
/// non-finite scores are rejected rather than clipped: they indicate a
/// broken predictor, and silently clipping would alter the ranking.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;

  ProbabilityMap(int width, int height, std::vector<float> data)
      : width_(width), height_(height), data_(std::move(data)) {
    detail::check_dims(width, height, "ProbabilityMap");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw DataError("ProbabilityMap: data length does not match dimensions");
    }
    for (float v : data_) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw DataError("ProbabilityMap: score " + std::to_string(v) + " outside [0,1]");
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return data_.size(); }
  float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const float> data() const { return data_; }

  /// Scores >= threshold become 1.
  BinaryMask binarize(float threshold) const {
    std::vector<std::uint8_t> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [threshold](float v) { return static_cast<std::uint8_t>(v >= threshold); });
    return BinaryMask(width_, height_, std::move(out));
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Image, vessel ground truth and optional field-of-view mask, moved through
/// every transform as one unit.
class Sample {
 public:
  Sample() = default;

  Sample(ImagePlane image, BinaryMask vessels, std::optional<BinaryMask> fov = std::nullopt,
         std::string id = {})
      : image_(std::move(image)),
        vessels_(std::move(vessels)),
        fov_(std::move(fov)),
        id_(std::move(id)) {
    auto same = [this](int w, int h) { return w == image_.width() && h == image_.height(); };
    if (!same(vessels_.width(), vessels_.height())) {
      throw DataError("Sample '" + id_ + "': vessel mask " + std::to_string(vessels_.width()) +
                      "x" + std::to_string(vessels_.height()) + " does not match image " +
                      std::to_string(image_.width()) + "x" + std::to_string(image_.height()));
    }
    if (fov_ && !same(fov_->width(), fov_->height())) {
      throw DataError("Sample '" + id_ + "': FOV mask does not match image dimensions");
    }
  }

  const ImagePlane& image() const { return image_; }
  const BinaryMask& vessels() const { return vessels_; }
  const std::optional<BinaryMask>& fov() const { return fov_; }
  const std::string& id() const { return id_; }
  int width() const { return image_.width(); }
  int height() const { return image_.height(); }

  /// FOV when present, otherwise an all-ones mask.
  BinaryMask fov_or_all() const {
    return fov_ ? *fov_ : BinaryMask(image_.width(), image_.height(), std::uint8_t{1});
  }

  Sample with_image(ImagePlane image) const {
    return Sample(std::move(image), vessels_, fov_, id_);
  }
  Sample with_id(std::string id) const { return Sample(image_, vessels_, fov_, std::move(id)); }

  friend bool operator==(const Sample&, const Sample&) = default;

 private:
  ImagePlane image_;
  BinaryMask vessels_;
  std::optional<BinaryMask> fov_;
  std::string id_;
};

/// Single-channel view of the green channel, the usual choice for fundus
/// photographs. Grayscale input is returned unchanged.
inline ImagePlane green_channel(const ImagePlane& image) {
  if (image.channels() == 1) return image;
  std::vector<float> out(image.pixel_count());
  const auto src = image.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i * 3 + 1];
  return ImagePlane(image.width(), image.height(), 1, std::move(out));
}

}  // namespace vesselaug
