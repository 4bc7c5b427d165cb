#pragma once

// PNG codec for images, masks and probability maps (libpng).
//
// Reading accepts 1/2/4/8/16-bit grayscale, 8/16-bit RGB and palette files
// without transparency. Alpha channels are stripped. Writing is always
// 8-bit; files are written to a sibling temporary and renamed into place.

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vesselaug/image.hpp"

namespace vesselaug {

class IoError : public DataError {
 public:
  using DataError::DataError;
};

/// Decoded file contents before any value-range conversion.
struct RawRaster {
  int width = 0;
  int height = 0;
  int channels = 0;    // 1 or 3
  int bit_depth = 0;   // 8 or 16
  std::vector<std::uint16_t> values;

  std::uint16_t max_value() const { return bit_depth == 16 ? 65535 : 255; }
};

struct LoadedMask {
  BinaryMask mask;
  /// True when some pixel held a value other than 0 or the bit-depth maximum.
  bool coerced = false;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_error_handler(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message) *message = msg ? msg : "libpng error";
  png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

inline RawRaster read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open '" + path.string() + "' for reading");

  png_byte signature[8] = {};
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw IoError("'" + path.string() + "' is not a PNG file");
  }

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                           png_warning_handler);
  if (!png) throw IoError("libpng: cannot allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot allocate info struct");
  }

  RawRaster raw;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("'" + path.string() + "': " + message);
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);

  if (width == 0 || height == 0) {
    png_error(png, "zero-dimension image");
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
      png_error(png, "unsupported PNG variant: palette with alpha");
    }
    png_set_palette_to_rgb(png);
    bit_depth = 8;
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    bit_depth = 8;
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_error(png, "unsupported channel layout");
  }

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  raw.width = static_cast<int>(width);
  raw.height = static_cast<int>(height);
  raw.channels = channels;
  raw.bit_depth = bit_depth;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  raw.values.resize(count);
  if (bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      raw.values[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) raw.values[i] = buffer[i];
  }
  return raw;
}

/// Writes `values` (big-endian order handled here) as an 8- or 16-bit PNG.
inline void write_png(const std::filesystem::path& path, int width, int height, int channels,
                      int bit_depth, const std::vector<std::uint16_t>& values) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    FilePtr file(std::fopen(tmp.string().c_str(), "wb"));
    if (!file) throw IoError("cannot open '" + path.string() + "' for writing");

    std::string message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                              png_warning_handler);
    if (!png) throw IoError("libpng: cannot allocate write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      throw IoError("libpng: cannot allocate info struct");
    }

    const int bytes_per_sample = bit_depth == 16 ? 2 : 1;
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * bytes_per_sample;
    std::vector<png_byte> buffer(row_bytes * height);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (bytes_per_sample == 2) {
        buffer[2 * i] = static_cast<png_byte>(values[i] >> 8);
        buffer[2 * i + 1] = static_cast<png_byte>(values[i] & 0xff);
      } else {
        buffer[i] = static_cast<png_byte>(values[i]);
      }
    }
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = buffer.data() + y * row_bytes;

    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw IoError("'" + path.string() + "': " + message);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, bit_depth,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Fast deflate keeps bulk expansion I/O-light; the output is still lossless.
    // A single fixed filter instead of libpng's per-row search roughly halves
    // encode time on photographs at about the same file size.
    png_set_compression_level(png, 1);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) throw IoError("write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

}  // namespace detail

/// Quantized byte value stored for an image sample.
inline std::uint8_t quantize_sample(float v) {
  return static_cast<std::uint8_t>(std::lround(detail::clip01(v) * 255.0f));
}

inline ImagePlane load_image(const std::filesystem::path& path) {
  RawRaster raw = detail::read_png(path);
  const float max = static_cast<float>(raw.max_value());
  std::vector<float> data(raw.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(raw.values[i]) / max;
  return ImagePlane(raw.width, raw.height, raw.channels, std::move(data));
}

/// Binarizes at half the bit-depth maximum. RGB masks are reduced to the
/// channel mean first.
inline LoadedMask load_mask(const std::filesystem::path& path) {
  RawRaster raw = detail::read_png(path);
  const std::uint32_t max = raw.max_value();
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  std::vector<std::uint8_t> data(n);
  bool coerced = false;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t sum = 0;
    for (int c = 0; c < raw.channels; ++c) sum += raw.values[i * raw.channels + c];
    // value/max > 0.5  <=>  2*sum > max*channels
    data[i] = static_cast<std::uint8_t>(2 * sum > max * static_cast<std::uint32_t>(raw.channels));
    if (sum != 0 && sum != max * static_cast<std::uint32_t>(raw.channels)) coerced = true;
  }
  return {BinaryMask(raw.width, raw.height, std::move(data)), coerced};
}

/// Grayscale 8- or 16-bit score map; RGB input uses its first channel.
inline ProbabilityMap load_probability_map(const std::filesystem::path& path) {
  RawRaster raw = detail::read_png(path);
  const double max = raw.max_value();
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<float>(raw.values[i * raw.channels] / max);
  }
  return ProbabilityMap(raw.width, raw.height, std::move(data));
}

inline std::vector<std::uint8_t> encode_bytes(const ImagePlane& image) {
  std::vector<std::uint8_t> out(image.data().size());
  std::transform(image.data().begin(), image.data().end(), out.begin(), quantize_sample);
  return out;
}

inline std::vector<std::uint8_t> encode_bytes(const BinaryMask& mask) {
  std::vector<std::uint8_t> out(mask.data().size());
  std::transform(mask.data().begin(), mask.data().end(), out.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  return out;
}

inline void save_png(const ImagePlane& image, const std::filesystem::path& path) {
  const auto bytes = encode_bytes(image);
  detail::write_png(path, image.width(), image.height(), image.channels(), 8,
                    std::vector<std::uint16_t>(bytes.begin(), bytes.end()));
}

inline void save_png(const BinaryMask& mask, const std::filesystem::path& path) {
  const auto bytes = encode_bytes(mask);
  detail::write_png(path, mask.width(), mask.height(), 1, 8,
                    std::vector<std::uint16_t>(bytes.begin(), bytes.end()));
}

}  // namespace vesselaug
