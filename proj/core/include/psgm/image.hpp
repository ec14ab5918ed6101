#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace psgm {

/// Row-major 8-bit single channel image.
struct IntensityImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  IntensityImage() = default;
  IntensityImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  /// Border-replicated access.
  std::uint8_t at_clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y);
  }
  const std::uint8_t* row(int y) const {
    return data.data() + static_cast<std::size_t>(y) * width;
  }
  bool same_size(const IntensityImage& o) const {
    return width == o.width && height == o.height;
  }
  bool empty() const { return data.empty(); }

  bool operator==(const IntensityImage&) const = default;
};

/// Row-major float grid. Every entry is either finite or exactly kInvalid.
struct FloatMap {
  static constexpr float kInvalid = std::numeric_limits<float>::infinity();

  int width = 0;
  int height = 0;
  std::vector<float> data;

  FloatMap() = default;
  FloatMap(int w, int h, float fill = 0.f)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  static FloatMap invalid_map(int w, int h) { return FloatMap(w, h, kInvalid); }

  float& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  float at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  bool valid(int x, int y) const { return std::isfinite(at(x, y)); }
  const float* row(int y) const {
    return data.data() + static_cast<std::size_t>(y) * width;
  }
  float* row(int y) {
    return data.data() + static_cast<std::size_t>(y) * width;
  }
  bool same_size(const FloatMap& o) const {
    return width == o.width && height == o.height;
  }
  bool empty() const { return data.empty(); }
  std::size_t count_valid() const {
    std::size_t n = 0;
    for (float v : data) n += std::isfinite(v) ? 1 : 0;
    return n;
  }

  bool operator==(const FloatMap&) const = default;
};

/// Subpixel disparities; rejected pixels carry FloatMap::kInvalid.
using DisparityMap = FloatMap;

/// Block-mean reduction by an integer factor. Output is ceil(input/factor)
/// on each axis; when the factor does not divide the size, edge rows and
/// columns are replicated to the next multiple instead of cropping.
IntensityImage downsample(const IntensityImage& img, int factor);

enum class Interp { bilinear, nearest };

/// Multiplies values by value_scale and enlarges the grid by an integer
/// factor. Bilinear weights are renormalised over the valid source
/// neighbours; a pixel whose contributing neighbours are all invalid stays
/// invalid.
FloatMap upsample_float(const FloatMap& map, int factor, float value_scale,
                        Interp interp = Interp::bilinear);

/// Top-left crop, used to trim padding introduced by downsample/upsample
/// round trips on non-divisible sizes.
FloatMap crop(const FloatMap& map, int width, int height);

}  // namespace psgm
