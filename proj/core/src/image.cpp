#include "psgm/image.hpp"

#include <stdexcept>

#include "psgm/parallel.hpp"

namespace psgm {

IntensityImage downsample(const IntensityImage& img, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  if (factor == 1) return img;
  const int ow = (img.width + factor - 1) / factor;
  const int oh = (img.height + factor - 1) / factor;
  IntensityImage out(ow, oh);
  const int area = factor * factor;
  parallel_chunks(oh, [&](std::int64_t y0, std::int64_t y1) {
    for (int oy = static_cast<int>(y0); oy < static_cast<int>(y1); ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        int sum = 0;
        for (int by = 0; by < factor; ++by)
          for (int bx = 0; bx < factor; ++bx)
            sum += img.at_clamped(ox * factor + bx, oy * factor + by);
        out.at(ox, oy) = static_cast<std::uint8_t>((sum + area / 2) / area);
      }
    }
  });
  return out;
}

FloatMap upsample_float(const FloatMap& map, int factor, float value_scale,
                        Interp interp) {
  if (factor < 1) throw std::invalid_argument("upsample_float: factor must be >= 1");
  const int ow = map.width * factor;
  const int oh = map.height * factor;
  FloatMap out(ow, oh);
  const double inv = 1.0 / factor;
  parallel_chunks(oh, [&](std::int64_t y0, std::int64_t y1) {
    for (int oy = static_cast<int>(y0); oy < static_cast<int>(y1); ++oy) {
      const double sy = (oy + 0.5) * inv - 0.5;
      for (int ox = 0; ox < ow; ++ox) {
        const double sx = (ox + 0.5) * inv - 0.5;
        if (interp == Interp::nearest) {
          const int nx = std::clamp(static_cast<int>(std::lround(sx)), 0, map.width - 1);
          const int ny = std::clamp(static_cast<int>(std::lround(sy)), 0, map.height - 1);
          const float v = map.at(nx, ny);
          out.at(ox, oy) = std::isfinite(v) ? v * value_scale : FloatMap::kInvalid;
          continue;
        }
        const int x0 = static_cast<int>(std::floor(sx));
        const int y0f = static_cast<int>(std::floor(sy));
        const double fx = sx - x0;
        const double fy = sy - y0f;
        const int xs[2] = {std::clamp(x0, 0, map.width - 1),
                           std::clamp(x0 + 1, 0, map.width - 1)};
        const int ys[2] = {std::clamp(y0f, 0, map.height - 1),
                           std::clamp(y0f + 1, 0, map.height - 1)};
        const double ws[4] = {(1 - fx) * (1 - fy), fx * (1 - fy),
                              (1 - fx) * fy, fx * fy};
        double acc = 0, wsum = 0;
        for (int k = 0; k < 4; ++k) {
          if (ws[k] <= 0) continue;
          const float v = map.at(xs[k & 1], ys[k >> 1]);
          if (!std::isfinite(v)) continue;
          acc += ws[k] * v;
          wsum += ws[k];
        }
        out.at(ox, oy) = wsum > 0
                             ? static_cast<float>(acc / wsum * value_scale)
                             : FloatMap::kInvalid;
      }
    }
  });
  return out;
}

FloatMap crop(const FloatMap& map, int width, int height) {
  if (width > map.width || height > map.height)
    throw std::invalid_argument("crop: target exceeds source size");
  if (width == map.width && height == map.height) return map;
  FloatMap out(width, height);
  for (int y = 0; y < height; ++y)
    std::copy_n(map.row(y), width, out.row(y));
  return out;
}

}  // namespace psgm
