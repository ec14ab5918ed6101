#include "psgm/occlusion.hpp"

#include <cmath>
#include <stdexcept>

#include "psgm/parallel.hpp"

namespace psgm {

std::size_t OcclusionMask::count_set() const {
  std::size_t n = 0;
  for (auto v : data) n += v ? 1 : 0;
  return n;
}

IntensityImage OcclusionMask::to_image() const {
  IntensityImage img(width, height);
  for (std::size_t i = 0; i < data.size(); ++i)
    img.data[i] = data[i] ? 255 : 0;
  return img;
}

OcclusionMask derive_occlusion(const FloatMap& y) {
  OcclusionMask mask(y.width, y.height);
  const int w = y.width;
  parallel_chunks(y.height, [&](std::int64_t r0, std::int64_t r1) {
    // Right-image columns can land left of column 0 for large disparities;
    // give the z-buffer a margin on both sides.
    std::vector<float> best(static_cast<std::size_t>(3) * w, 0.f);
    for (int row = static_cast<int>(r0); row < static_cast<int>(r1); ++row) {
      std::fill(best.begin(), best.end(),
                -std::numeric_limits<float>::infinity());
      const float* src = y.row(row);
      auto target = [&](int x) {
        const long t = std::lround(static_cast<double>(x) - src[x]) + w;
        return (t >= 0 && t < 3 * w) ? static_cast<int>(t) : -1;
      };
      for (int x = 0; x < w; ++x) {
        if (!std::isfinite(src[x])) continue;
        const int t = target(x);
        if (t >= 0) best[t] = std::max(best[t], src[x]);
      }
      for (int x = 0; x < w; ++x) {
        if (!std::isfinite(src[x])) {
          mask.at(x, row) = 1;
          continue;
        }
        const int t = target(x);
        mask.at(x, row) = (t >= 0 && best[t] > src[x] + 0.5f) ? 1 : 0;
      }
    }
  });
  return mask;
}

namespace {

inline std::uint8_t median3(std::uint8_t a, std::uint8_t b, std::uint8_t c) {
  return static_cast<std::uint8_t>((a + b + c) >= 2 ? 1 : 0);
}

// Strided line view over a row or a column.
struct Line {
  float* y;
  std::uint8_t* m;
  std::size_t stride;
  int extent;

  float& yv(int k) { return y[stride * k]; }
  std::uint8_t& mv(int k) { return m[stride * k]; }
};

void filter_line(Line line, bool buffered) {
  if (line.extent < 3) return;
  std::vector<float> y_orig;
  std::vector<std::uint8_t> m_orig;
  if (buffered) {
    y_orig.resize(line.extent);
    m_orig.resize(line.extent);
    for (int k = 0; k < line.extent; ++k) {
      y_orig[k] = line.yv(k);
      m_orig[k] = line.mv(k);
    }
  }
  auto y_at = [&](int k) { return buffered ? y_orig[k] : line.yv(k); };
  auto m_at = [&](int k) { return buffered ? m_orig[k] : line.mv(k); };
  for (int k = 1; k <= line.extent - 2; ++k) {
    const std::uint8_t med = median3(m_at(k - 1), m_at(k), m_at(k + 1));
    if (line.mv(k) != med) {
      line.yv(k) = 0.5f * y_at(k - 1) + 0.5f * y_at(k + 1);
      line.mv(k) = med;
    }
  }
}

}  // namespace

void guided_filter_pass(FloatMap& y, OcclusionMask& mask,
                        FilterDirection direction, bool buffered) {
  if (y.width != mask.width || y.height != mask.height)
    throw std::invalid_argument("guided_filter: map/mask size mismatch");
  const int w = y.width;
  const int h = y.height;
  if (direction == FilterDirection::horizontal) {
    parallel_chunks(h, [&](std::int64_t r0, std::int64_t r1) {
      for (int row = static_cast<int>(r0); row < static_cast<int>(r1); ++row)
        filter_line({y.row(row), mask.data.data() +
                                     static_cast<std::size_t>(row) * w,
                     1, w},
                    buffered);
    });
  } else {
    parallel_chunks(w, [&](std::int64_t c0, std::int64_t c1) {
      for (int col = static_cast<int>(c0); col < static_cast<int>(c1); ++col)
        filter_line({y.data.data() + col, mask.data.data() + col,
                     static_cast<std::size_t>(w), h},
                    buffered);
    });
  }
}

void guided_filter(FloatMap& y, OcclusionMask& mask, bool buffered) {
  guided_filter_pass(y, mask, FilterDirection::horizontal, buffered);
  guided_filter_pass(y, mask, FilterDirection::vertical, buffered);
}

}  // namespace psgm
