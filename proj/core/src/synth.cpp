#include "psgm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace psgm {

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "shift") return SynthKind::shift;
  if (s == "step") return SynthKind::step;
  if (s == "rds") return SynthKind::rds;
  throw std::invalid_argument("unknown synthetic scene kind '" + s + "'");
}

const char* to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::shift: return "shift";
    case SynthKind::step: return "step";
    case SynthKind::rds: return "rds";
  }
  return "?";
}

namespace {

// mt19937 output is standardised, so scenes are reproducible across
// platforms for a fixed seed.
std::uint8_t next_byte(std::mt19937& rng) {
  return static_cast<std::uint8_t>(rng() & 0xff);
}

IntensityImage random_dots(int w, int h, std::mt19937& rng) {
  IntensityImage img(w, h);
  for (auto& px : img.data) px = next_byte(rng);
  return img;
}

void box_blur3(IntensityImage& img) {
  IntensityImage src = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      int sum = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          sum += src.at_clamped(x + dx, y + dy);
      img.at(x, y) = static_cast<std::uint8_t>((sum + 4) / 9);
    }
}

void stretch_contrast(IntensityImage& img) {
  std::uint8_t lo = 255, hi = 0;
  for (auto v : img.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) return;
  for (auto& v : img.data)
    v = static_cast<std::uint8_t>((v - lo) * 255 / (hi - lo));
}

SynthScene constant_shift(int w, int h, int d, std::mt19937& rng) {
  SynthScene scene;
  const IntensityImage src = random_dots(w + d, h, rng);
  scene.left = IntensityImage(w, h);
  scene.right = IntensityImage(w, h);
  scene.gt = FloatMap::invalid_map(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      scene.left.at(x, y) = src.at(x, y);
      scene.right.at(x, y) = src.at(x + d, y);
      if (x >= d) scene.gt.at(x, y) = static_cast<float>(d);
    }
  return scene;
}

SynthScene plane_over_background(int w, int h, int d_fg, bool smooth,
                                 std::mt19937& rng) {
  SynthScene scene;
  scene.left = random_dots(w, h, rng);
  if (smooth) {
    box_blur3(scene.left);
    box_blur3(scene.left);
    stretch_contrast(scene.left);
  }
  const int d_bg = d_fg / 2;
  scene.gt = FloatMap(w, h, static_cast<float>(d_bg));
  const int x0 = w / 4, x1 = 3 * w / 4;
  const int y0 = h / 4, y1 = 3 * h / 4;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      scene.gt.at(x, y) = static_cast<float>(d_fg);

  // Forward z-buffer warp; foreground (larger disparity) wins; columns the
  // warp never reaches get fresh dots.
  scene.right = IntensityImage(w, h);
  std::vector<int> claimed(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::fill(claimed.begin(), claimed.end(), -1);
    for (int x = 0; x < w; ++x) {
      const int d = static_cast<int>(scene.gt.at(x, y));
      const int rx = x - d;
      if (rx < 0) continue;
      if (claimed[static_cast<std::size_t>(rx)] < d) {
        claimed[static_cast<std::size_t>(rx)] = d;
        scene.right.at(rx, y) = scene.left.at(x, y);
      }
    }
    for (int rx = 0; rx < w; ++rx)
      if (claimed[static_cast<std::size_t>(rx)] < 0)
        scene.right.at(rx, y) = next_byte(rng);
  }
  // Left pixels with no right partner at all (rx < 0) are unknowable.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (x - static_cast<int>(scene.gt.at(x, y)) < 0)
        scene.gt.at(x, y) = FloatMap::kInvalid;
  return scene;
}

}  // namespace

SynthScene make_synthetic_pair(SynthKind kind, int width, int height,
                               int disparity, std::uint32_t seed) {
  if (width < 8 || height < 8)
    throw std::invalid_argument("make_synthetic_pair: scene too small");
  if (disparity < 0 || disparity >= width)
    throw std::invalid_argument("make_synthetic_pair: disparity out of range");
  std::mt19937 rng(seed);
  switch (kind) {
    case SynthKind::shift:
      return constant_shift(width, height, disparity, rng);
    case SynthKind::rds:
      return plane_over_background(width, height, disparity, false, rng);
    case SynthKind::step:
      return plane_over_background(width, height, disparity, true, rng);
  }
  throw std::invalid_argument("make_synthetic_pair: bad kind");
}

}  // namespace psgm
