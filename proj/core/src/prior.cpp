#include "psgm/prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "psgm/errors.hpp"
#include "psgm/image_io.hpp"
#include "psgm/parallel.hpp"
#include "psgm/sgm.hpp"

namespace psgm {

PriorField load_prior(const std::string& y_path,
                      const std::string& sigma_or_delta_path,
                      bool is_log_variance) {
  FloatMap y = load_pfm(y_path);
  FloatMap s = load_pfm(sigma_or_delta_path);
  if (!y.same_size(s))
    throw io_error(sigma_or_delta_path + ": dimension mismatch with " + y_path);

  std::size_t mixed = 0;
  for (std::size_t i = 0; i < y.data.size(); ++i)
    if (std::isfinite(y.data[i]) != std::isfinite(s.data[i])) ++mixed;
  if (mixed > 0)
    throw io_error(sigma_or_delta_path + ": " + std::to_string(mixed) +
                   " pixel(s) valid in only one of the y/" +
                   (is_log_variance ? "delta" : "sigma") + " maps");

  for (std::size_t i = 0; i < s.data.size(); ++i) {
    if (!std::isfinite(s.data[i])) continue;
    double sig = is_log_variance ? std::exp(0.5 * s.data[i])
                                 : static_cast<double>(s.data[i]);
    sig = std::clamp(sig, kSigmaMin, 1e30);
    s.data[i] = static_cast<float>(sig);
  }
  return PriorField{std::move(y), std::move(s)};
}

PpsrMap compute_ppsr(const PriorField& prior, double lambda_b,
                     const MatcherParams& params) {
  params.validate();
  if (!prior.y.same_size(prior.sigma))
    throw std::invalid_argument("compute_ppsr: prior y/sigma size mismatch");
  if (lambda_b <= 0)
    throw std::invalid_argument("compute_ppsr: lambda_b must be > 0");

  const double dmin = params.min_disparity;
  const double dmax = params.max_disparity();
  PpsrMap map(prior.y.width, prior.y.height);
  parallel_chunks(prior.y.height, [&](std::int64_t y0, std::int64_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      for (int x = 0; x < prior.y.width; ++x) {
        const std::size_t i = map.idx(x, y);
        if (!prior.y.valid(x, y) || !prior.sigma.valid(x, y)) {
          map.lo[i] = params.min_disparity;
          map.hi[i] = params.max_disparity();
          continue;
        }
        const double yp = prior.y.at(x, y);
        const double radius = lambda_b * prior.sigma.at(x, y);
        // floor/ceil rather than rounding keeps the true interval covered
        map.lo[i] = static_cast<std::int32_t>(
            std::clamp(std::floor(yp - radius), dmin, dmax));
        map.hi[i] = static_cast<std::int32_t>(
            std::clamp(std::ceil(yp + radius), dmin, dmax));
      }
    }
  });
  return map;
}

PriorField rescale_prior(const PriorField& prior, int factor, Interp interp) {
  if (factor < 1)
    throw std::invalid_argument("rescale_prior: factor must be >= 1");
  const float scale = static_cast<float>(factor);
  return PriorField{upsample_float(prior.y, factor, scale, interp),
                    upsample_float(prior.sigma, factor, scale, interp)};
}

namespace {

// Fills invalid pixels from the nearest valid row neighbours, taking the
// smaller (background) disparity when both sides exist.
void fill_holes_horizontal(FloatMap& y) {
  for (int row = 0; row < y.height; ++row) {
    float* v = y.row(row);
    const int w = y.width;
    float carry = FloatMap::kInvalid;
    std::vector<float> left(static_cast<std::size_t>(w));
    for (int x = 0; x < w; ++x) {
      if (std::isfinite(v[x])) carry = v[x];
      left[static_cast<std::size_t>(x)] = carry;
    }
    carry = FloatMap::kInvalid;
    for (int x = w - 1; x >= 0; --x) {
      if (std::isfinite(v[x])) {
        carry = v[x];
        continue;
      }
      const float l = left[static_cast<std::size_t>(x)];
      if (std::isfinite(l) && std::isfinite(carry))
        v[x] = std::min(l, carry);
      else if (std::isfinite(l))
        v[x] = l;
      else if (std::isfinite(carry))
        v[x] = carry;
    }
  }
}

}  // namespace

PriorField pyramid_prior(const IntensityImage& left,
                         const IntensityImage& right,
                         const MatcherParams& params, int factor,
                         double lambda_b) {
  if (factor < 2)
    throw std::invalid_argument("pyramid_prior: factor must be >= 2");
  if (!left.same_size(right))
    throw std::invalid_argument("pyramid_prior: image size mismatch");
  if (lambda_b <= 0)
    throw std::invalid_argument("pyramid_prior: lambda_b must be > 0");

  const IntensityImage small_left = downsample(left, factor);
  const IntensityImage small_right = downsample(right, factor);

  MatcherParams sp = params;
  sp.min_disparity = static_cast<int>(
      std::floor(static_cast<double>(params.min_disparity) / factor));
  const int hi = static_cast<int>(
      std::ceil(static_cast<double>(params.max_disparity()) / factor));
  sp.num_disparities = std::max(1, hi - sp.min_disparity + 1);
  sp.uniqueness_ratio = 0;
  // Speckle thresholds follow the resolution: same relative area, same
  // relative disparity jump.
  sp.speckle_window = params.speckle_window / (factor * factor);
  sp.speckle_range = std::max(1, params.speckle_range / factor);
  sp.validate();

  AggregationConfig config;
  config.weight_mode = WeightMode::off;

  const PpsrMap full =
      PpsrMap::full_range(small_left.width, small_left.height, sp);
  const RaggedCostVolume vol =
      build_cost_volume(small_left, small_right, full, sp);
  const RaggedCostVolume agg = aggregate(vol, sp, config);
  const DisparityMap raw = wta_select(agg, sp);

  const double sigma_max = sigma_max_for(sp, lambda_b);
  FloatMap sigma = FloatMap::invalid_map(raw.width, raw.height);
  parallel_chunks(raw.height, [&](std::int64_t y0, std::int64_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      for (int x = 0; x < raw.width; ++x) {
        if (!raw.valid(x, y)) continue;
        const auto& c = agg.cell(x, y);
        const int i = static_cast<int>(std::lround(raw.at(x, y))) - c.lo;
        double sig = sigma_max;
        if (i > 0 && i < c.len - 1) {
          const std::uint16_t* s = &agg.costs[c.offset];
          const double curvature =
              static_cast<double>(s[i - 1]) + s[i + 1] - 2.0 * s[i];
          if (curvature > 0.0)
            sig = std::clamp(std::sqrt(sp.p1 / curvature), kSigmaMin, sigma_max);
        }
        sigma.at(x, y) = static_cast<float>(sig);
      }
    }
  });

  DisparityMap checked = raw;
  const DisparityMap disp_right = right_disparity_from_volume(agg, sp);
  checked = lr_consistency(checked, disp_right, sp.disp12_max_diff);
  checked = speckle_filter(checked, sp.speckle_window, sp.speckle_range);

  // Rejected pixels keep a hole-filled disparity with maximal uncertainty;
  // rows with nothing valid stay invalid and fall back to the full range
  // downstream.
  for (int y = 0; y < checked.height; ++y)
    for (int x = 0; x < checked.width; ++x)
      if (!checked.valid(x, y))
        sigma.at(x, y) = static_cast<float>(sigma_max);
  fill_holes_horizontal(checked);
  for (std::size_t i = 0; i < checked.data.size(); ++i)
    if (!std::isfinite(checked.data[i])) sigma.data[i] = FloatMap::kInvalid;

  return PriorField{std::move(checked), std::move(sigma)};
}

}  // namespace psgm
