#include "psgm/sgm.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "psgm/parallel.hpp"

namespace psgm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr int kDirs[8][2] = {{-1, 0}, {1, 0},  {0, -1}, {0, 1},
                             {-1, -1}, {1, 1}, {1, -1}, {-1, 1}};

// Offset cap keeping refined values strictly inside (d*-0.5, d*+0.5).
constexpr double kMaxSubpixelOffset = 0.5 - 1.0 / 1024.0;

}  // namespace

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "off") return WeightMode::off;
  if (s == "literal" || s == "literal_eq4") return WeightMode::literal_eq4;
  if (s == "attenuation") return WeightMode::attenuation;
  throw std::invalid_argument("unknown weight mode '" + s + "'");
}

const char* to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::off: return "off";
    case WeightMode::literal_eq4: return "literal";
    case WeightMode::attenuation: return "attenuation";
  }
  return "?";
}

void AggregationConfig::validate() const {
  if (directions != 4 && directions != 8)
    throw std::invalid_argument("directions must be 4 or 8");
  if (!(lambda_s > 0.0 && lambda_s < 1.0))
    throw std::invalid_argument("lambda_s must lie in (0, 1)");
  if (!(lambda_d > 0.0))
    throw std::invalid_argument("lambda_d must be > 0");
}

RaggedCostVolume aggregate(const RaggedCostVolume& volume,
                           const MatcherParams& params,
                           const AggregationConfig& config) {
  config.validate();
  const int w = volume.width;
  const int h = volume.height;
  const int p1 = params.p1;
  const int p2 = params.p2;

  std::vector<std::uint32_t> acc(volume.costs.size(), 0);

  for (int di = 0; di < config.directions; ++di) {
    const int dx = kDirs[di][0];
    const int dy = kDirs[di][1];

    std::vector<std::pair<int, int>> starts;
    auto add_if_start = [&](int x, int y) {
      const int px = x - dx, py = y - dy;
      if (px < 0 || px >= w || py < 0 || py >= h) starts.emplace_back(x, y);
    };
    for (int x = 0; x < w; ++x) {
      add_if_start(x, 0);
      if (h > 1) add_if_start(x, h - 1);
    }
    for (int y = 1; y < h - 1; ++y) {
      add_if_start(0, y);
      if (w > 1) add_if_start(w - 1, y);
    }

    parallel_chunks(static_cast<std::int64_t>(starts.size()),
                    [&](std::int64_t s0, std::int64_t s1) {
      std::vector<std::int32_t> prev, cur;
      prev.reserve(params.num_disparities);
      cur.reserve(params.num_disparities);
      for (std::int64_t s = s0; s < s1; ++s) {
        int x = starts[static_cast<std::size_t>(s)].first;
        int y = starts[static_cast<std::size_t>(s)].second;
        int prev_lo = 0, prev_len = 0;
        std::int32_t prev_min = 0;
        while (x >= 0 && x < w && y >= 0 && y < h) {
          const auto& c = volume.cell(x, y);
          const std::uint16_t* cost = &volume.costs[c.offset];
          std::uint32_t* out = &acc[c.offset];
          cur.resize(static_cast<std::size_t>(c.len));
          std::int32_t cur_min = std::numeric_limits<std::int32_t>::max();
          if (prev_len == 0) {
            for (int i = 0; i < c.len; ++i) {
              const std::int32_t l = cost[i];
              cur[i] = l;
              cur_min = std::min(cur_min, l);
              out[i] += static_cast<std::uint32_t>(l);
            }
          } else {
            const std::int32_t ceiling = prev_min + p2;
            for (int i = 0; i < c.len; ++i) {
              const int j = (c.lo + i) - prev_lo;
              std::int32_t best = ceiling;
              if (j >= 0 && j < prev_len) best = std::min(best, prev[j]);
              if (j - 1 >= 0 && j - 1 < prev_len)
                best = std::min(best, prev[j - 1] + p1);
              if (j + 1 >= 0 && j + 1 < prev_len)
                best = std::min(best, prev[j + 1] + p1);
              const std::int32_t l = cost[i] + best - prev_min;
              cur[i] = l;
              cur_min = std::min(cur_min, l);
              out[i] += static_cast<std::uint32_t>(l);
            }
          }
          prev.swap(cur);
          prev_lo = c.lo;
          prev_len = c.len;
          prev_min = cur_min;
          x += dx;
          y += dy;
        }
      }
    });
  }

  RaggedCostVolume out;
  out.width = w;
  out.height = h;
  out.cells = volume.cells;
  out.costs.resize(acc.size());
  std::uint64_t saturated = 0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc[i] > RaggedCostVolume::kCostMax) {
      ++saturated;
      out.costs[i] = RaggedCostVolume::kCostMax;
    } else {
      out.costs[i] = static_cast<std::uint16_t>(acc[i]);
    }
  }
  out.saturated = saturated;
  return out;
}

RaggedCostVolume apply_prior_weight(const RaggedCostVolume& aggregated,
                                    const PriorField& prior,
                                    const AggregationConfig& config) {
  config.validate();
  RaggedCostVolume out = aggregated;
  if (config.weight_mode == WeightMode::off) return out;
  if (prior.y.width != aggregated.width || prior.y.height != aggregated.height)
    throw std::invalid_argument("apply_prior_weight: prior size mismatch");

  const bool literal = config.weight_mode == WeightMode::literal_eq4;
  parallel_chunks(aggregated.height, [&](std::int64_t y0, std::int64_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      for (int x = 0; x < aggregated.width; ++x) {
        if (!prior.y.valid(x, y) || !prior.sigma.valid(x, y)) continue;
        const double yp = prior.y.at(x, y);
        const double sig = prior.sigma.at(x, y);
        const auto& c = aggregated.cell(x, y);
        for (int i = 0; i < c.len; ++i) {
          const double dist = std::abs(static_cast<double>(c.lo + i) - yp);
          const double g = config.lambda_s * std::exp(-config.lambda_d * sig * dist);
          const double v = static_cast<double>(aggregated.costs[c.offset + i]) *
                           (literal ? g : 1.0 - g);
          out.costs[c.offset + i] = static_cast<std::uint16_t>(
              std::min<long long>(std::llround(v), RaggedCostVolume::kCostMax));
        }
      }
    }
  });
  return out;
}

bool uniqueness_check(std::span<const std::uint16_t> costs, int best_index,
                      int ratio) {
  const long long threshold =
      static_cast<long long>(costs[static_cast<std::size_t>(best_index)]) *
      (100 + ratio);
  for (int i = 0; i < static_cast<int>(costs.size()); ++i) {
    if (std::abs(i - best_index) <= 1) continue;
    if (static_cast<long long>(costs[static_cast<std::size_t>(i)]) * 100 <=
        threshold)
      return false;
  }
  return true;
}

DisparityMap wta_select(const RaggedCostVolume& aggregated,
                        const MatcherParams& params) {
  DisparityMap disp = DisparityMap::invalid_map(aggregated.width,
                                                aggregated.height);
  parallel_chunks(aggregated.height, [&](std::int64_t y0, std::int64_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      for (int x = 0; x < aggregated.width; ++x) {
        const auto& c = aggregated.cell(x, y);
        if (c.len <= 0) continue;
        const std::uint16_t* s = &aggregated.costs[c.offset];
        int best = 0;
        for (int i = 1; i < c.len; ++i)
          if (s[i] < s[best]) best = i;
        if (!uniqueness_check({s, static_cast<std::size_t>(c.len)}, best,
                              params.uniqueness_ratio))
          continue;
        double value = c.lo + best;
        if (best > 0 && best < c.len - 1) {
          const double sm = s[best - 1], s0 = s[best], sp = s[best + 1];
          const double denom = sm + sp - 2.0 * s0;
          if (denom > 0.0) {
            const double offset = std::clamp((sm - sp) / (2.0 * denom),
                                             -kMaxSubpixelOffset,
                                             kMaxSubpixelOffset);
            value += offset;
          }
        }
        disp.at(x, y) = static_cast<float>(value);
      }
    }
  });
  return disp;
}

DisparityMap right_disparity_from_volume(const RaggedCostVolume& aggregated,
                                         const MatcherParams& params) {
  (void)params;
  const int w = aggregated.width;
  DisparityMap disp = DisparityMap::invalid_map(w, aggregated.height);
  parallel_chunks(aggregated.height, [&](std::int64_t y0, std::int64_t y1) {
    std::vector<std::uint32_t> best_cost(static_cast<std::size_t>(w));
    std::vector<std::int32_t> best_d(static_cast<std::size_t>(w));
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      std::fill(best_cost.begin(), best_cost.end(),
                std::numeric_limits<std::uint32_t>::max());
      std::fill(best_d.begin(), best_d.end(),
                std::numeric_limits<std::int32_t>::min());
      // Ascending x gives ascending d per right column, so strict '<'
      // breaks ties towards the smallest disparity.
      for (int x = 0; x < w; ++x) {
        const auto& c = aggregated.cell(x, y);
        for (int i = 0; i < c.len; ++i) {
          const int rx = x - (c.lo + i);
          if (rx < 0 || rx >= w) continue;
          const std::uint32_t s = aggregated.costs[c.offset + i];
          if (s < best_cost[rx]) {
            best_cost[rx] = s;
            best_d[rx] = c.lo + i;
          }
        }
      }
      for (int x = 0; x < w; ++x)
        if (best_d[x] != std::numeric_limits<std::int32_t>::min())
          disp.at(x, y) = static_cast<float>(best_d[x]);
    }
  });
  return disp;
}

DisparityMap lr_consistency(const DisparityMap& disp_left,
                            const DisparityMap& disp_right, int max_diff) {
  if (max_diff < 0) return disp_left;
  if (!disp_left.same_size(disp_right))
    throw std::invalid_argument("lr_consistency: size mismatch");
  DisparityMap out = disp_left;
  parallel_chunks(disp_left.height, [&](std::int64_t y0, std::int64_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      for (int x = 0; x < disp_left.width; ++x) {
        if (!disp_left.valid(x, y)) continue;
        const float dl = disp_left.at(x, y);
        const int rx = x - static_cast<int>(std::lround(dl));
        if (rx < 0 || rx >= disp_left.width) continue;
        const float dr = disp_right.at(rx, y);
        if (!std::isfinite(dr) ||
            std::abs(dl - dr) > static_cast<float>(max_diff))
          out.at(x, y) = FloatMap::kInvalid;
      }
    }
  });
  return out;
}

DisparityMap speckle_filter(const DisparityMap& disp, int window, int range) {
  if (window <= 0) return disp;
  DisparityMap out = disp;
  const int w = disp.width, h = disp.height;
  std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<std::int32_t> stack;
  std::vector<std::int32_t> component;
  const float frange = static_cast<float>(range);
  std::int32_t next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t seed = y * w + x;
      if (label[seed] >= 0 || !disp.valid(x, y)) continue;
      stack.assign(1, seed);
      component.clear();
      label[seed] = next;
      while (!stack.empty()) {
        const std::int32_t p = stack.back();
        stack.pop_back();
        component.push_back(p);
        const int px = p % w, py = p / w;
        const float dv = disp.data[static_cast<std::size_t>(p)];
        const int nx[4] = {px - 1, px + 1, px, px};
        const int ny[4] = {py, py, py - 1, py + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          const std::int32_t q = ny[k] * w + nx[k];
          if (label[q] >= 0 || !disp.valid(nx[k], ny[k])) continue;
          if (std::abs(disp.data[static_cast<std::size_t>(q)] - dv) > frange)
            continue;
          label[q] = next;
          stack.push_back(q);
        }
      }
      if (static_cast<int>(component.size()) < window)
        for (std::int32_t p : component)
          out.data[static_cast<std::size_t>(p)] = FloatMap::kInvalid;
      ++next;
    }
  }
  return out;
}

MatchResult run_sgbm(const IntensityImage& left, const IntensityImage& right,
                     const MatcherParams& params, int directions) {
  params.validate();
  AggregationConfig config;
  config.directions = directions;
  config.weight_mode = WeightMode::off;

  MatchResult result;
  const PpsrMap full = PpsrMap::full_range(left.width, left.height, params);
  result.stats.mean_ppsr_width = full.mean_width();

  auto t0 = Clock::now();
  const RaggedCostVolume vol = build_cost_volume(left, right, full, params);
  result.stats.cost_ms = ms_since(t0);
  result.stats.cost_saturated = vol.saturated;
  result.stats.packing_ratio = vol.packing_ratio(params.num_disparities);

  t0 = Clock::now();
  const RaggedCostVolume agg = aggregate(vol, params, config);
  result.stats.aggregate_ms = ms_since(t0);
  result.stats.aggregate_saturated = agg.saturated;

  t0 = Clock::now();
  DisparityMap disp = wta_select(agg, params);
  result.stats.select_ms = ms_since(t0);

  t0 = Clock::now();
  const DisparityMap disp_right = right_disparity_from_volume(agg, params);
  disp = lr_consistency(disp, disp_right, params.disp12_max_diff);
  disp = speckle_filter(disp, params.speckle_window, params.speckle_range);
  result.stats.post_ms = ms_since(t0);

  result.disparity = std::move(disp);
  return result;
}

GuidedMatchResult run_sgbmp(const IntensityImage& left,
                            const IntensityImage& right,
                            const MatcherParams& params,
                            const PriorField& prior,
                            const AggregationConfig& config,
                            double lambda_b, Interp prior_interp) {
  params.validate();
  config.validate();
  if (!left.same_size(right))
    throw std::invalid_argument("run_sgbmp: image size mismatch");
  if (!prior.y.same_size(prior.sigma))
    throw std::invalid_argument("run_sgbmp: prior y/sigma size mismatch");
  if (lambda_b <= 0) throw std::invalid_argument("run_sgbmp: lambda_b must be > 0");

  GuidedMatchResult result;

  // Bring the prior to the matching resolution.
  if (prior.y.width == left.width && prior.y.height == left.height) {
    result.prior_y = prior.y;
    result.prior_sigma = prior.sigma;
  } else {
    const int factor = static_cast<int>(std::lround(
        static_cast<double>(left.width) / prior.y.width));
    if (factor < 1 || prior.y.width * factor < left.width ||
        prior.y.height * factor < left.height)
      throw std::invalid_argument(
          "run_sgbmp: prior resolution is not an integer fraction of the image");
    PriorField up = rescale_prior(prior, factor, prior_interp);
    result.prior_y = crop(up.y, left.width, left.height);
    result.prior_sigma = crop(up.sigma, left.width, left.height);
  }

  result.occlusion = derive_occlusion(result.prior_y);
  result.filtered_y = result.prior_y;
  OcclusionMask mask = result.occlusion;
  guided_filter(result.filtered_y, mask);

  const PriorField guided{result.filtered_y, result.prior_sigma};
  result.ppsr = compute_ppsr(guided, lambda_b, params);
  result.stats.mean_ppsr_width = result.ppsr.mean_width();

  auto t0 = Clock::now();
  const RaggedCostVolume vol = build_cost_volume(left, right, result.ppsr, params);
  result.stats.cost_ms = ms_since(t0);
  result.stats.cost_saturated = vol.saturated;
  result.stats.packing_ratio = vol.packing_ratio(params.num_disparities);

  t0 = Clock::now();
  const RaggedCostVolume agg = aggregate(vol, params, config);
  result.stats.aggregate_ms = ms_since(t0);
  result.stats.aggregate_saturated = agg.saturated;

  t0 = Clock::now();
  const RaggedCostVolume weighted = apply_prior_weight(agg, guided, config);
  result.stats.weight_ms = ms_since(t0);

  // The guided matcher runs without the uniqueness ratio: case dependent
  // ratios eliminate exactly the difficult pixels the prior recovers.
  MatcherParams select_params = params;
  select_params.uniqueness_ratio = 0;

  t0 = Clock::now();
  DisparityMap disp = wta_select(weighted, select_params);
  result.stats.select_ms = ms_since(t0);

  t0 = Clock::now();
  const DisparityMap disp_right =
      right_disparity_from_volume(weighted, select_params);
  disp = lr_consistency(disp, disp_right, params.disp12_max_diff);
  disp = speckle_filter(disp, params.speckle_window, params.speckle_range);
  result.stats.post_ms = ms_since(t0);

  result.disparity = std::move(disp);
  return result;
}

}  // namespace psgm
