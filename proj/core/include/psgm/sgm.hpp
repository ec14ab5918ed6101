#pragma once

#include <cstdint>
#include <string>

#include "psgm/cost.hpp"
#include "psgm/image.hpp"
#include "psgm/occlusion.hpp"
#include "psgm/prior.hpp"

namespace psgm {

enum class WeightMode { off, literal_eq4, attenuation };

WeightMode weight_mode_from_string(const std::string& s);
const char* to_string(WeightMode mode);

struct AggregationConfig {
  int directions = 8;  // 4 or 8 path directions
  WeightMode weight_mode = WeightMode::attenuation;
  double lambda_s = 0.1;
  double lambda_d = 0.1;

  void validate() const;
};

/// Path-wise cost aggregation over the ragged volume: for each direction r,
///   L_r(p,d) = C(p,d) + min(L_r(q,d), L_r(q,d+-1)+P1, min_k L_r(q,k)+P2)
///              - min_k L_r(q,k),  q = p - r,
/// where candidates missing from q's range drop out of the min. The result
/// holds S = sum_r L_r with 16-bit saturation (counted in `saturated`).
RaggedCostVolume aggregate(const RaggedCostVolume& volume,
                           const MatcherParams& params,
                           const AggregationConfig& config);

/// Reweights the aggregated cost around the prior disparity.
///  - literal_eq4:  S' = S * lambda_s * exp(-lambda_d * sigma * |d - y|)
///  - attenuation:  S' = S * (1 - lambda_s * exp(-lambda_d * sigma * |d - y|))
///    (the default: the discount is largest at d = y, so the prior is
///    favoured under cost minimisation)
///  - off: identity.
/// Pixels with an invalid prior are left untouched.
RaggedCostVolume apply_prior_weight(const RaggedCostVolume& aggregated,
                                    const PriorField& prior,
                                    const AggregationConfig& config);

/// True when the pixel survives the uniqueness test: no candidate further
/// than 1 disparity from the winner has cost <= S(d*) * (100+ratio)/100.
bool uniqueness_check(std::span<const std::uint16_t> costs, int best_index,
                      int ratio);

/// Winner-take-all with parabola subpixel refinement; ties break to the
/// smallest disparity and the uniqueness ratio of `params` is applied.
DisparityMap wta_select(const RaggedCostVolume& aggregated,
                        const MatcherParams& params);

/// Right-image disparity re-projected from the left aggregated volume:
/// dispR(x) = argmin_d S(x + d, d).
DisparityMap right_disparity_from_volume(const RaggedCostVolume& aggregated,
                                         const MatcherParams& params);

/// Invalidates left pixels whose re-projected right disparity disagrees by
/// more than max_diff px (looked up at the rounded position). Negative
/// max_diff disables the check.
DisparityMap lr_consistency(const DisparityMap& disp_left,
                            const DisparityMap& disp_right, int max_diff);

/// Invalidates 4-connected components (|delta d| <= range joins neighbours)
/// smaller than `window` pixels.
DisparityMap speckle_filter(const DisparityMap& disp, int window, int range);

struct MatchStats {
  double cost_ms = 0;
  double aggregate_ms = 0;
  double weight_ms = 0;
  double select_ms = 0;
  double post_ms = 0;
  std::uint64_t cost_saturated = 0;
  std::uint64_t aggregate_saturated = 0;
  double mean_ppsr_width = 0;
  double packing_ratio = 0;
};

struct MatchResult {
  DisparityMap disparity;
  MatchStats stats;
};

/// Baseline semi-global block matcher: full-range search, no prior
/// weighting, uniqueness/LR/speckle checks as configured in params.
MatchResult run_sgbm(const IntensityImage& left, const IntensityImage& right,
                     const MatcherParams& params, int directions = 8);

struct GuidedMatchResult {
  DisparityMap disparity;
  MatchStats stats;
  FloatMap prior_y;        // prior disparity at matching resolution
  FloatMap prior_sigma;    // prior uncertainty at matching resolution
  FloatMap filtered_y;     // prior disparity after the guided filter
  OcclusionMask occlusion; // occlusion proposal derived from prior_y
  PpsrMap ppsr;
};

/// Prior-guided matcher: upsamples the prior to the matching resolution,
/// derives and repairs the occlusion proposal, restricts the search to the
/// per-pixel ranges, weights the aggregated cost towards the prior and runs
/// the post checks with the uniqueness test forced off (ratio 0).
GuidedMatchResult run_sgbmp(const IntensityImage& left,
                            const IntensityImage& right,
                            const MatcherParams& params,
                            const PriorField& prior,
                            const AggregationConfig& config,
                            double lambda_b = 3.0,
                            Interp prior_interp = Interp::bilinear);

}  // namespace psgm
