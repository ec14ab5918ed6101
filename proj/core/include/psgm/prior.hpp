#pragma once

#include <string>

#include "psgm/cost.hpp"
#include "psgm/image.hpp"

namespace psgm {

/// Lower bound for the disparity uncertainty, in pixels of the map's own
/// resolution. Keeps searching ranges well defined when a prior is
/// over-confident.
inline constexpr double kSigmaMin = 0.25;

/// Uncertainty at which a pixel's searching range covers the full global
/// range, so a no-information prior degenerates to plain SGBM search.
inline double sigma_max_for(const MatcherParams& params, double lambda_b) {
  return params.num_disparities / lambda_b;
}

/// Per-pixel disparity prediction y and uncertainty sigma. A pixel is valid
/// in y exactly when it is valid in sigma.
struct PriorField {
  FloatMap y;
  FloatMap sigma;

  bool same_size(const PriorField& o) const {
    return y.same_size(o.y) && sigma.same_size(o.sigma);
  }
};

/// Loads a disparity/uncertainty pair from PFM files. When is_log_variance
/// is set the second map holds delta = log(sigma^2) and is converted with
/// sigma = exp(delta/2). Sigma is floored at kSigmaMin. Pixels must be valid
/// in both maps or in neither; mixed pixels raise io_error with their count.
PriorField load_prior(const std::string& y_path,
                      const std::string& sigma_or_delta_path,
                      bool is_log_variance);

/// GPU-free prior source: runs the full-range matcher (uniqueness ratio 0)
/// on factor-downsampled images and derives sigma from the curvature of the
/// aggregated cost curve at the winner (sigma = sqrt(p1/curvature), clamped
/// to [kSigmaMin, sigma_max]). Pixels that fail the left-right or speckle
/// checks get sigma = sigma_max and a disparity filled horizontally from the
/// nearest valid neighbours; rows with no valid pixel stay invalid. The
/// returned field lives at the downsampled resolution.
PriorField pyramid_prior(const IntensityImage& left,
                         const IntensityImage& right,
                         const MatcherParams& params, int factor,
                         double lambda_b = 3.0);

/// Integer searching ranges [floor(y - lambda_b*sigma), ceil(y + lambda_b*sigma)]
/// clamped to the global range; invalid prior pixels fall back to the full
/// global range.
PpsrMap compute_ppsr(const PriorField& prior, double lambda_b,
                     const MatcherParams& params);

/// Upsamples y and sigma by an integer factor; both values scale with the
/// factor since disparity is proportional to image width.
PriorField rescale_prior(const PriorField& prior, int factor,
                         Interp interp = Interp::bilinear);

}  // namespace psgm
