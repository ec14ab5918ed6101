#pragma once

#include <cstdint>
#include <string>

#include "psgm/image.hpp"

namespace psgm {

/// Middlebury-style disparity metrics. Percentages are over the evaluable
/// pixels (valid ground truth, inside the mask when one is given); avg/std
/// are over the evaluable pixels with a valid prediction. std_err uses the
/// population (divide-by-N) convention.
struct MetricReport {
  double bad1_0 = 0;   // % with valid prediction and |err| > 1.0 px
  double invalid = 0;  // % without a valid prediction
  double avg_err = 0;  // mean |err| in px
  double std_err = 0;  // population stddev of |err| in px
  std::uint64_t evaluable = 0;
  std::uint64_t valid_pred = 0;
  std::uint64_t invalid_pred = 0;
  std::uint64_t bad_count = 0;

  std::string to_text() const;
  /// Single line of space-separated key=value pairs.
  std::string to_kv() const;
};

/// Computes the report over pixels with valid ground truth. When a mask is
/// given, only pixels with mask value 255 are evaluated (Middlebury nonocc
/// convention). Throws numeric_error when no pixel is evaluable.
MetricReport disparity_metrics(const DisparityMap& pred, const FloatMap& gt,
                               const IntensityImage* mask = nullptr);

/// Marks the leftmost `band` columns invalid. Matches the reference
/// treatment of dense priors, which cannot predict the left disparity band.
void apply_left_band_mask(FloatMap& map, int band);

struct HeteroscedasticLoss {
  double loss = 0;       // data_term + regulariser
  double data_term = 0;  // (1/2N) sum E_p exp(-delta_p)
  double reg_term = 0;   // (1/2N) sum delta_p
  std::uint64_t count = 0;
  FloatMap per_pixel;    // per-pixel contribution, invalid outside the eval set
};

/// Gaussian negative log-likelihood in log-variance form over valid ground
/// truth pixels:
///   L = (1/2N) sum E_p e^(-delta_p) + (1/2N) sum delta_p,
///   E_p = (gt_p - pred_p)^2.
/// Throws numeric_error when the evaluation set is empty.
HeteroscedasticLoss heteroscedastic_loss(const FloatMap& pred,
                                         const FloatMap& delta,
                                         const FloatMap& gt);

/// Analytic d L / d delta_p = (1 - E_p e^(-delta_p)) / (2N).
double heteroscedastic_loss_ddelta(double pred, double delta, double gt,
                                   std::uint64_t n);

}  // namespace psgm
