#pragma once

#include <cstdint>
#include <vector>

#include "psgm/cost.hpp"
#include "psgm/image.hpp"
#include "psgm/metrics.hpp"

// Independent reference implementations used as test oracles. They follow
// the plain textbook formulations (real-valued BT, pairwise path penalties,
// straight loops) rather than the production code paths.
namespace psgm::oracle {

/// 3x3 horizontal Sobel with replicated borders, clamped to [-cap,cap]+cap.
IntensityImage sobel_reference(const IntensityImage& img, int cap);

/// Real-valued Birchfield-Tomasi with explicit half-pixel interpolation,
/// floored to an integer at the end.
int bt_reference(const std::vector<std::uint8_t>& left,
                 const std::vector<std::uint8_t>& right, int x, int d,
                 int no_evidence);

/// Triple-loop block cost over the Sobel-prefiltered pair (plus optional raw
/// term), clamped windows, rounded division by the cost divisor.
RaggedCostVolume cost_volume_reference(const IntensityImage& left,
                                       const IntensityImage& right,
                                       const PpsrMap& ppsr,
                                       const MatcherParams& params);

/// Scanline DP with pairwise penalties V(d,k) in {0, P1, P2}, evaluated over
/// every candidate pair, summed over the first `directions` path directions
/// and saturated to 16 bits.
RaggedCostVolume aggregate_reference(const RaggedCostVolume& volume,
                                     const MatcherParams& params,
                                     int directions);

/// Naive single-pass metric loops.
MetricReport metrics_reference(const DisparityMap& pred, const FloatMap& gt);

/// Connected component size containing (x, y) under 4-connectivity with
/// |delta d| <= range, or 0 for invalid pixels.
std::size_t component_size_reference(const DisparityMap& disp, int x, int y,
                                     int range);

}  // namespace psgm::oracle
