#pragma once

#include <cstdint>
#include <vector>

#include "psgm/image.hpp"

namespace psgm {

/// Binary occlusion proposal, 1 = proposed occluded.
struct OcclusionMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  OcclusionMask() = default;
  OcclusionMask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t count_set() const;
  IntensityImage to_image() const;  // 0/255 for PGM export

  bool operator==(const OcclusionMask&) const = default;
};

/// Z-buffer warp test on each row: pixel p is flagged when another pixel of
/// the row lands on the same right-image column with a disparity more than
/// half a pixel larger. Invalid disparities are flagged occluded.
OcclusionMask derive_occlusion(const FloatMap& y);

enum class FilterDirection { horizontal, vertical };

/// One median-vote repair pass over rows or columns with a 3-wide window.
/// Interior pixels whose mask flag differs from the window median are
/// replaced by the average of their two neighbours, and the flag by the
/// median. The scan is sequential and in place, so updates are visible to
/// later pixels of the same line; `buffered` switches to a variant that
/// reads the original line instead.
void guided_filter_pass(FloatMap& y, OcclusionMask& mask,
                        FilterDirection direction, bool buffered = false);

/// Horizontal pass followed by a vertical pass on its result.
void guided_filter(FloatMap& y, OcclusionMask& mask, bool buffered = false);

}  // namespace psgm
