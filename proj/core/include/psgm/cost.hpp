#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psgm/image.hpp"

namespace psgm {

/// Block matcher parameters. Defaults follow the reference setup this
/// toolkit reproduces: SAD window 7, P1 1000, P2 4000, disp12MaxDiff 2,
/// preFilterCap 31, uniquenessRatio 10, speckle 39/4.
struct MatcherParams {
  int min_disparity = 0;
  int num_disparities = 64;
  int block_size = 7;  // odd
  int p1 = 1000;
  int p2 = 4000;
  int prefilter_cap = 31;
  int uniqueness_ratio = 10;  // percent; 0 still rejects non-adjacent ties
  int disp12_max_diff = 2;    // px; negative disables the LR check
  int speckle_window = 39;    // px; 0 disables the speckle filter
  int speckle_range = 4;      // px
  int cost_scale_divisor = 1; // block cost is divided by this, rounded
  bool add_raw_bt = false;    // adds a raw-intensity BT term to the cost

  int max_disparity() const { return min_disparity + num_disparities - 1; }

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

/// Per-pixel inclusive disparity interval [lo, hi].
struct PpsrMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> lo;
  std::vector<std::int32_t> hi;

  PpsrMap() = default;
  PpsrMap(int w, int h)
      : width(w), height(h),
        lo(static_cast<std::size_t>(w) * h, 0),
        hi(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  int lo_at(int x, int y) const { return lo[idx(x, y)]; }
  int hi_at(int x, int y) const { return hi[idx(x, y)]; }
  double mean_width() const;

  static PpsrMap full_range(int width, int height, const MatcherParams& params);
};

/// Packed per-pixel variable-length cost arrays.
struct RaggedCostVolume {
  struct Cell {
    std::uint32_t offset = 0;
    std::int32_t lo = 0;
    std::int32_t len = 0;
  };
  static constexpr std::uint16_t kCostMax = 65535;

  int width = 0;
  int height = 0;
  std::vector<Cell> cells;            // width*height
  std::vector<std::uint16_t> costs;   // sum of len over cells
  std::uint64_t saturated = 0;        // entries clamped at kCostMax

  const Cell& cell(int x, int y) const {
    return cells[static_cast<std::size_t>(y) * width + x];
  }
  std::uint16_t cost(const Cell& c, int d) const {
    return costs[c.offset + static_cast<std::uint32_t>(d - c.lo)];
  }
  double mean_range_width() const;
  /// packed length / (pixels * num_disparities); <= 1 by construction.
  double packing_ratio(int num_disparities) const;
};

/// Horizontal Sobel response clamped to [-cap, cap] and offset by +cap, so
/// outputs lie in [0, 2*cap]. Borders are replicated.
IntensityImage xsobel_prefilter(const IntensityImage& img, int cap);

/// Birchfield-Tomasi sampling-insensitive dissimilarity between left pixel x
/// and right pixel x-d, the symmetric min of both directional measures.
/// Out-of-range x-d yields no_evidence (no-evidence saturation).
int bt_pixel_cost(std::span<const std::uint8_t> left_row,
                  std::span<const std::uint8_t> right_row, int x, int d,
                  int no_evidence);

/// BT dissimilarity for a whole row at fixed disparity.
void bt_cost_line(const std::uint8_t* left_row, const std::uint8_t* right_row,
                  int width, int d, int no_evidence, std::uint16_t* out);

/// Block-summed BT cost over the x-Sobel prefiltered pair (optionally plus a
/// raw-intensity BT term), evaluated only inside each pixel's searching
/// range and divided by cost_scale_divisor with rounding. Windows touching
/// the border are edge-replicated.
RaggedCostVolume build_cost_volume(const IntensityImage& left,
                                   const IntensityImage& right,
                                   const PpsrMap& ppsr,
                                   const MatcherParams& params);

/// Flat binary debug dump: 8-byte magic, u32 width, u32 height, u64 packed
/// length (24-byte header), then the cell table and the packed costs.
void dump_volume(const RaggedCostVolume& volume, const std::string& path);
RaggedCostVolume load_volume(const std::string& path);

}  // namespace psgm
