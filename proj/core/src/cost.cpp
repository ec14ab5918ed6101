#include "psgm/cost.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "psgm/errors.hpp"
#include "psgm/parallel.hpp"

namespace psgm {

void MatcherParams::validate() const {
  if (num_disparities < 1)
    throw std::invalid_argument("num_disparities must be >= 1");
  if (block_size < 1 || block_size % 2 == 0)
    throw std::invalid_argument("block_size must be odd and >= 1");
  if (!(p2 > p1 && p1 > 0))
    throw std::invalid_argument("penalties must satisfy p2 > p1 > 0");
  if (p2 >= (1 << 24))
    throw std::invalid_argument("p2 too large for cost accumulation");
  if (prefilter_cap < 1 || prefilter_cap > 127)
    throw std::invalid_argument("prefilter_cap must be in [1, 127]");
  if (uniqueness_ratio < 0)
    throw std::invalid_argument("uniqueness_ratio must be >= 0");
  if (cost_scale_divisor < 1)
    throw std::invalid_argument("cost_scale_divisor must be >= 1");
  if (speckle_window < 0 || speckle_range < 0)
    throw std::invalid_argument("speckle parameters must be >= 0");
}

double PpsrMap::mean_width() const {
  if (lo.empty()) return 0.0;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < lo.size(); ++i)
    total += static_cast<std::uint64_t>(hi[i] - lo[i] + 1);
  return static_cast<double>(total) / static_cast<double>(lo.size());
}

PpsrMap PpsrMap::full_range(int width, int height, const MatcherParams& params) {
  PpsrMap map(width, height);
  std::fill(map.lo.begin(), map.lo.end(), params.min_disparity);
  std::fill(map.hi.begin(), map.hi.end(), params.max_disparity());
  return map;
}

double RaggedCostVolume::mean_range_width() const {
  if (cells.empty()) return 0.0;
  return static_cast<double>(costs.size()) / static_cast<double>(cells.size());
}

double RaggedCostVolume::packing_ratio(int num_disparities) const {
  if (cells.empty() || num_disparities < 1) return 0.0;
  return mean_range_width() / static_cast<double>(num_disparities);
}

IntensityImage xsobel_prefilter(const IntensityImage& img, int cap) {
  if (cap < 1 || cap > 127)
    throw std::invalid_argument("prefilter cap must be in [1, 127]");
  IntensityImage out(img.width, img.height);
  parallel_chunks(img.height, [&](std::int64_t y0, std::int64_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      for (int x = 0; x < img.width; ++x) {
        const int gx =
            (img.at_clamped(x + 1, y - 1) - img.at_clamped(x - 1, y - 1)) +
            2 * (img.at_clamped(x + 1, y) - img.at_clamped(x - 1, y)) +
            (img.at_clamped(x + 1, y + 1) - img.at_clamped(x - 1, y + 1));
        out.at(x, y) =
            static_cast<std::uint8_t>(std::clamp(gx, -cap, cap) + cap);
      }
    }
  });
  return out;
}

namespace {

// Directional BT measure in doubled units: the dissimilarity of probe value
// v (doubled) against the half-pixel interval around ref[i].
inline int bt_one_sided2(int v2, const std::uint8_t* ref, int i, int n) {
  const int c = 2 * ref[i];
  const int lo_n = ref[std::max(i - 1, 0)] + ref[i];
  const int hi_n = ref[i] + ref[std::min(i + 1, n - 1)];
  const int mn = std::min(c, std::min(lo_n, hi_n));
  const int mx = std::max(c, std::max(lo_n, hi_n));
  return std::max({0, v2 - mx, mn - v2});
}

}  // namespace

int bt_pixel_cost(std::span<const std::uint8_t> left_row,
                  std::span<const std::uint8_t> right_row, int x, int d,
                  int no_evidence) {
  const int lw = static_cast<int>(left_row.size());
  const int rw = static_cast<int>(right_row.size());
  const int rx = x - d;
  if (x < 0 || x >= lw || rx < 0 || rx >= rw) return no_evidence;
  const int dl = bt_one_sided2(2 * left_row[x], right_row.data(), rx, rw);
  const int dr = bt_one_sided2(2 * right_row[rx], left_row.data(), x, lw);
  return std::min(dl, dr) / 2;
}

void bt_cost_line(const std::uint8_t* left_row, const std::uint8_t* right_row,
                  int width, int d, int no_evidence, std::uint16_t* out) {
  const int x_begin = std::max(0, d);           // rx >= 0
  const int x_end = std::min(width, width + d); // rx < width
  for (int x = 0; x < std::min(x_begin, width); ++x)
    out[x] = static_cast<std::uint16_t>(no_evidence);
  for (int x = std::max(0, x_end); x < width; ++x)
    out[x] = static_cast<std::uint16_t>(no_evidence);
  for (int x = x_begin; x < x_end; ++x) {
    const int rx = x - d;
    const int dl = bt_one_sided2(2 * left_row[x], right_row, rx, width);
    const int dr = bt_one_sided2(2 * right_row[rx], left_row, x, width);
    out[x] = static_cast<std::uint16_t>(std::min(dl, dr) / 2);
  }
}

RaggedCostVolume build_cost_volume(const IntensityImage& left,
                                   const IntensityImage& right,
                                   const PpsrMap& ppsr,
                                   const MatcherParams& params) {
  params.validate();
  if (!left.same_size(right))
    throw std::invalid_argument("build_cost_volume: image size mismatch");
  if (ppsr.width != left.width || ppsr.height != left.height)
    throw std::invalid_argument("build_cost_volume: PPSR size mismatch");

  const int w = left.width;
  const int h = left.height;
  const int r = params.block_size / 2;

  RaggedCostVolume vol;
  vol.width = w;
  vol.height = h;
  vol.cells.resize(static_cast<std::size_t>(w) * h);

  // Pack layout first so rows can be filled independently.
  std::uint64_t packed = 0;
  for (std::size_t i = 0; i < vol.cells.size(); ++i) {
    const int lo = std::clamp(ppsr.lo[i], params.min_disparity,
                              params.max_disparity());
    const int hi = std::clamp(ppsr.hi[i], params.min_disparity,
                              params.max_disparity());
    if (hi < lo)
      throw std::invalid_argument("build_cost_volume: empty searching range");
    vol.cells[i].offset = static_cast<std::uint32_t>(packed);
    vol.cells[i].lo = lo;
    vol.cells[i].len = hi - lo + 1;
    packed += static_cast<std::uint64_t>(hi - lo + 1);
  }
  if (packed > 0xffffffffull)
    throw std::invalid_argument("build_cost_volume: volume exceeds 4Gi entries");
  vol.costs.resize(packed);

  const IntensityImage lpre = xsobel_prefilter(left, params.prefilter_cap);
  const IntensityImage rpre = xsobel_prefilter(right, params.prefilter_cap);
  const int sobel_sat = 2 * params.prefilter_cap;
  const int div = params.cost_scale_divisor;

  std::atomic<std::uint64_t> saturated{0};
  parallel_chunks(h, [&](std::int64_t y0, std::int64_t y1) {
    std::vector<std::uint16_t> btline(w);
    std::vector<std::uint32_t> vsum(w);
    std::vector<std::uint64_t> prefix(w + 1);
    std::uint64_t local_sat = 0;
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
      // Disparities actually requested somewhere in this row.
      int row_lo = params.max_disparity() + 1, row_hi = params.min_disparity - 1;
      for (int x = 0; x < w; ++x) {
        const auto& c = vol.cell(x, y);
        row_lo = std::min(row_lo, c.lo);
        row_hi = std::max(row_hi, c.lo + c.len - 1);
      }
      std::vector<std::uint8_t> present(
          static_cast<std::size_t>(row_hi - row_lo + 1), 0);
      for (int x = 0; x < w; ++x) {
        const auto& c = vol.cell(x, y);
        for (int i = 0; i < c.len; ++i) present[c.lo + i - row_lo] = 1;
      }

      for (int d = row_lo; d <= row_hi; ++d) {
        if (!present[d - row_lo]) continue;
        std::fill(vsum.begin(), vsum.end(), 0u);
        for (int by = y - r; by <= y + r; ++by) {
          const int yy = std::clamp(by, 0, h - 1);
          bt_cost_line(lpre.row(yy), rpre.row(yy), w, d, sobel_sat,
                       btline.data());
          for (int x = 0; x < w; ++x) vsum[x] += btline[x];
          if (params.add_raw_bt) {
            bt_cost_line(left.row(yy), right.row(yy), w, d, 255, btline.data());
            for (int x = 0; x < w; ++x) vsum[x] += btline[x];
          }
        }
        prefix[0] = 0;
        for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + vsum[x];
        for (int x = 0; x < w; ++x) {
          const auto& c = vol.cell(x, y);
          if (d < c.lo || d >= c.lo + c.len) continue;
          const int xl = std::max(x - r, 0);
          const int xr = std::min(x + r, w - 1);
          std::uint64_t sum = prefix[xr + 1] - prefix[xl];
          sum += static_cast<std::uint64_t>(std::max(0, r - x)) * vsum[0];
          sum += static_cast<std::uint64_t>(std::max(0, x + r - (w - 1))) *
                 vsum[w - 1];
          const std::uint64_t scaled = (sum + div / 2) / div;
          if (scaled > RaggedCostVolume::kCostMax) ++local_sat;
          vol.costs[c.offset + static_cast<std::uint32_t>(d - c.lo)] =
              static_cast<std::uint16_t>(
                  std::min<std::uint64_t>(scaled, RaggedCostVolume::kCostMax));
        }
      }
    }
    saturated += local_sat;
  });
  vol.saturated = saturated.load();
  return vol;
}

void dump_volume(const RaggedCostVolume& volume, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error(path + ": cannot open file");
  const char magic[8] = {'P', 'S', 'G', 'M', 'V', 'O', 'L', '1'};
  const std::uint32_t w = static_cast<std::uint32_t>(volume.width);
  const std::uint32_t h = static_cast<std::uint32_t>(volume.height);
  const std::uint64_t packed = volume.costs.size();
  bool ok = std::fwrite(magic, 1, 8, f) == 8 &&
            std::fwrite(&w, 4, 1, f) == 1 && std::fwrite(&h, 4, 1, f) == 1 &&
            std::fwrite(&packed, 8, 1, f) == 1 &&
            std::fwrite(volume.cells.data(), sizeof(RaggedCostVolume::Cell),
                        volume.cells.size(), f) == volume.cells.size() &&
            std::fwrite(volume.costs.data(), 2, volume.costs.size(), f) ==
                volume.costs.size();
  std::fclose(f);
  if (!ok) throw io_error(path + ": short write");
}

RaggedCostVolume load_volume(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw io_error(path + ": cannot open file");
  char magic[8];
  std::uint32_t w = 0, h = 0;
  std::uint64_t packed = 0;
  RaggedCostVolume vol;
  bool ok = std::fread(magic, 1, 8, f) == 8 &&
            std::memcmp(magic, "PSGMVOL1", 8) == 0 &&
            std::fread(&w, 4, 1, f) == 1 && std::fread(&h, 4, 1, f) == 1 &&
            std::fread(&packed, 8, 1, f) == 1;
  if (ok) {
    vol.width = static_cast<int>(w);
    vol.height = static_cast<int>(h);
    vol.cells.resize(static_cast<std::size_t>(w) * h);
    vol.costs.resize(packed);
    ok = std::fread(vol.cells.data(), sizeof(RaggedCostVolume::Cell),
                    vol.cells.size(), f) == vol.cells.size() &&
         std::fread(vol.costs.data(), 2, vol.costs.size(), f) ==
             vol.costs.size();
  }
  std::fclose(f);
  if (!ok) throw io_error(path + ": not a PSGM volume dump or truncated");
  return vol;
}

}  // namespace psgm
