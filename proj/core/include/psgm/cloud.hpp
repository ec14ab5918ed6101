#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "psgm/image.hpp"

namespace psgm {

/// Stereo rig intrinsics in the Middlebury convention. Depth is
/// Z = focal * baseline / (d + doffs), with the baseline in meters.
struct Calibration {
  double focal_px = 0;
  double baseline_m = 0;
  double doffs_px = 0;
  double cx_px = 0;
  double cy_px = 0;
  int width = 0;   // optional, 0 when unknown
  int height = 0;
  int ndisp = 0;

  void validate() const;
};

/// Parses a Middlebury calib.txt (cam0 matrix, doffs, baseline in mm,
/// width/height/ndisp). The baseline is converted to meters.
Calibration load_middlebury_calib(const std::string& path);

struct PointCloud {
  std::vector<std::array<float, 3>> points;  // meters
  std::vector<float> scalar;  // optional per-point value; empty or same size

  std::size_t size() const { return points.size(); }
  bool has_scalar() const { return scalar.size() == points.size(); }
};

/// Reprojects valid disparities: Z = f*B/(d+doffs), X = (u-cx)Z/f,
/// Y = (v-cy)Z/f. Pixels with d+doffs <= 0 are skipped. `stride` subsamples
/// the grid. The scalar channel carries the source intensity when an image
/// is given.
PointCloud disparity_to_cloud(const DisparityMap& disp,
                              const Calibration& calib, int stride = 1,
                              const IntensityImage* intensity = nullptr);

struct PlaneErrorReport {
  static constexpr double kHistogramBinWidth = 0.001;  // meters
  static constexpr int kHistogramBins = 50;            // [0, 0.05) + overflow

  std::vector<float> errors;  // per query point; kInvalid when unevaluated
  std::uint64_t evaluated = 0;
  std::uint64_t unevaluated = 0;
  double mean = 0;  // over evaluated points
  std::vector<std::uint64_t> histogram;  // kHistogramBins + 1 (overflow)

  std::string to_text() const;
};

/// For every query point, fits a least-squares plane to the reference points
/// within `radius` (needs >= 3 sufficiently non-collinear neighbours) and
/// records the absolute point-to-plane distance. Unevaluated points are
/// counted, never folded into the mean.
PlaneErrorReport point_to_plane_error(const PointCloud& pred,
                                      const PointCloud& ref, double radius);

/// Binary little-endian PLY. With color_by_error the scalar channel is
/// rendered through a blue-to-red map over [0, error_cap]; values at or
/// above the cap are pure red (255,0,0).
void write_ply(const PointCloud& cloud, const std::string& path,
               bool color_by_error = false, double error_cap = 0.05);

/// Reads ascii or binary little-endian PLY vertices (x/y/z as float or
/// double); other properties and elements are skipped.
PointCloud read_ply(const std::string& path);

}  // namespace psgm
