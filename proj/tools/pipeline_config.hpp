#pragma once

#include <cstdint>
#include <string>

#include "psgm/cost.hpp"
#include "psgm/sgm.hpp"

namespace psgm::cli {

/// One run's complete configuration. Serialises to diffable `key = value`
/// lines; the manifest written next to the outputs is itself a valid config
/// file, so any run can be reproduced with `--config manifest.txt`.
struct PipelineConfig {
  // matcher
  MatcherParams matcher;
  // aggregation / prior weighting
  AggregationConfig agg;
  double lambda_b = 3.0;
  int downsample = 4;
  std::string prior_source = "pyramid";  // pyramid | files
  bool prior_logvar = false;
  bool nn_upsample = false;
  // inputs
  std::string left, right, gt, mask, calib;
  std::string prior_y, prior_sigma, ref_cloud;
  std::string pred;  // disparity PFM consumed by eval/cloud
  // outputs
  std::string out = "out";
  // execution
  int threads = 0;
  std::uint32_t seed = 7;
  // synth
  std::string synth_kind = "shift";
  int synth_width = 512;
  int synth_height = 512;
  int synth_disparity = 24;
  // eval
  int left_band = 0;
  // cloud
  int cloud_stride = 1;
  double cloud_radius = 0.05;
  double error_cap = 0.05;
  // batch bookkeeping; records which subcommand produced a manifest
  std::string command;

  /// Applies one key=value pair; unknown keys raise std::invalid_argument.
  void apply(const std::string& key, const std::string& value);
  /// Full dump in apply()-compatible form.
  std::string serialize() const;
  void validate() const;
};

/// Loads `key = value` lines ('#' starts a comment) into an existing config.
void load_config_file(const std::string& path, PipelineConfig& config);

/// FNV-1a 64 over a file's bytes, for the manifest's input records.
std::uint64_t file_digest(const std::string& path);

}  // namespace psgm::cli
