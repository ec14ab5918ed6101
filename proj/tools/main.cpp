#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "pipeline_config.hpp"
#include "psgm/errors.hpp"
#include "psgm/version.hpp"

using psgm::cli::PipelineConfig;

namespace {

// Exit codes: 0 success, 2 config error, 3 I/O error, 4 numeric failure.
enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kNumericError = 4 };

void add_matcher_options(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--min-disp", cfg.matcher.min_disparity, "Minimum disparity");
  cmd->add_option("--num-disp", cfg.matcher.num_disparities,
                  "Number of disparities");
  cmd->add_option("--block-size", cfg.matcher.block_size, "Odd SAD window size");
  cmd->add_option("--p1", cfg.matcher.p1, "Small-jump penalty");
  cmd->add_option("--p2", cfg.matcher.p2, "Large-jump penalty");
  cmd->add_option("--prefilter-cap", cfg.matcher.prefilter_cap,
                  "X-Sobel clamp value");
  cmd->add_option("--uniqueness-ratio", cfg.matcher.uniqueness_ratio,
                  "Uniqueness margin in percent");
  cmd->add_option("--disp12-max-diff", cfg.matcher.disp12_max_diff,
                  "LR check tolerance in px (negative disables)");
  cmd->add_option("--speckle-window", cfg.matcher.speckle_window,
                  "Minimum surviving component size in px");
  cmd->add_option("--speckle-range", cfg.matcher.speckle_range,
                  "Disparity step joining a component");
  cmd->add_option("--cost-scale-divisor", cfg.matcher.cost_scale_divisor,
                  "Divides the block matching cost (3 for 4K inputs)");
  cmd->add_flag("--add-raw-bt", cfg.matcher.add_raw_bt,
                "Add a raw-intensity BT term to the matching cost");
  cmd->add_option("--directions", cfg.agg.directions,
                  "Aggregation path directions (4 or 8)");
  cmd->add_option_function<std::string>(
         "--weight-mode",
         [&cfg](const std::string& s) {
           cfg.agg.weight_mode = psgm::weight_mode_from_string(s);
         },
         "Prior weighting: off|literal|attenuation")
      ->check(CLI::IsMember({"off", "literal", "literal_eq4", "attenuation"}));
  cmd->add_option("--lambda-s", cfg.agg.lambda_s, "Global weight factor");
  cmd->add_option("--lambda-d", cfg.agg.lambda_d, "Distance discount factor");
  cmd->add_option("--lambda-b", cfg.lambda_b, "Searching range half width in sigmas");
  cmd->add_option("--downsample", cfg.downsample, "Prior resolution factor");
}

void add_common_options(CLI::App* cmd, PipelineConfig& cfg,
                        std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "key = value config file; flags override its entries");
  cmd->add_option("--out", cfg.out, "Output directory");
  cmd->add_option("--threads", cfg.threads, "Worker threads (0 = hardware)");
  cmd->add_option("--seed", cfg.seed, "Seed for synthetic generators");
}

}  // namespace

int main(int argc, char** argv) {
  PipelineConfig cfg;
  std::string config_path;

  // The config file seeds the defaults, so explicit flags must win: find and
  // load it before CLI11 assigns anything.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }
  try {
    if (!config_path.empty()) psgm::cli::load_config_file(config_path, cfg);
  } catch (const psgm::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }

  CLI::App app{"prior-guided semi-global block matching toolkit"};
  app.set_version_flag("--version", psgm::kVersion);
  app.require_subcommand(1);
  std::string cases_file;

  CLI::App* sgbm = app.add_subcommand("sgbm", "Baseline full-range matcher");
  sgbm->add_option("--left", cfg.left, "Left image (PGM/PPM/PNG)");
  sgbm->add_option("--right", cfg.right, "Right image");
  sgbm->add_option("--gt", cfg.gt, "Ground-truth disparity PFM (enables metrics)");
  sgbm->add_option("--mask", cfg.mask, "Evaluation mask (255 = evaluate)");
  add_matcher_options(sgbm, cfg);
  add_common_options(sgbm, cfg, config_path);

  CLI::App* sgbmp = app.add_subcommand("sgbmp", "Prior-guided matcher");
  sgbmp->add_option("--left", cfg.left, "Left image");
  sgbmp->add_option("--right", cfg.right, "Right image");
  sgbmp->add_option("--gt", cfg.gt, "Ground-truth disparity PFM");
  sgbmp->add_option("--mask", cfg.mask, "Evaluation mask");
  sgbmp->add_option("--prior", cfg.prior_source,
                    "Prior source: pyramid | files")
      ->check(CLI::IsMember({"pyramid", "files"}));
  sgbmp->add_option("--prior-y", cfg.prior_y, "Prior disparity PFM");
  sgbmp->add_option("--prior-sigma", cfg.prior_sigma,
                    "Prior sigma (or log-variance) PFM");
  sgbmp->add_flag("--prior-logvar", cfg.prior_logvar,
                  "Second prior map holds log(sigma^2)");
  sgbmp->add_flag("--nn-upsample", cfg.nn_upsample,
                  "Nearest-neighbour prior upsampling instead of bilinear");
  add_matcher_options(sgbmp, cfg);
  add_common_options(sgbmp, cfg, config_path);

  CLI::App* prior = app.add_subcommand(
      "prior", "Export the pyramid prior (y/sigma PFM pair + metadata)");
  prior->add_option("--left", cfg.left, "Left image");
  prior->add_option("--right", cfg.right, "Right image");
  add_matcher_options(prior, cfg);
  add_common_options(prior, cfg, config_path);

  CLI::App* eval = app.add_subcommand("eval", "Disparity metrics vs ground truth");
  eval->add_option("--pred", cfg.pred, "Predicted disparity PFM");
  eval->add_option("--gt", cfg.gt, "Ground-truth disparity PFM");
  eval->add_option("--mask", cfg.mask, "Evaluation mask (255 = evaluate)");
  eval->add_option("--left-band", cfg.left_band,
                   "Invalidate this many leftmost columns first");
  add_common_options(eval, cfg, config_path);

  CLI::App* cloud = app.add_subcommand("cloud", "Reproject disparity to a PLY cloud");
  cloud->add_option("--disp", cfg.pred, "Disparity PFM");
  cloud->add_option("--calib", cfg.calib, "Middlebury calib.txt");
  cloud->add_option("--ref", cfg.ref_cloud,
                    "Reference scan PLY; enables point-to-plane errors");
  cloud->add_option("--radius", cfg.cloud_radius,
                    "Neighbour radius for plane fits, meters");
  cloud->add_option("--stride", cfg.cloud_stride, "Pixel subsampling stride");
  cloud->add_option("--error-cap", cfg.error_cap,
                    "Errors at or above this render pure red, meters");
  add_common_options(cloud, cfg, config_path);

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic stereo pair");
  synth->add_option("--kind", cfg.synth_kind, "shift | step | rds")
      ->check(CLI::IsMember({"shift", "step", "rds"}));
  synth->add_option("--width", cfg.synth_width, "Scene width");
  synth->add_option("--height", cfg.synth_height, "Scene height");
  synth->add_option("--disparity", cfg.synth_disparity, "Foreground disparity");
  add_common_options(synth, cfg, config_path);

  CLI::App* batch = app.add_subcommand(
      "batch", "Run the cases listed in a file (one config path per line)");
  batch->add_option("cases", cases_file, "Batch list file")->required();
  add_common_options(batch, cfg, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (sgbm->parsed()) return psgm::cli::cmd_sgbm(cfg);
    if (sgbmp->parsed()) return psgm::cli::cmd_sgbmp(cfg);
    if (prior->parsed()) return psgm::cli::cmd_prior(cfg);
    if (eval->parsed()) return psgm::cli::cmd_eval(cfg);
    if (cloud->parsed()) return psgm::cli::cmd_cloud(cfg);
    if (synth->parsed()) return psgm::cli::cmd_synth(cfg);
    if (batch->parsed()) return psgm::cli::cmd_batch(cfg, cases_file);
  } catch (const psgm::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const psgm::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericError;
  }
  return kOk;
}
