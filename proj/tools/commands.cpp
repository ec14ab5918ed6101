#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <vector>

#include "psgm/cloud.hpp"
#include "psgm/errors.hpp"
#include "psgm/image_io.hpp"
#include "psgm/metrics.hpp"
#include "psgm/parallel.hpp"
#include "psgm/prior.hpp"
#include "psgm/sgm.hpp"
#include "psgm/synth.hpp"
#include "psgm/version.hpp"

namespace fs = std::filesystem;

namespace psgm::cli {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_outdir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error(dir + ": cannot create output directory");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path + ": cannot open file");
  out << text;
  if (!out) throw io_error(path + ": short write");
}

void write_manifest(const PipelineConfig& config) {
  std::ostringstream o;
  o << "# psgm " << kVersion << " run manifest; reusable via --config\n";
  for (const std::string* p :
       {&config.left, &config.right, &config.gt, &config.mask, &config.calib,
        &config.prior_y, &config.prior_sigma, &config.ref_cloud, &config.pred}) {
    if (p->empty()) continue;
    char d[32];
    std::snprintf(d, sizeof(d), "%016llx",
                  static_cast<unsigned long long>(file_digest(*p)));
    o << "# input " << *p << " fnv1a64=" << d << "\n";
  }
  o << config.serialize();
  write_text(join(config.out, "manifest.txt"), o.str());
}

std::array<std::uint8_t, 3> jet(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto ch = [](double v) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
  };
  return {ch(1.5 - std::abs(4.0 * t - 3.0)), ch(1.5 - std::abs(4.0 * t - 2.0)),
          ch(1.5 - std::abs(4.0 * t - 1.0))};
}

// Normalised colormap; the range comes from the true disparity when given.
void write_disp_color(const DisparityMap& disp, const FloatMap* gt,
                      int min_disp, const std::string& path) {
  float vmax = -FloatMap::kInvalid;
  const FloatMap& ref = gt ? *gt : disp;
  for (float v : ref.data)
    if (std::isfinite(v)) vmax = std::max(vmax, v);
  const float vmin = static_cast<float>(min_disp);
  if (!(vmax > vmin)) vmax = vmin + 1.f;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(disp.width) *
                                disp.height * 3);
  for (int y = 0; y < disp.height; ++y)
    for (int x = 0; x < disp.width; ++x) {
      const std::size_t i =
          (static_cast<std::size_t>(y) * disp.width + x) * 3;
      if (!disp.valid(x, y)) {
        rgb[i] = rgb[i + 1] = rgb[i + 2] = 0;
        continue;
      }
      const auto c = jet((disp.at(x, y) - vmin) / (vmax - vmin));
      rgb[i] = c[0];
      rgb[i + 1] = c[1];
      rgb[i + 2] = c[2];
    }
  save_png_rgb(rgb, disp.width, disp.height, path);
}

void write_metrics(const PipelineConfig& config, const DisparityMap& disp) {
  if (config.gt.empty()) return;
  FloatMap gt = load_pfm(config.gt);
  IntensityImage mask;
  const IntensityImage* mask_ptr = nullptr;
  if (!config.mask.empty()) {
    mask = load_gray(config.mask);
    mask_ptr = &mask;
  }
  const MetricReport report = disparity_metrics(disp, gt, mask_ptr);
  write_text(join(config.out, "metrics.txt"), report.to_text());
  write_text(join(config.out, "metrics.kv"), report.to_kv() + "\n");
  std::cout << report.to_text();
}

std::string stats_kv(const MatchStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "cost_ms=%.3f aggregate_ms=%.3f weight_ms=%.3f select_ms=%.3f "
                "post_ms=%.3f cost_saturated=%llu aggregate_saturated=%llu "
                "mean_ppsr_width=%.4f packing_ratio=%.6f\n",
                s.cost_ms, s.aggregate_ms, s.weight_ms, s.select_ms, s.post_ms,
                static_cast<unsigned long long>(s.cost_saturated),
                static_cast<unsigned long long>(s.aggregate_saturated),
                s.mean_ppsr_width, s.packing_ratio);
  return buf;
}

PriorField obtain_prior(const PipelineConfig& config,
                        const IntensityImage& left,
                        const IntensityImage& right) {
  if (config.prior_source == "files") {
    if (config.prior_y.empty() || config.prior_sigma.empty())
      throw std::invalid_argument(
          "prior_source=files needs --prior-y and --prior-sigma");
    bool logvar = config.prior_logvar;
    // Sidecar metadata written by `psgm prior` (and expected from external
    // exporters); explicit flags take precedence through the config merge.
    const std::string meta =
        join(fs::path(config.prior_y).parent_path().string(),
             "prior_meta.txt");
    if (fs::exists(meta) && !config.prior_logvar) {
      std::ifstream in(meta);
      std::string line;
      while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
        if (key == "is_log_variance")
          logvar = line.find('1', eq) != std::string::npos;
      }
    }
    return load_prior(config.prior_y, config.prior_sigma, logvar);
  }
  return pyramid_prior(left, right, config.matcher, config.downsample,
                       config.lambda_b);
}

FloatMap ppsr_width_map(const PpsrMap& ppsr) {
  FloatMap widths(ppsr.width, ppsr.height);
  for (std::size_t i = 0; i < widths.data.size(); ++i)
    widths.data[i] = static_cast<float>(ppsr.hi[i] - ppsr.lo[i] + 1);
  return widths;
}

}  // namespace

int cmd_sgbm(PipelineConfig config) {
  config.command = "sgbm";
  config.validate();
  set_num_threads(config.threads);
  ensure_outdir(config.out);
  const IntensityImage left = load_gray(config.left);
  const IntensityImage right = load_gray(config.right);
  const MatchResult result =
      run_sgbm(left, right, config.matcher, config.agg.directions);
  save_pfm(result.disparity, join(config.out, "disp.pfm"));
  FloatMap gt;
  const bool have_gt = !config.gt.empty();
  if (have_gt) gt = load_pfm(config.gt);
  write_disp_color(result.disparity, have_gt ? &gt : nullptr,
                   config.matcher.min_disparity,
                   join(config.out, "disp_color.png"));
  write_text(join(config.out, "run_stats.kv"), stats_kv(result.stats));
  write_manifest(config);
  write_metrics(config, result.disparity);
  std::cout << "sgbm: wrote " << join(config.out, "disp.pfm") << "\n"
            << stats_kv(result.stats);
  return 0;
}

int cmd_sgbmp(PipelineConfig config) {
  config.command = "sgbmp";
  config.validate();
  set_num_threads(config.threads);
  ensure_outdir(config.out);
  const IntensityImage left = load_gray(config.left);
  const IntensityImage right = load_gray(config.right);
  const PriorField prior = obtain_prior(config, left, right);
  const GuidedMatchResult result =
      run_sgbmp(left, right, config.matcher, prior, config.agg, config.lambda_b,
                config.nn_upsample ? Interp::nearest : Interp::bilinear);
  save_pfm(result.disparity, join(config.out, "disp.pfm"));
  save_pfm(result.prior_y, join(config.out, "prior_y.pfm"));
  save_pfm(result.prior_sigma, join(config.out, "prior_sigma.pfm"));
  save_pfm(result.filtered_y, join(config.out, "filtered_y.pfm"));
  save_pfm(ppsr_width_map(result.ppsr), join(config.out, "ppsr_width.pfm"));
  save_pgm(result.occlusion.to_image(), join(config.out, "occlusion.pgm"));
  FloatMap gt;
  const bool have_gt = !config.gt.empty();
  if (have_gt) gt = load_pfm(config.gt);
  write_disp_color(result.disparity, have_gt ? &gt : nullptr,
                   config.matcher.min_disparity,
                   join(config.out, "disp_color.png"));
  write_text(join(config.out, "run_stats.kv"), stats_kv(result.stats));
  write_manifest(config);
  write_metrics(config, result.disparity);
  std::cout << "sgbmp: wrote " << join(config.out, "disp.pfm") << "\n"
            << stats_kv(result.stats);
  return 0;
}

int cmd_prior(PipelineConfig config) {
  config.command = "prior";
  config.validate();
  if (config.downsample < 2)
    throw std::invalid_argument("prior: --downsample must be >= 2");
  set_num_threads(config.threads);
  ensure_outdir(config.out);
  const IntensityImage left = load_gray(config.left);
  const IntensityImage right = load_gray(config.right);
  const PriorField prior = pyramid_prior(left, right, config.matcher,
                                         config.downsample, config.lambda_b);
  save_pfm(prior.y, join(config.out, "prior_y.pfm"));
  save_pfm(prior.sigma, join(config.out, "prior_sigma.pfm"));
  std::ostringstream meta;
  meta << "# metadata for the prior maps in this directory\n"
       << "factor = " << config.downsample << "\n"
       << "is_log_variance = 0\n";
  write_text(join(config.out, "prior_meta.txt"), meta.str());
  write_manifest(config);
  std::cout << "prior: wrote " << join(config.out, "prior_y.pfm") << " and "
            << join(config.out, "prior_sigma.pfm") << "\n";
  return 0;
}

int cmd_eval(PipelineConfig config) {
  config.command = "eval";
  set_num_threads(config.threads);
  ensure_outdir(config.out);
  if (config.pred.empty() || config.gt.empty())
    throw std::invalid_argument("eval needs --pred and --gt");
  FloatMap pred = load_pfm(config.pred);
  const FloatMap gt = load_pfm(config.gt);
  if (config.left_band > 0) apply_left_band_mask(pred, config.left_band);
  IntensityImage mask;
  const IntensityImage* mask_ptr = nullptr;
  if (!config.mask.empty()) {
    mask = load_gray(config.mask);
    mask_ptr = &mask;
  }
  const MetricReport report = disparity_metrics(pred, gt, mask_ptr);
  write_text(join(config.out, "metrics.txt"), report.to_text());
  write_text(join(config.out, "metrics.kv"), report.to_kv() + "\n");
  write_manifest(config);
  std::cout << report.to_text();
  return 0;
}

int cmd_cloud(PipelineConfig config) {
  config.command = "cloud";
  set_num_threads(config.threads);
  ensure_outdir(config.out);
  if (config.pred.empty() || config.calib.empty())
    throw std::invalid_argument("cloud needs --disp and --calib");
  const DisparityMap disp = load_pfm(config.pred);
  const Calibration calib = load_middlebury_calib(config.calib);
  PointCloud cloud = disparity_to_cloud(disp, calib, config.cloud_stride);
  if (!config.ref_cloud.empty()) {
    const PointCloud ref = read_ply(config.ref_cloud);
    const PlaneErrorReport report =
        point_to_plane_error(cloud, ref, config.cloud_radius);
    cloud.scalar.assign(report.errors.begin(), report.errors.end());
    // Unevaluated points render at the cap colour rather than vanishing.
    for (float& e : cloud.scalar)
      if (!std::isfinite(e)) e = static_cast<float>(config.error_cap);
    write_ply(cloud, join(config.out, "cloud.ply"), true, config.error_cap);
    write_text(join(config.out, "plane_report.txt"), report.to_text());
    std::cout << report.to_text();
  } else {
    write_ply(cloud, join(config.out, "cloud.ply"));
  }
  write_manifest(config);
  std::cout << "cloud: wrote " << join(config.out, "cloud.ply") << " ("
            << cloud.size() << " points)\n";
  return 0;
}

int cmd_synth(PipelineConfig config) {
  config.command = "synth";
  ensure_outdir(config.out);
  const SynthScene scene = make_synthetic_pair(
      synth_kind_from_string(config.synth_kind), config.synth_width,
      config.synth_height, config.synth_disparity, config.seed);
  save_pgm(scene.left, join(config.out, "left.pgm"));
  save_pgm(scene.right, join(config.out, "right.pgm"));
  save_pfm(scene.gt, join(config.out, "gt.pfm"));
  // A plausible rig so the cloud command runs directly on these scenes.
  std::ostringstream calib;
  calib << "cam0=[1000 0 " << config.synth_width / 2 << "; 0 1000 "
        << config.synth_height / 2 << "; 0 0 1]\n"
        << "cam1=[1000 0 " << config.synth_width / 2 << "; 0 1000 "
        << config.synth_height / 2 << "; 0 0 1]\n"
        << "doffs=0\nbaseline=200\nwidth=" << config.synth_width
        << "\nheight=" << config.synth_height << "\nndisp="
        << config.matcher.num_disparities << "\n";
  write_text(join(config.out, "calib.txt"), calib.str());
  write_manifest(config);
  std::cout << "synth: wrote " << config.synth_kind << " pair to "
            << config.out << "\n";
  return 0;
}

int dispatch(const PipelineConfig& config) {
  if (config.command == "sgbm") return cmd_sgbm(config);
  if (config.command == "sgbmp") return cmd_sgbmp(config);
  if (config.command == "prior") return cmd_prior(config);
  if (config.command == "eval") return cmd_eval(config);
  if (config.command == "cloud") return cmd_cloud(config);
  if (config.command == "synth") return cmd_synth(config);
  throw std::invalid_argument("unknown command '" + config.command +
                              "' (batch cases need a 'command = ...' line)");
}

int cmd_batch(PipelineConfig config, const std::string& cases_file) {
  set_num_threads(config.threads);
  ensure_outdir(config.out);
  std::ifstream in(cases_file);
  if (!in) throw io_error(cases_file + ": cannot open batch file");
  std::vector<std::string> cases;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    cases.push_back(line.substr(b, e - b + 1));
  }
  if (cases.empty()) throw std::invalid_argument(cases_file + ": no cases");

  std::vector<std::future<int>> results;
  results.reserve(cases.size());
  for (const std::string& path : cases) {
    results.push_back(std::async(std::launch::async, [&config, path]() {
      PipelineConfig case_config = config;
      case_config.command = "sgbm";
      load_config_file(path, case_config);
      case_config.out = join(config.out, fs::path(path).stem().string());
      return dispatch(case_config);
    }));
  }
  int rc = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    try {
      rc = std::max(rc, results[i].get());
    } catch (const std::exception& e) {
      std::cerr << "batch case " << cases[i] << " failed: " << e.what() << "\n";
      rc = 4;
    }
  }
  return rc;
}

}  // namespace psgm::cli
