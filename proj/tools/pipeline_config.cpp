#include "pipeline_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "psgm/errors.hpp"

namespace psgm::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

int parse_int(const std::string& v) {
  std::size_t pos = 0;
  const int r = std::stoi(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return r;
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  const double r = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return r;
}

}  // namespace

void PipelineConfig::apply(const std::string& raw_key, const std::string& value) {
  std::string key = raw_key;
  for (char& c : key)
    if (c == '-') c = '_';

  if (key == "min_disp" || key == "min_disparity") matcher.min_disparity = parse_int(value);
  else if (key == "num_disp" || key == "num_disparities") matcher.num_disparities = parse_int(value);
  else if (key == "block_size") matcher.block_size = parse_int(value);
  else if (key == "p1") matcher.p1 = parse_int(value);
  else if (key == "p2") matcher.p2 = parse_int(value);
  else if (key == "prefilter_cap") matcher.prefilter_cap = parse_int(value);
  else if (key == "uniqueness_ratio") matcher.uniqueness_ratio = parse_int(value);
  else if (key == "disp12_max_diff") matcher.disp12_max_diff = parse_int(value);
  else if (key == "speckle_window") matcher.speckle_window = parse_int(value);
  else if (key == "speckle_range") matcher.speckle_range = parse_int(value);
  else if (key == "cost_scale_divisor") matcher.cost_scale_divisor = parse_int(value);
  else if (key == "add_raw_bt") matcher.add_raw_bt = parse_bool(value);
  else if (key == "directions") agg.directions = parse_int(value);
  else if (key == "weight_mode") agg.weight_mode = weight_mode_from_string(value);
  else if (key == "lambda_s") agg.lambda_s = parse_double(value);
  else if (key == "lambda_d") agg.lambda_d = parse_double(value);
  else if (key == "lambda_b") lambda_b = parse_double(value);
  else if (key == "downsample") downsample = parse_int(value);
  else if (key == "prior_source" || key == "prior") prior_source = value;
  else if (key == "prior_logvar") prior_logvar = parse_bool(value);
  else if (key == "nn_upsample") nn_upsample = parse_bool(value);
  else if (key == "left") left = value;
  else if (key == "right") right = value;
  else if (key == "gt") gt = value;
  else if (key == "mask") mask = value;
  else if (key == "calib") calib = value;
  else if (key == "prior_y") prior_y = value;
  else if (key == "prior_sigma") prior_sigma = value;
  else if (key == "ref_cloud") ref_cloud = value;
  else if (key == "pred" || key == "disp_input") pred = value;
  else if (key == "out") out = value;
  else if (key == "threads") threads = parse_int(value);
  else if (key == "seed") seed = static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "kind" || key == "synth_kind") synth_kind = value;
  else if (key == "synth_width" || key == "width") synth_width = parse_int(value);
  else if (key == "synth_height" || key == "height") synth_height = parse_int(value);
  else if (key == "disparity" || key == "synth_disparity") synth_disparity = parse_int(value);
  else if (key == "left_band") left_band = parse_int(value);
  else if (key == "stride" || key == "cloud_stride") cloud_stride = parse_int(value);
  else if (key == "radius" || key == "cloud_radius") cloud_radius = parse_double(value);
  else if (key == "error_cap") error_cap = parse_double(value);
  else if (key == "command") command = value;
  else throw std::invalid_argument("unknown config key '" + raw_key + "'");
}

std::string PipelineConfig::serialize() const {
  std::ostringstream o;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  if (!command.empty()) o << "command = " << command << "\n";
  o << "min_disp = " << matcher.min_disparity << "\n";
  o << "num_disp = " << matcher.num_disparities << "\n";
  o << "block_size = " << matcher.block_size << "\n";
  o << "p1 = " << matcher.p1 << "\n";
  o << "p2 = " << matcher.p2 << "\n";
  o << "prefilter_cap = " << matcher.prefilter_cap << "\n";
  o << "uniqueness_ratio = " << matcher.uniqueness_ratio << "\n";
  o << "disp12_max_diff = " << matcher.disp12_max_diff << "\n";
  o << "speckle_window = " << matcher.speckle_window << "\n";
  o << "speckle_range = " << matcher.speckle_range << "\n";
  o << "cost_scale_divisor = " << matcher.cost_scale_divisor << "\n";
  o << "add_raw_bt = " << (matcher.add_raw_bt ? 1 : 0) << "\n";
  o << "directions = " << agg.directions << "\n";
  o << "weight_mode = " << to_string(agg.weight_mode) << "\n";
  o << "lambda_s = " << num(agg.lambda_s) << "\n";
  o << "lambda_d = " << num(agg.lambda_d) << "\n";
  o << "lambda_b = " << num(lambda_b) << "\n";
  o << "downsample = " << downsample << "\n";
  o << "prior_source = " << prior_source << "\n";
  o << "prior_logvar = " << (prior_logvar ? 1 : 0) << "\n";
  o << "nn_upsample = " << (nn_upsample ? 1 : 0) << "\n";
  if (!left.empty()) o << "left = " << left << "\n";
  if (!right.empty()) o << "right = " << right << "\n";
  if (!gt.empty()) o << "gt = " << gt << "\n";
  if (!mask.empty()) o << "mask = " << mask << "\n";
  if (!calib.empty()) o << "calib = " << calib << "\n";
  if (!prior_y.empty()) o << "prior_y = " << prior_y << "\n";
  if (!prior_sigma.empty()) o << "prior_sigma = " << prior_sigma << "\n";
  if (!ref_cloud.empty()) o << "ref_cloud = " << ref_cloud << "\n";
  if (!pred.empty()) o << "pred = " << pred << "\n";
  o << "threads = " << threads << "\n";
  o << "seed = " << seed << "\n";
  o << "synth_kind = " << synth_kind << "\n";
  o << "synth_width = " << synth_width << "\n";
  o << "synth_height = " << synth_height << "\n";
  o << "synth_disparity = " << synth_disparity << "\n";
  o << "left_band = " << left_band << "\n";
  o << "cloud_stride = " << cloud_stride << "\n";
  o << "cloud_radius = " << num(cloud_radius) << "\n";
  o << "error_cap = " << num(error_cap) << "\n";
  return o.str();
}

void PipelineConfig::validate() const {
  matcher.validate();
  agg.validate();
  if (lambda_b <= 0) throw std::invalid_argument("lambda_b must be > 0");
  if (downsample < 1) throw std::invalid_argument("downsample must be >= 1");
  if (prior_source != "pyramid" && prior_source != "files")
    throw std::invalid_argument("prior_source must be 'pyramid' or 'files'");
}

void load_config_file(const std::string& path, PipelineConfig& config) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open config file");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    try {
      config.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open file");
  std::uint64_t hash = 1469598103934665603ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
    if (!in) break;
  }
  return hash;
}

}  // namespace psgm::cli
