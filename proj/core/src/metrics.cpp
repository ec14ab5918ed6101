#include "psgm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "psgm/errors.hpp"
#include "psgm/parallel.hpp"

namespace psgm {

namespace {

std::string format_kv(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

}  // namespace

std::string MetricReport::to_text() const {
  return format_kv(
      "disparity metrics (all gt-valid pixels; std_err is population stddev)\n"
      "  bad1.0  : %8.4f %%\n"
      "  invalid : %8.4f %%\n"
      "  avgErr  : %8.4f px\n"
      "  stdErr  : %8.4f px\n"
      "  pixels  : evaluable=%llu valid=%llu invalid=%llu bad=%llu\n",
      bad1_0, invalid, avg_err, std_err,
      static_cast<unsigned long long>(evaluable),
      static_cast<unsigned long long>(valid_pred),
      static_cast<unsigned long long>(invalid_pred),
      static_cast<unsigned long long>(bad_count));
}

std::string MetricReport::to_kv() const {
  return format_kv(
      "bad1_0=%.9g invalid=%.9g avg_err=%.9g std_err=%.9g evaluable=%llu "
      "valid_pred=%llu invalid_pred=%llu bad_count=%llu",
      bad1_0, invalid, avg_err, std_err,
      static_cast<unsigned long long>(evaluable),
      static_cast<unsigned long long>(valid_pred),
      static_cast<unsigned long long>(invalid_pred),
      static_cast<unsigned long long>(bad_count));
}

MetricReport disparity_metrics(const DisparityMap& pred, const FloatMap& gt,
                               const IntensityImage* mask) {
  if (!pred.same_size(gt))
    throw std::invalid_argument("disparity_metrics: size mismatch");
  if (mask && (mask->width != gt.width || mask->height != gt.height))
    throw std::invalid_argument("disparity_metrics: mask size mismatch");

  struct Partial {
    std::uint64_t evaluable = 0, valid = 0, bad = 0;
    double abs_sum = 0, sq_sum = 0;
  };
  const int tiles = std::max(1, num_threads());
  std::vector<Partial> partials(static_cast<std::size_t>(tiles));
  const std::int64_t rows = gt.height;
  const std::int64_t rows_per_tile = (rows + tiles - 1) / tiles;

  parallel_chunks(tiles, [&](std::int64_t t0, std::int64_t t1) {
    for (std::int64_t t = t0; t < t1; ++t) {
      Partial& p = partials[static_cast<std::size_t>(t)];
      const std::int64_t y0 = t * rows_per_tile;
      const std::int64_t y1 = std::min(rows, y0 + rows_per_tile);
      for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
        for (int x = 0; x < gt.width; ++x) {
          if (!gt.valid(x, y)) continue;
          if (mask && mask->at(x, y) != 255) continue;
          ++p.evaluable;
          if (!pred.valid(x, y)) continue;
          ++p.valid;
          const double err = std::abs(static_cast<double>(pred.at(x, y)) -
                                      static_cast<double>(gt.at(x, y)));
          if (err > 1.0) ++p.bad;
          p.abs_sum += err;
          p.sq_sum += err * err;
        }
      }
    }
  });

  // Fixed-order combination keeps float results worker-count independent.
  Partial total;
  for (const Partial& p : partials) {
    total.evaluable += p.evaluable;
    total.valid += p.valid;
    total.bad += p.bad;
    total.abs_sum += p.abs_sum;
    total.sq_sum += p.sq_sum;
  }
  if (total.evaluable == 0)
    throw numeric_error("disparity_metrics: no evaluable pixels");

  MetricReport report;
  report.evaluable = total.evaluable;
  report.valid_pred = total.valid;
  report.invalid_pred = total.evaluable - total.valid;
  report.bad_count = total.bad;
  report.invalid =
      100.0 * static_cast<double>(report.invalid_pred) / total.evaluable;
  report.bad1_0 = 100.0 * static_cast<double>(total.bad) / total.evaluable;
  if (total.valid > 0) {
    report.avg_err = total.abs_sum / static_cast<double>(total.valid);
    const double var =
        total.sq_sum / static_cast<double>(total.valid) -
        report.avg_err * report.avg_err;
    report.std_err = std::sqrt(std::max(0.0, var));
  }
  return report;
}

void apply_left_band_mask(FloatMap& map, int band) {
  const int limit = std::min(band, map.width);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < limit; ++x)
      map.at(x, y) = FloatMap::kInvalid;
}

HeteroscedasticLoss heteroscedastic_loss(const FloatMap& pred,
                                         const FloatMap& delta,
                                         const FloatMap& gt) {
  if (!pred.same_size(delta) || !pred.same_size(gt))
    throw std::invalid_argument("heteroscedastic_loss: size mismatch");

  HeteroscedasticLoss out;
  out.per_pixel = FloatMap::invalid_map(gt.width, gt.height);
  double data = 0, reg = 0;
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    if (!std::isfinite(gt.data[i]) || !std::isfinite(pred.data[i]) ||
        !std::isfinite(delta.data[i]))
      continue;
    const double e = static_cast<double>(gt.data[i]) - pred.data[i];
    const double ep = e * e;
    const double d = delta.data[i];
    data += ep * std::exp(-d);
    reg += d;
    out.per_pixel.data[i] = static_cast<float>(0.5 * (ep * std::exp(-d) + d));
    ++n;
  }
  if (n == 0)
    throw numeric_error("heteroscedastic_loss: no valid ground-truth pixels");
  out.count = n;
  out.data_term = data / (2.0 * static_cast<double>(n));
  out.reg_term = reg / (2.0 * static_cast<double>(n));
  out.loss = out.data_term + out.reg_term;
  return out;
}

double heteroscedastic_loss_ddelta(double pred, double delta, double gt,
                                   std::uint64_t n) {
  const double e = gt - pred;
  return (1.0 - e * e * std::exp(-delta)) / (2.0 * static_cast<double>(n));
}

}  // namespace psgm
