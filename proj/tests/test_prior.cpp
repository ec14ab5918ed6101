#include <doctest.h>

#include <cmath>
#include <random>

#include "psgm/errors.hpp"
#include "psgm/image_io.hpp"
#include "psgm/prior.hpp"
#include "psgm/synth.hpp"
#include "test_util.hpp"

using namespace psgm;

TEST_SUITE_BEGIN("prior");

TEST_CASE("load_prior converts log-variance and floors sigma") {
  test::TempDir tmp("prior");
  FloatMap y(3, 1);
  y.data = {10.f, 20.f, 30.f};
  FloatMap delta(3, 1);
  delta.data = {0.f, static_cast<float>(2.0 * std::log(3.0)), -40.f};
  save_pfm(y, tmp.path("y.pfm"));
  save_pfm(delta, tmp.path("d.pfm"));
  const PriorField prior = load_prior(tmp.path("y.pfm"), tmp.path("d.pfm"), true);
  CHECK(prior.sigma.at(0, 0) == doctest::Approx(1.0));   // exp(0) = 1
  CHECK(prior.sigma.at(1, 0) == doctest::Approx(3.0));   // exp(ln 3)
  CHECK(prior.sigma.at(2, 0) == doctest::Approx(0.25));  // floored at sigma_min

  FloatMap sig(3, 1);
  sig.data = {1e-9f, 0.5f, 2.f};
  save_pfm(sig, tmp.path("s.pfm"));
  const PriorField direct = load_prior(tmp.path("y.pfm"), tmp.path("s.pfm"), false);
  CHECK(direct.sigma.at(0, 0) == doctest::Approx(0.25));
  CHECK(direct.sigma.at(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("load_prior rejects mismatched validity and dimensions") {
  test::TempDir tmp("priore");
  FloatMap y(2, 1);
  y.data = {1.f, FloatMap::kInvalid};
  FloatMap d(2, 1);
  d.data = {0.f, 0.f};
  save_pfm(y, tmp.path("y.pfm"));
  save_pfm(d, tmp.path("d.pfm"));
  CHECK_THROWS_WITH_AS(load_prior(tmp.path("y.pfm"), tmp.path("d.pfm"), true),
                       doctest::Contains("1 pixel"), io_error);

  const FloatMap wide(3, 1, 0.f);
  save_pfm(wide, tmp.path("w.pfm"));
  CHECK_THROWS_AS(load_prior(tmp.path("y.pfm"), tmp.path("w.pfm"), true),
                  io_error);
}

TEST_CASE("compute_ppsr worked examples") {
  MatcherParams p;
  p.min_disparity = 0;
  p.num_disparities = 256;

  PriorField prior;
  prior.y = FloatMap(3, 1);
  prior.sigma = FloatMap(3, 1);
  prior.y.data = {50.f, 5.f, FloatMap::kInvalid};
  prior.sigma.data = {2.f, 3.f, FloatMap::kInvalid};

  const PpsrMap map = compute_ppsr(prior, 3.0, p);
  CHECK(map.lo_at(0, 0) == 44);
  CHECK(map.hi_at(0, 0) == 56);
  CHECK(map.lo_at(1, 0) == 0);  // clamped at the lower bound
  CHECK(map.hi_at(1, 0) == 14);
  CHECK(map.lo_at(2, 0) == 0);  // invalid pixel falls back to the full range
  CHECK(map.hi_at(2, 0) == 255);
}

TEST_CASE("ppsr properties") {
  MatcherParams p;
  p.min_disparity = -8;
  p.num_disparities = 48;
  std::mt19937 rng(21);
  PriorField prior;
  prior.y = test::random_map(17, 11, -20.f, 60.f, rng, 0.1);
  prior.sigma = test::random_map(17, 11, 0.25f, 30.f, rng);
  for (std::size_t i = 0; i < prior.y.data.size(); ++i)
    if (!std::isfinite(prior.y.data[i]))
      prior.sigma.data[i] = FloatMap::kInvalid;

  const PpsrMap a = compute_ppsr(prior, 1.5, p);
  const PpsrMap b = compute_ppsr(prior, 3.0, p);
  for (std::size_t i = 0; i < a.lo.size(); ++i) {
    // well-formed and inside the global range
    CHECK(a.lo[i] <= a.hi[i]);
    CHECK(a.lo[i] >= p.min_disparity);
    CHECK(a.hi[i] <= p.max_disparity());
    // growing lambda_b never shrinks a range
    CHECK(b.lo[i] <= a.lo[i]);
    CHECK(b.hi[i] >= a.hi[i]);
  }

  // sigma at sigma_max with lambda_b * sigma_max >= num_disparities
  // degenerates to the full global range
  const double sigma_max = sigma_max_for(p, 3.0);
  PriorField flat;
  flat.y = FloatMap(17, 11, 10.f);
  flat.sigma = FloatMap(17, 11, static_cast<float>(sigma_max));
  const PpsrMap full = compute_ppsr(flat, 3.0, p);
  for (std::size_t i = 0; i < full.lo.size(); ++i) {
    CHECK(full.lo[i] == p.min_disparity);
    CHECK(full.hi[i] == p.max_disparity());
  }
}

TEST_CASE("rescale_prior scales values with the factor") {
  PriorField prior;
  prior.y = FloatMap(4, 4, 25.f);
  prior.sigma = FloatMap(4, 4, 1.f);
  const PriorField up = rescale_prior(prior, 4);
  CHECK(up.y.width == 16);
  for (float v : up.y.data) CHECK(v == doctest::Approx(100.f));
  for (float v : up.sigma.data) CHECK(v == doctest::Approx(4.f));

  const PriorField same = rescale_prior(prior, 1);
  CHECK(same.y == prior.y);
  CHECK(same.sigma == prior.sigma);
}

TEST_CASE("pyramid prior recovers a constant shift with low uncertainty") {
  const int d = 16, factor = 4;
  const SynthScene scene = make_synthetic_pair(SynthKind::shift, 256, 160, d, 99);
  MatcherParams p;
  p.num_disparities = 32;
  const PriorField prior = pyramid_prior(scene.left, scene.right, p, factor);
  REQUIRE(prior.y.width == 64);
  REQUIRE(prior.y.height == 40);

  const double sigma_max = sigma_max_for(
      [&] {
        MatcherParams sp = p;
        sp.min_disparity = 0;
        sp.num_disparities = 32 / factor + 1;
        return sp;
      }(),
      3.0);

  int interior = 0, good_y = 0, tight_sigma = 0;
  for (int y = 2; y < prior.y.height - 2; ++y)
    for (int x = d / factor + 2; x < prior.y.width - 2; ++x) {
      ++interior;
      REQUIRE(prior.y.valid(x, y));
      REQUIRE(prior.sigma.valid(x, y));
      if (std::abs(prior.y.at(x, y) - static_cast<float>(d) / factor) <= 1.f)
        ++good_y;
      if (prior.sigma.at(x, y) < 0.9 * sigma_max) ++tight_sigma;
    }
  CHECK(good_y >= interior * 95 / 100);
  CHECK(tight_sigma >= interior * 90 / 100);
}

TEST_CASE("pyramid prior on a textureless pair degenerates to full range") {
  const IntensityImage flat_l(64, 48, 100);
  const IntensityImage flat_r(64, 48, 100);
  MatcherParams p;
  p.num_disparities = 16;
  const PriorField prior = pyramid_prior(flat_l, flat_r, p, 2);
  const double sigma_max = sigma_max_for(
      [&] {
        MatcherParams sp = p;
        sp.num_disparities = 16 / 2 + 1;
        return sp;
      }(),
      3.0);
  // every pixel is either conservatively uncertain or invalid; both fall
  // back to the full searching range
  for (int y = 0; y < prior.y.height; ++y)
    for (int x = 0; x < prior.y.width; ++x) {
      if (prior.sigma.valid(x, y))
        CHECK(prior.sigma.at(x, y) == doctest::Approx(sigma_max));
      else
        CHECK_FALSE(prior.y.valid(x, y));
    }
  const PpsrMap ppsr = compute_ppsr(prior, 3.0, p);
  for (std::size_t i = 0; i < ppsr.lo.size(); ++i) {
    CHECK(ppsr.lo[i] == p.min_disparity);
    CHECK(ppsr.hi[i] == p.max_disparity());
  }
}

TEST_CASE("pyramid prior marks the unmatchable left band uncertain") {
  const int d = 24, factor = 4;
  const SynthScene scene = make_synthetic_pair(SynthKind::shift, 320, 120, d, 5);
  MatcherParams p;
  p.num_disparities = 32;
  const PriorField prior = pyramid_prior(scene.left, scene.right, p, factor);
  const double sigma_max = sigma_max_for(
      [&] {
        MatcherParams sp = p;
        sp.num_disparities = 32 / factor + 1;
        return sp;
      }(),
      3.0);
  int band_max = 0, band_total = 0;
  for (int y = 2; y < prior.y.height - 2; ++y)
    for (int x = 0; x < d / factor - 1; ++x) {
      ++band_total;
      if (!prior.sigma.valid(x, y) ||
          prior.sigma.at(x, y) == doctest::Approx(sigma_max))
        ++band_max;
    }
  CHECK(band_max >= band_total * 90 / 100);
}

TEST_CASE("pyramid sigma is anticorrelated with texture") {
  // left half textured, right half flat
  std::mt19937 rng(41);
  IntensityImage left(240, 120, 90);
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 120; ++x)
      left.at(x, y) = static_cast<std::uint8_t>(rng() & 0xff);
  IntensityImage right = left;  // zero disparity everywhere
  MatcherParams p;
  p.num_disparities = 16;
  const PriorField prior = pyramid_prior(left, right, p, 2);
  double flat_sum = 0, tex_sum = 0;
  int flat_n = 0, tex_n = 0;
  for (int y = 4; y < prior.y.height - 4; ++y)
    for (int x = 4; x < prior.y.width - 4; ++x) {
      if (!prior.sigma.valid(x, y)) continue;
      if (x < prior.y.width / 2 - 4) {
        tex_sum += prior.sigma.at(x, y);
        ++tex_n;
      } else if (x > prior.y.width / 2 + 4) {
        flat_sum += prior.sigma.at(x, y);
        ++flat_n;
      }
    }
  REQUIRE(tex_n > 0);
  REQUIRE(flat_n > 0);
  CHECK(flat_sum / flat_n > tex_sum / tex_n);
}

TEST_SUITE_END();
