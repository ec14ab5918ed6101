#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "psgm/cost.hpp"
#include "test_util.hpp"

using namespace psgm;

TEST_SUITE_BEGIN("cost");

TEST_CASE("matcher params invariants") {
  MatcherParams p;
  CHECK_NOTHROW(p.validate());
  p.block_size = 6;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.block_size = 7;
  p.p1 = 4000;
  p.p2 = 1000;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.p1 = 1000;
  p.p2 = 4000;
  p.cost_scale_divisor = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("xsobel prefilter") {
  SUBCASE("constant image maps to cap everywhere") {
    const IntensityImage img(9, 7, 123);
    const IntensityImage out = xsobel_prefilter(img, 31);
    for (auto v : out.data) CHECK(v == 31);
  }
  SUBCASE("step edge saturates to 0 and 2*cap") {
    // columns: 0 0 0 200 200 200 -> rising edge of magnitude >= cap
    IntensityImage img(6, 5, 0);
    for (int y = 0; y < 5; ++y)
      for (int x = 3; x < 6; ++x) img.at(x, y) = 200;
    const int cap = 31;
    const IntensityImage out = xsobel_prefilter(img, cap);
    const IntensityImage ref = oracle::sobel_reference(img, cap);
    CHECK(out == ref);
    CHECK(out.at(2, 2) == 2 * cap);  // gradient +800 clamps high
    CHECK(out.at(3, 2) == 2 * cap);
    // falling edge mirrors to 0
    IntensityImage rev(6, 5, 200);
    for (int y = 0; y < 5; ++y)
      for (int x = 3; x < 6; ++x) rev.at(x, y) = 0;
    const IntensityImage out_rev = xsobel_prefilter(rev, cap);
    CHECK(out_rev.at(2, 2) == 0);
    CHECK(out_rev.at(3, 2) == 0);
  }
  SUBCASE("cap 31 bounds outputs to [0, 62]") {
    std::mt19937 rng(2);
    const IntensityImage img = test::random_image(16, 16, rng);
    const IntensityImage out = xsobel_prefilter(img, 31);
    for (auto v : out.data) CHECK(v <= 62);
    CHECK(out == oracle::sobel_reference(img, 31));
  }
}

TEST_CASE("birchfield-tomasi pixel cost") {
  SUBCASE("identical constant rows cost 0") {
    const std::vector<std::uint8_t> row(10, 80);
    for (int d = 0; d < 4; ++d)
      CHECK(bt_pixel_cost(row, row, 5, d, 255) == 0);
  }
  SUBCASE("linear ramp through the probe value is sampling-insensitive") {
    const std::vector<std::uint8_t> left = {100, 100, 100, 100, 100};
    const std::vector<std::uint8_t> right = {80, 90, 100, 110, 120};
    CHECK(bt_pixel_cost(left, right, 3, 1, 255) == 0);
  }
  SUBCASE("flat zero neighbourhood costs the full difference") {
    const std::vector<std::uint8_t> left(5, 100);
    const std::vector<std::uint8_t> right(5, 0);
    CHECK(bt_pixel_cost(left, right, 2, 0, 255) == 100);
  }
  SUBCASE("out-of-range lookup returns the no-evidence value") {
    const std::vector<std::uint8_t> row(5, 10);
    CHECK(bt_pixel_cost(row, row, 1, 3, 62) == 62);
  }
  SUBCASE("matches the real-valued reference on random rows") {
    std::mt19937 rng(9);
    for (int iter = 0; iter < 200; ++iter) {
      std::vector<std::uint8_t> l(12), r(12);
      for (auto& v : l) v = static_cast<std::uint8_t>(rng() & 0xff);
      for (auto& v : r) v = static_cast<std::uint8_t>(rng() & 0xff);
      const int x = static_cast<int>(rng() % 12);
      const int d = static_cast<int>(rng() % 6) - 2;
      CHECK(bt_pixel_cost(l, r, x, d, 255) == oracle::bt_reference(l, r, x, d, 255));
    }
  }
  SUBCASE("line evaluation agrees with the scalar op") {
    std::mt19937 rng(31);
    std::vector<std::uint8_t> l(20), r(20);
    for (auto& v : l) v = static_cast<std::uint8_t>(rng() & 0xff);
    for (auto& v : r) v = static_cast<std::uint8_t>(rng() & 0xff);
    std::vector<std::uint16_t> line(20);
    for (int d = -3; d <= 6; ++d) {
      bt_cost_line(l.data(), r.data(), 20, d, 77, line.data());
      for (int x = 0; x < 20; ++x)
        CHECK(line[x] == bt_pixel_cost(l, r, x, d, 77));
    }
  }
}

namespace {

MatcherParams small_params(int num_disp, int block = 3) {
  MatcherParams p;
  p.num_disparities = num_disp;
  p.block_size = block;
  p.p1 = 10;
  p.p2 = 40;
  return p;
}

}  // namespace

TEST_CASE("cost volume on an exact shift is zero at the true disparity") {
  std::mt19937 rng(4);
  const int k = 5;
  IntensityImage src = test::random_image(40 + k, 20, rng);
  IntensityImage left(40, 20), right(40, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 40; ++x) {
      left.at(x, y) = src.at(x, y);
      right.at(x, y) = src.at(x + k, y);
    }
  MatcherParams p = small_params(16, 3);
  const PpsrMap full = PpsrMap::full_range(40, 20, p);
  const RaggedCostVolume vol = build_cost_volume(left, right, full, p);
  for (int y = 2; y < 18; ++y)
    for (int x = 16 + 2; x < 38; ++x)
      CHECK(vol.cost(vol.cell(x, y), k) == 0);
}

TEST_CASE("cost divisor applies rounded division to the block sum") {
  MatcherParams p = small_params(2, 3);
  p.cost_scale_divisor = 3;
  std::mt19937 rng(6);
  const IntensityImage left = test::random_image(12, 8, rng);
  const IntensityImage right = test::random_image(12, 8, rng);
  const PpsrMap full = PpsrMap::full_range(12, 8, p);
  const RaggedCostVolume scaled = build_cost_volume(left, right, full, p);
  MatcherParams p1 = p;
  p1.cost_scale_divisor = 1;
  const RaggedCostVolume raw = build_cost_volume(left, right, full, p1);
  REQUIRE(scaled.costs.size() == raw.costs.size());
  for (std::size_t i = 0; i < raw.costs.size(); ++i)
    CHECK(scaled.costs[i] == (raw.costs[i] + 1) / 3);
  // a raw block sum of 900 is stored as 300
  CHECK((900u + 1) / 3 == 300u);
}

TEST_CASE("cost volume equals the naive triple-loop oracle") {
  std::mt19937 rng(8);
  for (int iter = 0; iter < 8; ++iter) {
    const int w = 5 + static_cast<int>(rng() % 12);
    const int h = 5 + static_cast<int>(rng() % 12);
    const int nd = 2 + static_cast<int>(rng() % 15);
    MatcherParams p = small_params(nd, (rng() % 2) ? 3 : 5);
    p.add_raw_bt = (iter % 3 == 0);
    p.cost_scale_divisor = (iter % 2 == 0) ? 1 : 3;
    const IntensityImage left = test::random_image(w, h, rng);
    const IntensityImage right = test::random_image(w, h, rng);
    const PpsrMap full = PpsrMap::full_range(w, h, p);
    const RaggedCostVolume got = build_cost_volume(left, right, full, p);
    const RaggedCostVolume want = oracle::cost_volume_reference(left, right, full, p);
    REQUIRE(got.costs.size() == want.costs.size());
    CHECK(got.costs == want.costs);
  }
}

TEST_CASE("ragged volume agrees with the full volume on its ranges") {
  std::mt19937 rng(12);
  const int w = 14, h = 10;
  MatcherParams p = small_params(10, 3);
  const IntensityImage left = test::random_image(w, h, rng);
  const IntensityImage right = test::random_image(w, h, rng);
  PpsrMap ragged(w, h);
  for (std::size_t i = 0; i < ragged.lo.size(); ++i) {
    const int lo = static_cast<int>(rng() % 10);
    const int hi = lo + static_cast<int>(rng() % (10 - lo));
    ragged.lo[i] = lo;
    ragged.hi[i] = hi;
  }
  const RaggedCostVolume sparse = build_cost_volume(left, right, ragged, p);
  const RaggedCostVolume full =
      build_cost_volume(left, right, PpsrMap::full_range(w, h, p), p);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto& c = sparse.cell(x, y);
      for (int i = 0; i < c.len; ++i)
        CHECK(sparse.costs[c.offset + i] == full.cost(full.cell(x, y), c.lo + i));
    }
  CHECK(sparse.packing_ratio(p.num_disparities) <= 1.0);
  CHECK(sparse.mean_range_width() ==
        doctest::Approx(ragged.mean_width()));
}

TEST_CASE("costs respect the analytic bound") {
  std::mt19937 rng(13);
  MatcherParams p = small_params(8, 5);
  const IntensityImage left = test::random_image(20, 12, rng);
  const IntensityImage right = test::random_image(20, 12, rng);
  const RaggedCostVolume vol = build_cost_volume(
      left, right, PpsrMap::full_range(20, 12, p), p);
  const int bound =
      p.block_size * p.block_size * 2 * p.prefilter_cap / p.cost_scale_divisor;
  for (auto c : vol.costs) CHECK(c <= bound);
  CHECK(vol.saturated == 0);
}

TEST_CASE("volume dump round trips") {
  test::TempDir tmp("vol");
  std::mt19937 rng(14);
  MatcherParams p = small_params(6, 3);
  const IntensityImage left = test::random_image(9, 7, rng);
  const IntensityImage right = test::random_image(9, 7, rng);
  const RaggedCostVolume vol =
      build_cost_volume(left, right, PpsrMap::full_range(9, 7, p), p);
  dump_volume(vol, tmp.path("v.bin"));
  const RaggedCostVolume back = load_volume(tmp.path("v.bin"));
  CHECK(back.width == vol.width);
  CHECK(back.height == vol.height);
  CHECK(back.costs == vol.costs);
}

TEST_SUITE_END();
