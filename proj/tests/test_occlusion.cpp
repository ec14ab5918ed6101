#include <doctest.h>

#include <random>

#include "psgm/occlusion.hpp"
#include "test_util.hpp"

using namespace psgm;

TEST_SUITE_BEGIN("occlusion");

TEST_CASE("constant disparity warps injectively: no occlusion") {
  const FloatMap y(20, 4, 6.f);
  const OcclusionMask mask = derive_occlusion(y);
  CHECK(mask.count_set() == 0);
}

TEST_CASE("z-buffer rule: the smaller disparity loses the shared column") {
  FloatMap y(20, 1, 0.f);
  y.at(10, 0) = 2.f;  // maps to column 8
  y.at(11, 0) = 3.f;  // also maps to column 8, larger disparity
  const OcclusionMask mask = derive_occlusion(y);
  CHECK(mask.at(10, 0) == 1);
  CHECK(mask.at(11, 0) == 0);
}

TEST_CASE("invalid disparities are flagged occluded") {
  FloatMap y(5, 2, 1.f);
  y.at(2, 1) = FloatMap::kInvalid;
  const OcclusionMask mask = derive_occlusion(y);
  CHECK(mask.at(2, 1) == 1);
  CHECK(mask.count_set() == 1);
}

TEST_CASE("disparity step flags a band on the far side") {
  // step from 10 to 30 at column 60: the ~20 px left of the step map onto
  // columns the foreground also claims
  const int w = 120;
  FloatMap y(w, 3, 10.f);
  for (int row = 0; row < 3; ++row)
    for (int x = 60; x < w; ++x) y.at(x, row) = 30.f;
  const OcclusionMask mask = derive_occlusion(y);

  // independent warp simulation on the step profile
  std::vector<int> expect(w, 0);
  {
    std::vector<float> best(static_cast<std::size_t>(w) + 64,
                            -FloatMap::kInvalid);
    auto disp = [&](int x) { return x < 60 ? 10.f : 30.f; };
    for (int x = 0; x < w; ++x) {
      const int t = x - static_cast<int>(std::lround(disp(x))) + 32;
      if (t >= 0) best[t] = std::max(best[t], disp(x));
    }
    for (int x = 0; x < w; ++x) {
      const int t = x - static_cast<int>(std::lround(disp(x))) + 32;
      expect[x] = best[t] > disp(x) + 0.5f ? 1 : 0;
    }
  }
  int band = 0;
  for (int x = 0; x < w; ++x) {
    CHECK(mask.at(x, 1) == expect[x]);
    band += mask.at(x, 1);
  }
  CHECK(band == 20);  // pixels 40..59 lose to the foreground
}

TEST_CASE("guided filter pass worked examples") {
  SUBCASE("isolated flag is repaired from its neighbours") {
    FloatMap y(3, 1);
    y.data = {4.f, 10.f, 6.f};
    OcclusionMask m(3, 1);
    m.data = {0, 1, 0};
    guided_filter_pass(y, m, FilterDirection::horizontal);
    CHECK(m.data == std::vector<std::uint8_t>{0, 0, 0});
    CHECK(y.data[0] == 4.f);
    CHECK(y.data[1] == 5.f);
    CHECK(y.data[2] == 6.f);
  }
  SUBCASE("unanimous window stays untouched") {
    FloatMap y(3, 1);
    y.data = {1.f, 2.f, 3.f};
    OcclusionMask m(3, 1, 1);
    guided_filter_pass(y, m, FilterDirection::horizontal);
    CHECK(m.data == std::vector<std::uint8_t>{1, 1, 1});
    CHECK(y.data == std::vector<float>{1.f, 2.f, 3.f});
  }
  SUBCASE("adjacent pair survives: every window median equals its centre") {
    FloatMap y(4, 1);
    y.data = {1.f, 2.f, 3.f, 4.f};
    OcclusionMask m(4, 1);
    m.data = {0, 1, 1, 0};
    guided_filter_pass(y, m, FilterDirection::horizontal);
    CHECK(m.data == std::vector<std::uint8_t>{0, 1, 1, 0});
    CHECK(y.data == std::vector<float>{1.f, 2.f, 3.f, 4.f});
  }
}

TEST_CASE("two-pass guided filter examples") {
  SUBCASE("clean mask is an identity") {
    std::mt19937 rng(3);
    FloatMap y = test::random_map(9, 6, 0.f, 50.f, rng);
    const FloatMap y_orig = y;
    OcclusionMask m(9, 6, 0);
    guided_filter(y, m);
    CHECK(y == y_orig);
    CHECK(m.count_set() == 0);
  }
  SUBCASE("single flagged pixel is removed by the horizontal pass") {
    FloatMap y(7, 5, 2.f);
    OcclusionMask m(7, 5, 0);
    m.at(3, 2) = 1;
    guided_filter(y, m);
    CHECK(m.count_set() == 0);
    for (float v : y.data) CHECK(v == 2.f);
  }
  SUBCASE("flagged column of height 3 is removed after the vertical pass") {
    // the horizontal pass sees [0,1,0] in each of the three rows and clears
    // them one by one; a fully vertical structure needs both passes when
    // widened, so use a 2-wide column to exercise the vertical run
    FloatMap y(7, 7, 1.f);
    OcclusionMask m(7, 7, 0);
    m.at(3, 2) = m.at(3, 3) = m.at(3, 4) = 1;
    OcclusionMask m_h = m;
    FloatMap y_h = y;
    guided_filter_pass(y_h, m_h, FilterDirection::horizontal);
    CHECK(m_h.count_set() == 0);  // horizontal handles the 1-wide case
    guided_filter(y, m);
    CHECK(m.count_set() == 0);
    for (float v : y.data) CHECK(v == 1.f);
  }
}

TEST_CASE("sequential scan differs from the buffered variant as documented") {
  // [1,1,0,...]: in-place, clearing k=1 changes what k=2 sees.
  FloatMap y(5, 1);
  y.data = {10.f, 20.f, 30.f, 40.f, 50.f};
  OcclusionMask m(5, 1);
  m.data = {1, 1, 0, 0, 0};
  FloatMap yb = y;
  OcclusionMask mb = m;
  guided_filter_pass(y, m, FilterDirection::horizontal, false);
  guided_filter_pass(yb, mb, FilterDirection::horizontal, true);
  CHECK(m.data == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
  CHECK(mb.data == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
  CHECK(y.data == yb.data);

  // an alternating pattern shows the divergence
  FloatMap y2(5, 1);
  y2.data = {0.f, 8.f, 0.f, 8.f, 0.f};
  OcclusionMask m2(5, 1);
  m2.data = {1, 0, 1, 0, 1};
  FloatMap y2b = y2;
  OcclusionMask m2b = m2;
  guided_filter_pass(y2, m2, FilterDirection::horizontal, false);
  guided_filter_pass(y2b, m2b, FilterDirection::horizontal, true);
  CHECK(m2.data != m2b.data);
}

TEST_CASE("guided filter property suite on random masks") {
  std::mt19937 rng(77);
  for (int iter = 0; iter < 300; ++iter) {
    const int w = 3 + static_cast<int>(rng() % 14);
    const int h = 3 + static_cast<int>(rng() % 14);
    FloatMap y = test::random_map(w, h, 0.f, 64.f, rng);
    OcclusionMask m(w, h);
    for (auto& v : m.data) v = (rng() % 4 == 0) ? 1 : 0;
    const FloatMap y0 = y;
    const OcclusionMask m0 = m;

    FloatMap yh = y;
    OcclusionMask mh = m;
    guided_filter_pass(yh, mh, FilterDirection::horizontal);

    // unanimous horizontal windows are never modified by the h-pass: even
    // with the sequential scan, two of the three votes (centre and right)
    // still hold the original flag when the centre is visited
    for (int row = 0; row < h; ++row)
      for (int k = 1; k < w - 1; ++k) {
        const bool unanimous = m0.at(k - 1, row) == m0.at(k, row) &&
                               m0.at(k, row) == m0.at(k + 1, row);
        if (unanimous) {
          CHECK(mh.at(k, row) == m0.at(k, row));
          CHECK(yh.at(k, row) == y0.at(k, row));
        }
      }

    guided_filter(y, m);

    // borders never change
    for (int x = 0; x < w; ++x) {
      CHECK(y.at(x, 0) == y0.at(x, 0));
      CHECK(y.at(x, h - 1) == y0.at(x, h - 1));
    }
    for (int row = 0; row < h; ++row) {
      CHECK(y.at(0, row) == y0.at(0, row));
      CHECK(y.at(w - 1, row) == y0.at(w - 1, row));
    }

    // convex combination property: values stay inside the global range
    for (float v : y.data) {
      CHECK(v >= 0.f);
      CHECK(v <= 64.f);
    }
  }
}

TEST_CASE("isolated single-pixel flips vanish after one application") {
  std::mt19937 rng(78);
  for (int iter = 0; iter < 100; ++iter) {
    const int w = 8 + static_cast<int>(rng() % 8);
    const int h = 8 + static_cast<int>(rng() % 8);
    OcclusionMask m(w, h, 0);
    // sprinkle isolated flips on interior pixels, 8-neighbourhood disjoint
    for (int y = 2; y < h - 2; y += 3)
      for (int x = 2; x < w - 2; x += 3)
        if (rng() % 2) m.at(x, y) = 1;
    FloatMap y_map = test::random_map(w, h, 0.f, 10.f, rng);
    guided_filter(y_map, m);
    CHECK(m.count_set() == 0);
  }
}

TEST_CASE("mask exports as 0/255 image") {
  OcclusionMask m(2, 1);
  m.data = {1, 0};
  const IntensityImage img = m.to_image();
  CHECK(img.data == std::vector<std::uint8_t>{255, 0});
}

TEST_SUITE_END();
