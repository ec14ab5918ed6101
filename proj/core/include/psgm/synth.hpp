#pragma once

#include <cstdint>
#include <string>

#include "psgm/image.hpp"

namespace psgm {

/// Test-scene generators.
///  - shift: random-dot pair at one constant disparity.
///  - rds:   random-dot stereogram, centre rectangle at `disparity` over a
///           background at disparity/2, with the resulting occlusion band.
///  - step:  same geometry as rds with smoothed (photograph-like) texture.
enum class SynthKind { shift, step, rds };

SynthKind synth_kind_from_string(const std::string& s);
const char* to_string(SynthKind kind);

struct SynthScene {
  IntensityImage left;
  IntensityImage right;
  FloatMap gt;  // left-referenced; pixels without a right-image partner are
                // invalid, occluded pixels keep their true disparity
};

/// Deterministic for a fixed seed.
SynthScene make_synthetic_pair(SynthKind kind, int width, int height,
                               int disparity, std::uint32_t seed);

}  // namespace psgm
