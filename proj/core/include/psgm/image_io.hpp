#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psgm/image.hpp"

namespace psgm {

/// Loads an 8-bit grayscale image. Accepts binary PGM (P5), binary PPM (P6)
/// and 8-bit gray/RGB PNG; colour inputs are converted with Rec.601 luma.
/// Throws io_error naming the path on unreadable or unsupported files.
IntensityImage load_gray(const std::string& path);

/// Binary PGM, maxval 255.
void save_pgm(const IntensityImage& img, const std::string& path);

/// Middlebury PFM, single channel ("Pf"). Rows are stored bottom-to-top and
/// a negative scale marks little-endian data. inf entries become the invalid
/// marker; NaN entries do too and are counted into *nan_count when given.
FloatMap load_pfm(const std::string& path, std::size_t* nan_count = nullptr);

/// Writes in host byte order with the matching scale sign. Invalid pixels are
/// stored as inf, never as a finite stand-in, so save/load round-trips are
/// bit-exact.
void save_pfm(const FloatMap& map, const std::string& path);

/// 8-bit RGB PNG writer for visualisations (interleaved rgb, 3 bytes/px).
void save_png_rgb(const std::vector<std::uint8_t>& rgb, int width, int height,
                  const std::string& path);

void save_png_gray(const IntensityImage& img, const std::string& path);

}  // namespace psgm
