#include "psgm/image_io.hpp"

#include <png.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>

#include "psgm/errors.hpp"

namespace psgm {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw io_error(path + ": cannot open file");
  return f;
}

std::uint8_t luma601(int r, int g, int b) {
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
std::string pnm_token(std::FILE* f, const std::string& path) {
  std::string tok;
  int c;
  while ((c = std::fgetc(f)) != EOF) {
    if (c == '#') {
      while ((c = std::fgetc(f)) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw io_error(path + ": unexpected end of file");
  return tok;
}

long pnm_int(std::FILE* f, const std::string& path) {
  const std::string tok = pnm_token(f, path);
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0')
    throw io_error(path + ": malformed header token '" + tok + "'");
  return v;
}

IntensityImage load_pnm(std::FILE* f, const std::string& path, bool color) {
  const long w = pnm_int(f, path);
  const long h = pnm_int(f, path);
  const long maxval = pnm_int(f, path);
  if (w < 1 || h < 1) throw io_error(path + ": bad image dimensions");
  if (maxval <= 0 || maxval > 255)
    throw io_error(path + ": unsupported bit depth (maxval " +
                   std::to_string(maxval) + ")");
  IntensityImage img(static_cast<int>(w), static_cast<int>(h));
  if (!color) {
    if (std::fread(img.data.data(), 1, img.data.size(), f) != img.data.size())
      throw io_error(path + ": unexpected end of file");
  } else {
    std::vector<std::uint8_t> rgb(img.data.size() * 3);
    if (std::fread(rgb.data(), 1, rgb.size(), f) != rgb.size())
      throw io_error(path + ": unexpected end of file");
    for (std::size_t i = 0; i < img.data.size(); ++i)
      img.data[i] = luma601(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  }
  return img;
}

IntensityImage load_png(std::FILE* f, const std::string& path) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error(path + ": libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw io_error(path + ": libpng init failed");
  }
  std::vector<std::uint8_t> interleaved;
  int width = 0, height = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error(path + ": corrupt or truncated PNG");
  }
  png_init_io(png, f);
  png_set_sig_bytes(png, 2);  // magic already consumed by the dispatcher
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error(path + ": unsupported PNG channel layout");
  }
  interleaved.resize(static_cast<std::size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = interleaved.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  IntensityImage img(width, height);
  if (channels == 1) {
    std::copy(interleaved.begin(), interleaved.end(), img.data.begin());
  } else {
    for (std::size_t i = 0; i < img.data.size(); ++i)
      img.data[i] = luma601(interleaved[3 * i], interleaved[3 * i + 1],
                            interleaved[3 * i + 2]);
  }
  return img;
}

void write_png(const std::uint8_t* pixels, int width, int height, int channels,
               const std::string& path) {
  FilePtr f = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error(path + ": libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw io_error(path + ": libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error(path + ": PNG write failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(pixels) +
              static_cast<std::size_t>(y) * width * channels;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void byteswap_floats(std::vector<float>& v) {
  for (float& f : v) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    u = ((u & 0x000000ffu) << 24) | ((u & 0x0000ff00u) << 8) |
        ((u & 0x00ff0000u) >> 8) | ((u & 0xff000000u) >> 24);
    std::memcpy(&f, &u, 4);
  }
}

}  // namespace

IntensityImage load_gray(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  int m0 = std::fgetc(f.get());
  int m1 = std::fgetc(f.get());
  if (m0 == EOF || m1 == EOF) throw io_error(path + ": unexpected end of file");
  if (m0 == 'P' && m1 == '5') return load_pnm(f.get(), path, false);
  if (m0 == 'P' && m1 == '6') return load_pnm(f.get(), path, true);
  if (m0 == 0x89 && m1 == 'P') return load_png(f.get(), path);
  throw io_error(path + ": unsupported image format (expected PGM/PPM/PNG)");
}

void save_pgm(const IntensityImage& img, const std::string& path) {
  FilePtr f = open_file(path, "wb");
  std::fprintf(f.get(), "P5\n%d %d\n255\n", img.width, img.height);
  if (std::fwrite(img.data.data(), 1, img.data.size(), f.get()) !=
      img.data.size())
    throw io_error(path + ": short write");
}

FloatMap load_pfm(const std::string& path, std::size_t* nan_count) {
  FilePtr f = open_file(path, "rb");
  const std::string magic = pnm_token(f.get(), path);
  if (magic == "PF")
    throw io_error(path + ": 3-channel PFM ('PF') is unsupported, expected 'Pf'");
  if (magic != "Pf") throw io_error(path + ": not a PFM file");
  const long w = pnm_int(f.get(), path);
  const long h = pnm_int(f.get(), path);
  const std::string scale_tok = pnm_token(f.get(), path);
  const double scale = std::strtod(scale_tok.c_str(), nullptr);
  if (w < 1 || h < 1 || scale == 0.0)
    throw io_error(path + ": bad PFM header");
  const bool file_little = scale < 0.0;

  FloatMap map(static_cast<int>(w), static_cast<int>(h));
  std::vector<float> rowbuf(static_cast<std::size_t>(w));
  std::size_t nans = 0;
  // PFM stores the bottom row first.
  for (long y = h - 1; y >= 0; --y) {
    if (std::fread(rowbuf.data(), 4, rowbuf.size(), f.get()) != rowbuf.size())
      throw io_error(path + ": unexpected end of file");
    if (file_little != (std::endian::native == std::endian::little))
      byteswap_floats(rowbuf);
    float* dst = map.row(static_cast<int>(y));
    for (long x = 0; x < w; ++x) {
      float v = rowbuf[static_cast<std::size_t>(x)];
      if (std::isnan(v)) {
        ++nans;
        v = FloatMap::kInvalid;
      } else if (std::isinf(v)) {
        v = FloatMap::kInvalid;
      }
      dst[x] = v;
    }
  }
  if (nan_count) *nan_count = nans;
  return map;
}

void save_pfm(const FloatMap& map, const std::string& path) {
  FilePtr f = open_file(path, "wb");
  const bool little = std::endian::native == std::endian::little;
  std::fprintf(f.get(), "Pf\n%d %d\n%s\n", map.width, map.height,
               little ? "-1.0" : "1.0");
  for (int y = map.height - 1; y >= 0; --y) {
    if (std::fwrite(map.row(y), 4, static_cast<std::size_t>(map.width),
                    f.get()) != static_cast<std::size_t>(map.width))
      throw io_error(path + ": short write");
  }
}

void save_png_rgb(const std::vector<std::uint8_t>& rgb, int width, int height,
                  const std::string& path) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw std::invalid_argument("save_png_rgb: buffer size mismatch");
  write_png(rgb.data(), width, height, 3, path);
}

void save_png_gray(const IntensityImage& img, const std::string& path) {
  write_png(img.data.data(), img.width, img.height, 1, path);
}

}  // namespace psgm
