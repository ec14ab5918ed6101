#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "psgm/image.hpp"

namespace psgm::test {

/// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    dir_ = std::filesystem::temp_directory_path() /
           ("psgm_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }
  std::string root() const { return dir_.string(); }

 private:
  std::filesystem::path dir_;
};

inline std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<char>((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
}

inline IntensityImage random_image(int w, int h, std::mt19937& rng) {
  IntensityImage img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

inline FloatMap random_map(int w, int h, float lo, float hi, std::mt19937& rng,
                           double invalid_fraction = 0.0) {
  FloatMap map(w, h);
  std::uniform_real_distribution<float> dist(lo, hi);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (auto& v : map.data)
    v = coin(rng) < invalid_fraction ? FloatMap::kInvalid : dist(rng);
  return map;
}

}  // namespace psgm::test
