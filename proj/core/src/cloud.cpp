#include "psgm/cloud.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "psgm/errors.hpp"
#include "psgm/parallel.hpp"

namespace psgm {

void Calibration::validate() const {
  if (!(focal_px > 0)) throw std::invalid_argument("calibration: focal must be > 0");
  if (!(baseline_m > 0))
    throw std::invalid_argument("calibration: baseline must be > 0");
}

Calibration load_middlebury_calib(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open file");
  Calibration c;
  std::string line;
  bool have_cam0 = false, have_baseline = false;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "cam0") {
      // cam0=[f 0 cx; 0 f cy; 0 0 1]
      for (char& ch : value)
        if (ch == '[' || ch == ']' || ch == ';') ch = ' ';
      std::istringstream ss(value);
      double m[9];
      for (double& v : m)
        if (!(ss >> v)) throw io_error(path + ": malformed cam0 matrix");
      c.focal_px = m[0];
      c.cx_px = m[2];
      c.cy_px = m[5];
      have_cam0 = true;
    } else if (key == "doffs") {
      c.doffs_px = std::strtod(value.c_str(), nullptr);
    } else if (key == "baseline") {
      // Middlebury baselines are in millimeters.
      c.baseline_m = std::strtod(value.c_str(), nullptr) / 1000.0;
      have_baseline = true;
    } else if (key == "width") {
      c.width = std::atoi(value.c_str());
    } else if (key == "height") {
      c.height = std::atoi(value.c_str());
    } else if (key == "ndisp") {
      c.ndisp = std::atoi(value.c_str());
    }
  }
  if (!have_cam0 || !have_baseline)
    throw io_error(path + ": missing cam0 or baseline field");
  c.validate();
  return c;
}

PointCloud disparity_to_cloud(const DisparityMap& disp,
                              const Calibration& calib, int stride,
                              const IntensityImage* intensity) {
  calib.validate();
  if (stride < 1) throw std::invalid_argument("disparity_to_cloud: stride >= 1");
  PointCloud cloud;
  for (int v = 0; v < disp.height; v += stride) {
    for (int u = 0; u < disp.width; u += stride) {
      if (!disp.valid(u, v)) continue;
      const double d = disp.at(u, v) + calib.doffs_px;
      if (d <= 0) continue;
      const double z = calib.focal_px * calib.baseline_m / d;
      cloud.points.push_back({static_cast<float>((u - calib.cx_px) * z / calib.focal_px),
                              static_cast<float>((v - calib.cy_px) * z / calib.focal_px),
                              static_cast<float>(z)});
      if (intensity)
        cloud.scalar.push_back(static_cast<float>(intensity->at(u, v)) / 255.f);
    }
  }
  return cloud;
}

namespace {

// Uniform grid over the reference cloud with cell size = query radius, so a
// radius query touches at most 27 cells.
class GridIndex {
 public:
  GridIndex(const PointCloud& cloud, double cell) : cloud_(cloud), cell_(cell) {
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
      cells_[key(cloud.points[i])].push_back(static_cast<std::uint32_t>(i));
  }

  template <typename Fn>
  void for_neighbors(const std::array<float, 3>& p, double radius, Fn&& fn) const {
    const double r2 = radius * radius;
    const long cx = coord(p[0]), cy = coord(p[1]), cz = coord(p[2]);
    for (long dz = -1; dz <= 1; ++dz)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
          if (it == cells_.end()) continue;
          for (std::uint32_t i : it->second) {
            const auto& q = cloud_.points[i];
            const double ddx = q[0] - p[0], ddy = q[1] - p[1], ddz = q[2] - p[2];
            if (ddx * ddx + ddy * ddy + ddz * ddz <= r2) fn(q);
          }
        }
  }

 private:
  long coord(double v) const { return static_cast<long>(std::floor(v / cell_)); }
  std::uint64_t pack(long x, long y, long z) const {
    // 21 bits per axis, offset to stay positive
    const std::uint64_t bx = static_cast<std::uint64_t>(x + (1 << 20)) & 0x1fffff;
    const std::uint64_t by = static_cast<std::uint64_t>(y + (1 << 20)) & 0x1fffff;
    const std::uint64_t bz = static_cast<std::uint64_t>(z + (1 << 20)) & 0x1fffff;
    return bx | (by << 21) | (bz << 42);
  }
  std::uint64_t key(const std::array<float, 3>& p) const {
    return pack(coord(p[0]), coord(p[1]), coord(p[2]));
  }

  const PointCloud& cloud_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace

std::string PlaneErrorReport::to_text() const {
  std::ostringstream out;
  out << "point-to-plane error report\n";
  out << "  evaluated   : " << evaluated << "\n";
  out << "  unevaluated : " << unevaluated << "\n";
  out << "  mean error  : " << mean << " m\n";
  out << "  histogram (bin " << kHistogramBinWidth << " m, last bin = overflow):\n";
  for (std::size_t b = 0; b < histogram.size(); ++b) {
    out << "  [" << (b < kHistogramBins ? b * kHistogramBinWidth
                                        : kHistogramBins * kHistogramBinWidth)
        << (b < kHistogramBins ? ", " : "+");
    if (b < kHistogramBins) out << (b + 1) * kHistogramBinWidth;
    out << (b < kHistogramBins ? ") " : "  ") << histogram[b] << "\n";
  }
  return out.str();
}

PlaneErrorReport point_to_plane_error(const PointCloud& pred,
                                      const PointCloud& ref, double radius) {
  if (ref.size() == 0)
    throw std::invalid_argument("point_to_plane_error: empty reference cloud");
  if (!(radius > 0))
    throw std::invalid_argument("point_to_plane_error: radius must be > 0");

  const GridIndex index(ref, radius);
  PlaneErrorReport report;
  report.errors.assign(pred.size(), FloatMap::kInvalid);
  report.histogram.assign(PlaneErrorReport::kHistogramBins + 1, 0);

  parallel_chunks(static_cast<std::int64_t>(pred.size()),
                  [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      const auto& p = pred.points[static_cast<std::size_t>(i)];
      Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
      std::size_t n = 0;
      index.for_neighbors(p, radius, [&](const std::array<float, 3>& q) {
        centroid += Eigen::Vector3d(q[0], q[1], q[2]);
        ++n;
      });
      if (n < 3) continue;
      centroid /= static_cast<double>(n);
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      index.for_neighbors(p, radius, [&](const std::array<float, 3>& q) {
        const Eigen::Vector3d d = Eigen::Vector3d(q[0], q[1], q[2]) - centroid;
        cov += d * d.transpose();
      });
      cov /= static_cast<double>(n);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
      const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
      // Collinear neighbourhoods (lambda_mid ~ lambda_min ~ 0) give no
      // usable plane; require the mid eigenvalue to dominate the smallest.
      if (!(evals[1] > 0.0) ||
          (evals[0] > 0.0 && evals[1] / evals[0] < 4.0))
        continue;
      const Eigen::Vector3d normal = eig.eigenvectors().col(0);
      const Eigen::Vector3d dp = Eigen::Vector3d(p[0], p[1], p[2]) - centroid;
      report.errors[static_cast<std::size_t>(i)] =
          static_cast<float>(std::abs(normal.dot(dp)));
    }
  });

  double sum = 0;
  for (float e : report.errors) {
    if (!std::isfinite(e)) {
      ++report.unevaluated;
      continue;
    }
    ++report.evaluated;
    sum += e;
    const auto bin = static_cast<std::size_t>(
        std::min<double>(std::floor(e / PlaneErrorReport::kHistogramBinWidth),
                         PlaneErrorReport::kHistogramBins));
    ++report.histogram[bin];
  }
  if (report.evaluated > 0) sum /= static_cast<double>(report.evaluated);
  report.mean = sum;
  return report;
}

namespace {

std::array<std::uint8_t, 3> error_color(double e, double cap) {
  if (e >= cap) return {255, 0, 0};
  const double t = cap > 0 ? std::clamp(e / cap, 0.0, 1.0) : 0.0;
  // blue -> green -> red ramp
  if (t < 0.5) {
    const double u = t / 0.5;
    return {0, static_cast<std::uint8_t>(std::lround(255 * u)),
            static_cast<std::uint8_t>(std::lround(255 * (1 - u)))};
  }
  const double u = (t - 0.5) / 0.5;
  return {static_cast<std::uint8_t>(std::lround(255 * u)),
          static_cast<std::uint8_t>(std::lround(255 * (1 - u))), 0};
}

}  // namespace

void write_ply(const PointCloud& cloud, const std::string& path,
               bool color_by_error, double error_cap) {
  if (color_by_error && !cloud.has_scalar())
    throw std::invalid_argument("write_ply: color_by_error needs a scalar channel");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error(path + ": cannot open file");
  std::fprintf(f,
               "ply\nformat binary_little_endian 1.0\n"
               "element vertex %zu\n"
               "property float x\nproperty float y\nproperty float z\n",
               cloud.size());
  if (color_by_error)
    std::fprintf(f,
                 "property uchar red\nproperty uchar green\nproperty uchar blue\n");
  std::fprintf(f, "end_header\n");
  bool ok = true;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    ok = ok && std::fwrite(cloud.points[i].data(), 4, 3, f) == 3;
    if (color_by_error) {
      const auto rgb = error_color(cloud.scalar[i], error_cap);
      ok = ok && std::fwrite(rgb.data(), 1, 3, f) == 3;
    }
  }
  std::fclose(f);
  if (!ok) throw io_error(path + ": short write");
}

namespace {

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" ||
      t == "uint32" || t == "float32")
    return 4;
  if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
  throw io_error("unsupported PLY property type '" + t + "'");
}

}  // namespace

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw io_error(path + ": not a PLY file");

  struct Property {
    std::string type, name;
    bool list = false;
    std::string count_type, item_type;
  };
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
  };
  std::vector<Element> elements;
  bool binary = false;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok == "obj_info") continue;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt == "ascii") binary = false;
      else throw io_error(path + ": unsupported PLY format " + fmt);
    } else if (tok == "element") {
      Element e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (tok == "property") {
      if (elements.empty()) throw io_error(path + ": property before element");
      Property p;
      ss >> p.type;
      if (p.type == "list") {
        p.list = true;
        ss >> p.count_type >> p.item_type >> p.name;
      } else {
        ss >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (tok == "end_header") {
      break;
    }
  }

  PointCloud cloud;
  for (const Element& e : elements) {
    const bool is_vertex = e.name == "vertex";
    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < e.props.size(); ++i) {
      if (e.props[i].name == "x") ix = static_cast<int>(i);
      if (e.props[i].name == "y") iy = static_cast<int>(i);
      if (e.props[i].name == "z") iz = static_cast<int>(i);
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
      throw io_error(path + ": vertex element lacks x/y/z");
    for (std::size_t n = 0; n < e.count; ++n) {
      std::array<double, 3> xyz{0, 0, 0};
      if (binary) {
        for (const Property& p : e.props) {
          if (p.list) {
            unsigned char cnt_buf[8] = {0};
            const std::size_t cs = ply_type_size(p.count_type);
            in.read(reinterpret_cast<char*>(cnt_buf), static_cast<long>(cs));
            std::uint64_t cnt = 0;
            std::memcpy(&cnt, cnt_buf, cs);  // little-endian host assumed
            in.seekg(static_cast<long>(cnt * ply_type_size(p.item_type)),
                     std::ios::cur);
            continue;
          }
          const std::size_t sz = ply_type_size(p.type);
          unsigned char buf[8];
          in.read(reinterpret_cast<char*>(buf), static_cast<long>(sz));
          const int pi = static_cast<int>(&p - e.props.data());
          if (is_vertex && (pi == ix || pi == iy || pi == iz)) {
            double v = 0;
            if (p.type == "float" || p.type == "float32") {
              float fv;
              std::memcpy(&fv, buf, 4);
              v = fv;
            } else if (p.type == "double" || p.type == "float64") {
              std::memcpy(&v, buf, 8);
            } else {
              throw io_error(path + ": x/y/z must be float or double");
            }
            xyz[pi == ix ? 0 : pi == iy ? 1 : 2] = v;
          }
        }
      } else {
        if (!std::getline(in, line))
          throw io_error(path + ": unexpected end of file");
        std::istringstream ss(line);
        for (std::size_t pi = 0; pi < e.props.size(); ++pi) {
          if (e.props[pi].list) {
            std::size_t cnt = 0;
            ss >> cnt;
            double dummy;
            for (std::size_t k = 0; k < cnt; ++k) ss >> dummy;
            continue;
          }
          double v = 0;
          ss >> v;
          if (is_vertex) {
            if (static_cast<int>(pi) == ix) xyz[0] = v;
            if (static_cast<int>(pi) == iy) xyz[1] = v;
            if (static_cast<int>(pi) == iz) xyz[2] = v;
          }
        }
      }
      if (!in) throw io_error(path + ": unexpected end of file");
      if (is_vertex)
        cloud.points.push_back({static_cast<float>(xyz[0]),
                                static_cast<float>(xyz[1]),
                                static_cast<float>(xyz[2])});
    }
  }
  return cloud;
}

}  // namespace psgm
