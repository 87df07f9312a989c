#pragma once

#include "grasp/error.hpp"
#include "grasp/geometry.hpp"
#include "grasp/kd_tree.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace grasp {

/// Surface samples with unit normals in one frame. A cloud read from a file
/// without normals keeps `normals` empty until estimate_normals() fills it.
struct OrientedCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::string frame_id = "world";

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !points.empty() && normals.size() == points.size(); }
  bool needs_normals() const { return !points.empty() && normals.empty(); }

  void push_back(const Vec3& p, const Vec3& n) {
    points.push_back(p);
    normals.push_back(n);
  }
};

enum class CloudFormat { PlyAscii, XyznText };

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline double parse_number(std::string_view token, std::size_t line_no) {
  double value = 0.0;
  // from_chars rejects a leading '+', which some writers emit.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(Errc::MalformedHeader,
                "line " + std::to_string(line_no) + ": not a number '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(Errc::NonFiniteCoordinate,
                "line " + std::to_string(line_no) + ": '" + std::string(token) + "'");
  }
  return value;
}

inline Vec3 checked_normal(const Vec3& n, std::size_t line_no) {
  const double norm = n.norm();
  if (norm < 1e-12) {
    throw Error(Errc::InvalidNormal, "line " + std::to_string(line_no) + ": zero-length normal");
  }
  // Leave already-unit normals untouched so write/parse round trips are exact.
  return std::abs(norm - 1.0) > 1e-6 ? Vec3(n / norm) : n;
}

inline void append_number(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

inline OrientedCloud parse_xyzn(std::istream& in) {
  OrientedCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  int with_normals = -1;  // unknown until the first data line
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.front().starts_with('#')) {
      if (tokens.size() >= 3 && tokens[1] == "frame_id") cloud.frame_id = std::string(tokens[2]);
      continue;
    }
    if (tokens.size() != 3 && tokens.size() != 6) {
      if (tokens.size() == 4 || tokens.size() == 5) {
        throw Error(Errc::NormalCountMismatch,
                    "line " + std::to_string(line_no) + ": partial normal (" +
                        std::to_string(tokens.size()) + " values)");
      }
      throw Error(Errc::MalformedHeader, "line " + std::to_string(line_no) + ": expected 3 or 6 values");
    }
    const int has = tokens.size() == 6 ? 1 : 0;
    if (with_normals >= 0 && has != with_normals) {
      throw Error(Errc::NormalCountMismatch,
                  "line " + std::to_string(line_no) + ": mixes lines with and without normals");
    }
    with_normals = has;
    Vec3 p(parse_number(tokens[0], line_no), parse_number(tokens[1], line_no),
           parse_number(tokens[2], line_no));
    cloud.points.push_back(p);
    if (has) {
      Vec3 n(parse_number(tokens[3], line_no), parse_number(tokens[4], line_no),
             parse_number(tokens[5], line_no));
      cloud.normals.push_back(checked_normal(n, line_no));
    }
  }
  return cloud;
}

inline OrientedCloud parse_ply_ascii(std::istream& in) {
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
  };
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  OrientedCloud cloud;
  if (!next_line() || split_ws(line) != std::vector<std::string_view>{"ply"}) {
    throw Error(Errc::MalformedHeader, "missing 'ply' magic");
  }
  std::vector<Element> elements;
  bool saw_format = false;
  for (;;) {
    if (!next_line()) throw Error(Errc::MalformedHeader, "missing end_header");
    const auto t = split_ws(line);
    if (t.empty()) continue;
    if (t[0] == "end_header") break;
    if (t[0] == "format") {
      if (t.size() < 2 || t[1] != "ascii") {
        throw Error(Errc::MalformedHeader, "only 'format ascii' is supported");
      }
      saw_format = true;
    } else if (t[0] == "comment") {
      if (t.size() >= 3 && t[1] == "frame_id") cloud.frame_id = std::string(t[2]);
    } else if (t[0] == "obj_info") {
      continue;
    } else if (t[0] == "element") {
      if (t.size() != 3) throw Error(Errc::MalformedHeader, "line " + std::to_string(line_no));
      std::size_t count = 0;
      const auto [ptr, ec] = std::from_chars(t[2].data(), t[2].data() + t[2].size(), count);
      if (ec != std::errc() || ptr != t[2].data() + t[2].size()) {
        throw Error(Errc::MalformedHeader, "bad element count on line " + std::to_string(line_no));
      }
      elements.push_back({std::string(t[1]), count, {}});
    } else if (t[0] == "property") {
      if (elements.empty() || t.size() < 3) {
        throw Error(Errc::MalformedHeader, "stray property on line " + std::to_string(line_no));
      }
      elements.back().properties.emplace_back(t.back());
    } else {
      throw Error(Errc::MalformedHeader, "unknown header keyword '" + std::string(t[0]) + "'");
    }
  }
  if (!saw_format) throw Error(Errc::MalformedHeader, "missing format line");

  for (const Element& element : elements) {
    if (element.name != "vertex") {
      for (std::size_t i = 0; i < element.count; ++i) {
        if (!next_line()) throw Error(Errc::MalformedHeader, "truncated '" + element.name + "' block");
      }
      continue;
    }
    auto find = [&](std::string_view name) -> int {
      for (std::size_t i = 0; i < element.properties.size(); ++i) {
        if (element.properties[i] == name) return static_cast<int>(i);
      }
      return -1;
    };
    const std::array<int, 3> pos{find("x"), find("y"), find("z")};
    const std::array<int, 3> nrm{find("nx"), find("ny"), find("nz")};
    if (pos[0] < 0 || pos[1] < 0 || pos[2] < 0) {
      throw Error(Errc::MalformedHeader, "vertex element lacks x/y/z");
    }
    const int normal_props = (nrm[0] >= 0) + (nrm[1] >= 0) + (nrm[2] >= 0);
    if (normal_props != 0 && normal_props != 3) {
      throw Error(Errc::NormalCountMismatch, "vertex element declares only some of nx/ny/nz");
    }
    cloud.points.reserve(element.count);
    for (std::size_t i = 0; i < element.count; ++i) {
      if (!next_line()) throw Error(Errc::MalformedHeader, "fewer vertex lines than declared");
      const auto t = split_ws(line);
      if (t.size() < element.properties.size()) {
        throw Error(Errc::MalformedHeader, "line " + std::to_string(line_no) + ": too few values");
      }
      cloud.points.emplace_back(parse_number(t[pos[0]], line_no), parse_number(t[pos[1]], line_no),
                                parse_number(t[pos[2]], line_no));
      if (normal_props == 3) {
        Vec3 n(parse_number(t[nrm[0]], line_no), parse_number(t[nrm[1]], line_no),
               parse_number(t[nrm[2]], line_no));
        cloud.normals.push_back(checked_normal(n, line_no));
      }
    }
  }
  return cloud;
}

}  // namespace detail

inline OrientedCloud parse_cloud(std::istream& in, CloudFormat format) {
  return format == CloudFormat::PlyAscii ? detail::parse_ply_ascii(in) : detail::parse_xyzn(in);
}

inline OrientedCloud parse_cloud(std::string_view text, CloudFormat format) {
  std::istringstream in{std::string(text)};
  return parse_cloud(in, format);
}

/// Writes every coordinate in shortest round-trip form, so parsing the
/// output reproduces the cloud bit for bit.
inline void write_cloud(std::ostream& out, const OrientedCloud& cloud, CloudFormat format) {
  const bool normals = cloud.has_normals();
  std::string buf;
  if (format == CloudFormat::PlyAscii) {
    buf += "ply\nformat ascii 1.0\ncomment frame_id " + cloud.frame_id + "\n";
    buf += "element vertex " + std::to_string(cloud.size()) + "\n";
    buf += "property double x\nproperty double y\nproperty double z\n";
    if (normals) buf += "property double nx\nproperty double ny\nproperty double nz\n";
    buf += "end_header\n";
  } else {
    buf += "# frame_id " + cloud.frame_id + "\n";
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    detail::append_number(buf, p.x());
    buf += ' ';
    detail::append_number(buf, p.y());
    buf += ' ';
    detail::append_number(buf, p.z());
    if (normals) {
      const Vec3& n = cloud.normals[i];
      for (int a = 0; a < 3; ++a) {
        buf += ' ';
        detail::append_number(buf, n[a]);
      }
    }
    buf += '\n';
  }
  out << buf;
}

inline CloudFormat format_for_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  return ext == "ply" || ext == "PLY" ? CloudFormat::PlyAscii : CloudFormat::XyznText;
}

inline OrientedCloud read_cloud_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  return parse_cloud(in, format_for_path(path));
}

inline void write_cloud_file(const std::string& path, const OrientedCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  write_cloud(out, cloud, format_for_path(path));
}

inline Aabb bounding_box(const OrientedCloud& cloud) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "bounding box of an empty cloud");
  Aabb box{cloud.points.front(), cloud.points.front()};
  for (const Vec3& p : cloud.points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

/// k-NN PCA normals: smallest-eigenvalue eigenvector of each neighborhood's
/// covariance, flipped to face `viewpoint`.
inline OrientedCloud estimate_normals(const OrientedCloud& cloud, std::size_t k, const Vec3& viewpoint) {
  if (k == 0) throw Error(Errc::InvalidArgument, "k must be positive");
  if (cloud.size() < k + 1) {
    throw Error(Errc::TooFewPoints, "need at least " + std::to_string(k + 1) + " points, have " +
                                        std::to_string(cloud.size()));
  }
  const KdTree tree(cloud.points);
  OrientedCloud out;
  out.points = cloud.points;
  out.frame_id = cloud.frame_id;
  out.normals.reserve(cloud.size());
  Eigen::SelfAdjointEigenSolver<Mat3> solver;
  for (const Vec3& p : cloud.points) {
    const auto neighbors = tree.knn(p, k + 1);
    Vec3 mean = Vec3::Zero();
    for (const Neighbor& nb : neighbors) mean += cloud.points[nb.index];
    mean /= static_cast<double>(neighbors.size());
    Mat3 cov = Mat3::Zero();
    for (const Neighbor& nb : neighbors) {
      const Vec3 d = cloud.points[nb.index] - mean;
      cov += d * d.transpose();
    }
    if (cov.trace() <= 0.0) {
      throw Error(Errc::DegenerateNeighborhood, "all neighbors of a point coincide");
    }
    solver.compute(cov);
    Vec3 n = solver.eigenvectors().col(0).normalized();
    if (n.dot(viewpoint - p) < 0.0) n = -n;
    out.normals.push_back(n);
  }
  return out;
}

inline Vec3i cell_of(const Vec3& p, const Vec3& anchor, double res) {
  const Vec3 f = ((p - anchor) / res).array().floor();
  return f.cast<int>();
}

/// One point per occupied cubic cell of edge `res` (cells anchored at
/// `anchor`): the centroid of the members with their normalized mean normal.
/// Output is ordered by cell index.
inline OrientedCloud downsample(const OrientedCloud& cloud, double res, const Vec3& anchor = Vec3::Zero()) {
  if (!(res > 0.0)) throw Error(Errc::InvalidArgument, "downsample resolution must be positive");
  struct Accum {
    Vec3 point_sum = Vec3::Zero();
    Vec3 normal_sum = Vec3::Zero();
    Vec3 first_normal = Vec3::Zero();
    std::size_t count = 0;
  };
  auto key_less = [](const Vec3i& a, const Vec3i& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
  };
  std::map<Vec3i, Accum, decltype(key_less)> cells(key_less);
  const bool normals = cloud.has_normals();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Accum& acc = cells[cell_of(cloud.points[i], anchor, res)];
    acc.point_sum += cloud.points[i];
    if (normals) {
      if (acc.count == 0) acc.first_normal = cloud.normals[i];
      acc.normal_sum += cloud.normals[i];
    }
    ++acc.count;
  }
  OrientedCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(cells.size());
  for (const auto& [key, acc] : cells) {
    out.points.push_back(acc.point_sum / static_cast<double>(acc.count));
    if (normals) {
      const double len = acc.normal_sum.norm();
      // Opposing normals can cancel inside one cell (thin walls).
      out.normals.push_back(len > 1e-9 ? Vec3(acc.normal_sum / len) : acc.first_normal);
    }
  }
  return out;
}

inline OrientedCloud concatenate(const OrientedCloud& a, const OrientedCloud& b) {
  if (a.has_normals() != b.has_normals() && !a.empty() && !b.empty()) {
    throw Error(Errc::NormalCountMismatch, "cannot merge clouds with and without normals");
  }
  OrientedCloud out = a;
  if (out.empty()) out.frame_id = b.frame_id;
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  out.normals.insert(out.normals.end(), b.normals.begin(), b.normals.end());
  return out;
}

}  // namespace grasp
