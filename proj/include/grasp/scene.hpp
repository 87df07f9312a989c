#pragma once

#include "grasp/cloud.hpp"
#include "grasp/error.hpp"
#include "grasp/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace grasp {

enum class Primitive { Box, Cylinder };

/// Box dimensions are full edge lengths (x, y, z). A cylinder uses
/// (diameter, height, unused) with its axis along local z. Position is the
/// primitive's center.
struct SceneObject {
  Primitive primitive = Primitive::Box;
  Vec3 dimensions = Vec3::Ones();
  Vec3 position = Vec3::Zero();
  EulerRotation rotation;
};

struct SceneSpec {
  std::vector<SceneObject> objects;
  double sample_spacing = 0.005;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

inline void validate(const SceneSpec& spec) {
  auto fail = [](const std::string& what) { throw Error(Errc::MalformedScene, what); };
  if (!(spec.sample_spacing > 0.0)) fail("sample spacing must be positive");
  if (!(spec.noise_sigma >= 0.0)) fail("noise sigma must be non-negative");
  for (const auto& o : spec.objects) {
    const int used = o.primitive == Primitive::Box ? 3 : 2;
    for (int i = 0; i < used; ++i)
      if (!(o.dimensions[i] > 0.0)) fail("object dimensions must be positive");
  }
}

namespace detail {

inline int divisions(double length, double spacing) {
  return std::max(1, static_cast<int>(std::ceil(length / spacing - 1e-9)));
}

inline void sample_box(const Vec3& size, double spacing, OrientedCloud& out) {
  const Vec3 half = size / 2.0;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    const int nu = divisions(size[u], spacing);
    const int nv = divisions(size[v], spacing);
    for (double side : {-1.0, 1.0}) {
      Vec3 n = Vec3::Zero();
      n[axis] = side;
      for (int a = 0; a < nu; ++a)
        for (int b = 0; b < nv; ++b) {
          Vec3 p;
          p[axis] = side * half[axis];
          p[u] = -half[u] + (a + 0.5) * size[u] / nu;
          p[v] = -half[v] + (b + 0.5) * size[v] / nv;
          out.push_back(p, n);
        }
    }
  }
}

inline void sample_cylinder(double diameter, double height, double spacing, OrientedCloud& out) {
  const double r = diameter / 2.0;
  const int nt = std::max(3, divisions(kTwoPi * r, spacing));
  const int nh = divisions(height, spacing);
  for (int k = 0; k < nt; ++k) {
    const double t = k * kTwoPi / nt;
    const Vec3 n(std::cos(t), std::sin(t), 0.0);
    for (int m = 0; m < nh; ++m) out.push_back(Vec3(r * n.x(), r * n.y(), -height / 2.0 + (m + 0.5) * height / nh), n);
  }
  const int reach = static_cast<int>(std::floor(r / spacing));
  for (double side : {-1.0, 1.0}) {
    for (int i = -reach; i <= reach; ++i)
      for (int j = -reach; j <= reach; ++j) {
        const double x = i * spacing;
        const double y = j * spacing;
        if (x * x + y * y < r * r) out.push_back(Vec3(x, y, side * height / 2.0), Vec3(0.0, 0.0, side));
      }
  }
}

/// Inside the solid or on its surface, so faces glued to a neighbor vanish.
inline bool inside_solid(const SceneObject& o, const Vec3& world) {
  constexpr double skin = -1e-9;
  const Vec3 p = o.rotation.matrix.transpose() * (world - o.position);
  if (o.primitive == Primitive::Box) return ((p.cwiseAbs() - o.dimensions / 2.0).array() < -skin).all();
  const double r = o.dimensions.x() / 2.0;
  return p.head<2>().norm() < r - skin && std::abs(p.z()) < o.dimensions.y() / 2.0 - skin;
}

}  // namespace detail

/// Surface samples with exact outward normals. Samples inside or on another
/// object of the scene are dropped; noise perturbs positions only.
inline OrientedCloud gen_scene(const SceneSpec& spec) {
  validate(spec);
  OrientedCloud out;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const SceneObject& o = spec.objects[i];
    OrientedCloud local;
    if (o.primitive == Primitive::Box) {
      detail::sample_box(o.dimensions, spec.sample_spacing, local);
    } else {
      detail::sample_cylinder(o.dimensions.x(), o.dimensions.y(), spec.sample_spacing, local);
    }
    const Mat3& r = o.rotation.matrix;
    for (std::size_t k = 0; k < local.size(); ++k) {
      const Vec3 p = o.position + r * local.points[k];
      bool buried = false;
      for (std::size_t j = 0; j < spec.objects.size() && !buried; ++j) {
        buried = j != i && detail::inside_solid(spec.objects[j], p);
      }
      if (!buried) out.push_back(p, (r * local.normals[k]).normalized());
    }
  }
  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (Vec3& p : out.points) p += Vec3(noise(rng), noise(rng), noise(rng));
  }
  return out;
}

struct ScanOptions {
  double angular_resolution = 0.5 * kPi / 180.0;
  double depth_tolerance = 0.02;
  bool occlusion = true;
};

/// Points whose normal faces `viewpoint` and that are not hidden behind a
/// nearer point in the same angular cell. Input order is preserved.
inline OrientedCloud partial_scan(const OrientedCloud& cloud, const Vec3& viewpoint, const ScanOptions& opts = {}) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "partial scan of an empty cloud");
  if (!cloud.has_normals()) throw Error(Errc::MissingNormals, "partial scan needs normals");
  std::vector<std::size_t> facing;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.normals[i].dot(viewpoint - cloud.points[i]) > 0.0) facing.push_back(i);
  }
  using Key = std::pair<long, long>;
  std::map<Key, double> nearest;
  std::vector<std::pair<Key, double>> keyed;
  keyed.reserve(facing.size());
  for (std::size_t i : facing) {
    const Vec3 d = cloud.points[i] - viewpoint;
    const double range = d.norm();
    const double az = std::atan2(d.y(), d.x());
    const double el = range > 0.0 ? std::asin(std::clamp(d.z() / range, -1.0, 1.0)) : 0.0;
    const Key key{std::lround(std::floor(az / opts.angular_resolution)),
                  std::lround(std::floor(el / opts.angular_resolution))};
    keyed.emplace_back(key, range);
    auto [it, fresh] = nearest.emplace(key, range);
    if (!fresh) it->second = std::min(it->second, range);
  }
  OrientedCloud out;
  out.frame_id = cloud.frame_id;
  for (std::size_t k = 0; k < facing.size(); ++k) {
    const auto& [key, range] = keyed[k];
    if (opts.occlusion && range > nearest[key] + opts.depth_tolerance) continue;
    out.push_back(cloud.points[facing[k]], cloud.normals[facing[k]]);
  }
  return out;
}

/// Rigid translation of the whole cloud.
inline OrientedCloud perturb_registration(const OrientedCloud& cloud, const Vec3& offset) {
  OrientedCloud out = cloud;
  for (Vec3& p : out.points) p += offset;
  return out;
}

/// Merges scans with simulated misregistration. Without `per_scan` only the
/// last scan is shifted by `offset`; with it, scan k is shifted by k * offset.
inline OrientedCloud perturb_registration(std::span<const OrientedCloud> scans, const Vec3& offset, bool per_scan) {
  OrientedCloud out;
  for (std::size_t k = 0; k < scans.size(); ++k) {
    double factor = 0.0;
    if (per_scan) {
      factor = static_cast<double>(k);
    } else if (k + 1 == scans.size() && k > 0) {
      factor = 1.0;
    }
    out = concatenate(out, factor == 0.0 ? scans[k] : perturb_registration(scans[k], factor * offset));
  }
  return out;
}

/// `count` viewpoints counter-clockwise (seen from +z) on a horizontal circle.
inline std::vector<Vec3> scan_ring(const Vec3& center, double radius, double height, std::size_t count,
                                   double start_angle = 0.0, double sweep = kTwoPi) {
  std::vector<Vec3> out;
  const double step = count > 0 ? sweep / static_cast<double>(count) : 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double a = start_angle + static_cast<double>(k) * step;
    out.push_back(center + Vec3(radius * std::cos(a), radius * std::sin(a), height));
  }
  return out;
}

/// Line-oriented scene text:
///   spacing 0.005
///   noise 0.001
///   seed 7
///   box size 0.06 0.08 0.2 position 0 0 0.1 rpy 0 0 0
///   cylinder diameter 0.105 height 0.21 position 0 0 0.105
/// `#` starts a comment; `rpy` is optional.
inline SceneSpec parse_scene(std::istream& in) {
  SceneSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream s(line);
    std::string head;
    if (!(s >> head)) continue;
    auto fail = [&](const std::string& what) {
      throw Error(Errc::MalformedScene, "line " + std::to_string(line_no) + ": " + what);
    };
    auto number = [&]() {
      double v;
      if (!(s >> v)) fail("expected a number");
      return v;
    };
    auto vec = [&]() {
      const double x = number();
      const double y = number();
      return Vec3(x, y, number());
    };
    if (head == "spacing") {
      spec.sample_spacing = number();
    } else if (head == "noise") {
      spec.noise_sigma = number();
    } else if (head == "seed") {
      if (!(s >> spec.seed)) fail("expected an unsigned seed");
    } else if (head == "box" || head == "cylinder") {
      SceneObject o;
      o.primitive = head == "box" ? Primitive::Box : Primitive::Cylinder;
      Vec3 rpy = Vec3::Zero();
      bool sized = false;
      std::string key;
      while (s >> key) {
        if (key == "size" && o.primitive == Primitive::Box) {
          o.dimensions = vec();
          sized = true;
        } else if (key == "diameter" && o.primitive == Primitive::Cylinder) {
          o.dimensions.x() = number();
          sized = true;
        } else if (key == "height" && o.primitive == Primitive::Cylinder) {
          o.dimensions.y() = number();
        } else if (key == "position") {
          o.position = vec();
        } else if (key == "rpy") {
          rpy = vec();
        } else {
          fail("unknown key '" + key + "'");
        }
      }
      if (!sized) fail(head + " without dimensions");
      if (o.primitive == Primitive::Cylinder) o.dimensions.z() = 0.0;
      o.rotation = EulerRotation::from_angles(rpy.x(), rpy.y(), rpy.z());
      spec.objects.push_back(o);
    } else {
      fail("unknown record '" + head + "'");
    }
  }
  validate(spec);
  return spec;
}

inline SceneSpec read_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse_scene(in);
}

}  // namespace grasp
