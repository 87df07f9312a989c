#pragma once

// Synthetic scenes shared by the unit tests and the acceptance run.

#include "grasp/grasp.hpp"

#include <vector>

namespace fixtures {

using namespace grasp;

inline constexpr double kCylinderDiameter = 0.105;
inline constexpr double kCylinderHeight = 0.21;

inline SceneSpec box_spec() {
  SceneSpec s;
  s.objects.push_back({Primitive::Box, {0.06, 0.08, 0.20}, {0.0, 0.0, 0.10}, {}});
  return s;
}

inline SceneSpec cylinder_spec() {
  SceneSpec s;
  s.objects.push_back({Primitive::Cylinder, {kCylinderDiameter, kCylinderHeight, 0.0}, {0.0, 0.0, 0.105}, {}});
  return s;
}

/// Block body 0.19 x 0.065 x 0.05 on a 0.065 x 0.065 x 0.17 handle, standing
/// beside the cylinder along +x.
inline constexpr double kBlockOffsetX = 0.20;

inline SceneSpec cylinder_block_spec() {
  SceneSpec s = cylinder_spec();
  s.objects.push_back({Primitive::Box, {0.065, 0.065, 0.17}, {kBlockOffsetX + 0.0625, 0.0, 0.085}, {}});
  s.objects.push_back({Primitive::Box, {0.19, 0.065, 0.05}, {kBlockOffsetX, 0.0, 0.195}, {}});
  return s;
}

/// Four side faces of an axis-aligned square prism (no caps): every normal
/// lies on the equator at azimuth 0, pi/2, pi or 3pi/2.
inline OrientedCloud square_sides(double half = 0.05, double height = 0.1, double spacing = 0.01) {
  OrientedCloud c;
  const int n = static_cast<int>(std::lround(2 * half / spacing));
  const int m = static_cast<int>(std::lround(height / spacing));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k) {
      const double s = -half + (i + 0.5) * spacing;
      const double z = (k + 0.5) * spacing;
      c.push_back(Vec3(half, s, z), Vec3(1, 0, 0));
      c.push_back(Vec3(-half, s, z), Vec3(-1, 0, 0));
      c.push_back(Vec3(s, half, z), Vec3(0, 1, 0));
      c.push_back(Vec3(s, -half, z), Vec3(0, -1, 0));
    }
  return c;
}

/// Horizontal square patch at z = 0 with normals +z.
inline OrientedCloud plane(double half = 0.15, double spacing = 0.005) {
  OrientedCloud c;
  const int n = static_cast<int>(std::lround(2 * half / spacing));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) c.push_back(Vec3(-half + i * spacing, -half + j * spacing, 0.0), Vec3(0, 0, 1));
  return c;
}

/// Parallel jaw closing along x of {g}; approach -x like the built-ins would
/// make the jaws collinear with the approach, so this one approaches along -z.
inline GraspTypeModel jaw_along_x() {
  GraspTypeModel m;
  m.name = "jaw_x";
  m.approach_axis = -Vec3::UnitZ();
  m.finger_contacts = {{Vec3(0.06, 0, 0), Vec3(-1, 0, 0), 0.045, 0.015, Vec3(-1, 0, 0)},
                       {Vec3(-0.06, 0, 0), Vec3(1, 0, 0), 0.045, 0.015, Vec3(1, 0, 0)}};
  return m;
}

inline std::vector<GraspTypeModel> builtin_models() { return {lateral_model(), tripodal_model(), power_model()}; }

/// Viewpoints counter-clockwise around the origin at 0.8 m, raised 0.4 m.
inline std::vector<OrientedCloud> ring_scans(const OrientedCloud& full, std::size_t count, double start = 0.0,
                                              double sweep = kTwoPi) {
  std::vector<OrientedCloud> scans;
  for (const Vec3& v : scan_ring(Vec3::Zero(), 0.8, 0.4, count, start, sweep)) scans.push_back(partial_scan(full, v));
  return scans;
}

}  // namespace fixtures
