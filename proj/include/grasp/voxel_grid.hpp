#pragma once

#include "grasp/cloud.hpp"
#include "grasp/error.hpp"
#include "grasp/geometry.hpp"
#include "grasp/grasp_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace grasp {

inline constexpr std::int16_t kOccupied = 1;
inline constexpr std::int16_t kContact = 1;
inline constexpr std::int16_t kConstraint = -255;

/// Dense 3D array, x fastest.
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  explicit Grid3(const Vec3i& dims, T fill = T{}) : dims_(dims) {
    if ((dims.array() <= 0).any()) throw Error(Errc::InvalidArgument, "grid dimensions must be positive");
    cells_.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(), fill);
  }

  const Vec3i& dims() const { return dims_; }
  std::size_t size() const { return cells_.size(); }

  bool in_bounds(const Vec3i& c) const {
    return (c.array() >= 0).all() && (c.array() < dims_.array()).all();
  }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims_.y() + j) * dims_.x() + i;
  }
  std::size_t index(const Vec3i& c) const { return index(c.x(), c.y(), c.z()); }

  Vec3i coords(std::size_t flat) const {
    const auto nx = static_cast<std::size_t>(dims_.x());
    const auto ny = static_cast<std::size_t>(dims_.y());
    return {static_cast<int>(flat % nx), static_cast<int>((flat / nx) % ny), static_cast<int>(flat / (nx * ny))};
  }

  T& operator()(int i, int j, int k) { return cells_[index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return cells_[index(i, j, k)]; }
  T& operator[](const Vec3i& c) { return cells_[index(c)]; }
  const T& operator[](const Vec3i& c) const { return cells_[index(c)]; }

  std::vector<T>& data() { return cells_; }
  const std::vector<T>& data() const { return cells_; }

  std::size_t count(T value) const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), value)); }

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  Vec3i dims_ = Vec3i::Zero();
  std::vector<T> cells_;
};

/// Signed occupancy grid. `origin` is the min corner of cell (0,0,0);
/// `frame_center` is the position of the attached frame, {o} or {g}.
struct VoxelGrid {
  double resolution = 0.0;
  Vec3 origin = Vec3::Zero();
  Vec3 frame_center = Vec3::Zero();
  Grid3<std::int16_t> cells;

  const Vec3i& dims() const { return cells.dims(); }
  std::size_t voxel_count() const { return cells.size(); }
  Vec3 cell_center(const Vec3i& c) const { return origin + (c.cast<double>().array() + 0.5).matrix() * resolution; }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;
};

inline int cells_for(double extent, double res) {
  return std::max(1, static_cast<int>(std::ceil(extent / res - 1e-9)));
}

inline Vec3i dims_for(const Vec3& extent, double res) {
  return {cells_for(extent.x(), res), cells_for(extent.y(), res), cells_for(extent.z(), res)};
}

struct ObjectGrid {
  VoxelGrid grid;
  std::size_t outside_count = 0;  // points outside the box, ignored
};

/// V_o: 1 where any point falls, 0 elsewhere. Cell index is
/// floor((p - box.min) / res); points on the box's upper faces clamp into the
/// last cell.
inline ObjectGrid build_object_grid(const OrientedCloud& cloud, const Aabb& box, double res) {
  if (!(res > 0.0)) throw Error(Errc::InvalidArgument, "voxel resolution must be positive");
  if ((box.max.array() < box.min.array()).any()) throw Error(Errc::InvalidArgument, "box min exceeds max");
  ObjectGrid out;
  out.grid.resolution = res;
  out.grid.origin = box.min;
  out.grid.frame_center = box.center();
  out.grid.cells = Grid3<std::int16_t>(dims_for(box.extent(), res));
  const Vec3i last = out.grid.dims() - Vec3i::Ones();
  for (const Vec3& p : cloud.points) {
    if (!box.contains(p)) {
      ++out.outside_count;
      continue;
    }
    const Vec3i c = cell_of(p, box.min, res).cwiseMin(last).cwiseMax(Vec3i::Zero());
    out.grid.cells[c] = kOccupied;
  }
  return out;
}

/// Cube of at least `edge`, with an even cell count so {g} sits on a cell corner.
inline Vec3i default_gripper_dims(double res, double edge = 0.30) {
  return Vec3i::Constant(2 * cells_for(edge / 2.0, res));
}

/// V_g for one orientation: positive segment samples mark +1, constraint
/// segment samples and constraint-block interiors mark -255 and override +1.
/// The grid is centered on {g}. Segments are sampled at res/2; a block covers
/// every cell whose center lies inside it.
inline VoxelGrid rasterize_gripper(const GraspTypeModel& model, const EulerRotation& rotation, double res,
                                   const Vec3i& dims) {
  if (!(res > 0.0)) throw Error(Errc::InvalidArgument, "voxel resolution must be positive");
  VoxelGrid g;
  g.resolution = res;
  g.origin = -0.5 * res * dims.cast<double>();
  g.frame_center = Vec3::Zero();
  g.cells = Grid3<std::int16_t>(dims);
  const Mat3& r = rotation.matrix;
  const double step = res / 2.0;

  auto cell_for = [&](const Vec3& p_g) {
    const Vec3 q = r * p_g;
    const Vec3 f = ((q - g.origin) / res + Vec3::Constant(1e-9)).array().floor();
    const Vec3i c = f.cast<int>();
    if (!g.cells.in_bounds(c)) {
      throw Error(Errc::ModelExceedsGrid, model.name + " does not fit a " + std::to_string(dims.x()) + "x" +
                                              std::to_string(dims.y()) + "x" + std::to_string(dims.z()) + " grid");
    }
    return c;
  };

  const auto vectors = model.all_vectors();
  for (const auto& v : vectors) {
    for (const Vec3& s : v.positive_samples(step)) g.cells[cell_for(s)] = kContact;
  }
  for (const auto& v : vectors) {
    for (const Vec3& s : v.negative_samples(step)) g.cells[cell_for(s)] = kConstraint;
  }
  for (const auto& block : model.constraint_blocks) {
    Vec3 lo = Vec3::Constant(1e300);
    Vec3 hi = Vec3::Constant(-1e300);
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 sign((corner & 1) ? 1.0 : -1.0, (corner & 2) ? 1.0 : -1.0, (corner & 4) ? 1.0 : -1.0);
      const Vec3 q = r * (block.center + sign.cwiseProduct(block.half_extents));
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const Vec3 extent = res * dims.cast<double>();
    if ((lo.array() < g.origin.array() - 1e-9).any() || (hi.array() > (g.origin + extent).array() + 1e-9).any()) {
      throw Error(Errc::ModelExceedsGrid, model.name + ": constraint block leaves the gripper grid");
    }
    const Vec3i c0 = ((lo - g.origin) / res).array().floor().cast<int>().max(0).matrix();
    const Vec3i c1 = ((hi - g.origin) / res).array().floor().cast<int>().min((dims - Vec3i::Ones()).array()).matrix();
    const Mat3 rt = r.transpose();
    for (int k = c0.z(); k <= c1.z(); ++k)
      for (int j = c0.y(); j <= c1.y(); ++j)
        for (int i = c0.x(); i <= c1.x(); ++i) {
          const Vec3i c(i, j, k);
          if (block.contains(rt * g.cell_center(c))) g.cells[c] = kConstraint;
        }
  }
  return g;
}

/// Debug export: nonzero cell centers as colored vertices, green for
/// positive cells and red for constraints.
inline void write_grid_ply(std::ostream& out, const VoxelGrid& grid) {
  std::vector<std::pair<Vec3, std::int16_t>> cells;
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const std::int16_t v = grid.cells.data()[i];
    if (v != 0) cells.emplace_back(grid.cell_center(grid.cells.coords(i)), v);
  }
  std::string s = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cells.size()) +
                  "\nproperty double x\nproperty double y\nproperty double z\n"
                  "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (const auto& [p, v] : cells) {
    for (int a = 0; a < 3; ++a) {
      detail::append_number(s, p[a]);
      s += ' ';
    }
    s += v < 0 ? "255 0 0\n" : "0 255 0\n";
  }
  out << s;
}

}  // namespace grasp
