#pragma once

#include "grasp/correlator.hpp"
#include "grasp/error.hpp"
#include "grasp/grasp_models.hpp"
#include "grasp/scene.hpp"
#include "grasp/voxel_grid.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <vector>

namespace grasp {

struct BenchRow {
  double res_cm = 0.0;
  std::size_t object_voxels = 0;
  std::size_t gripper_voxels = 0;
  std::size_t padded_voxels = 0;
  double mean_s = 0.0;
};

struct BenchOptions {
  Vec3 object_extent{0.5, 0.6, 0.3};
  double gripper_edge = 0.30;
  unsigned repeats = 3;
};

inline std::vector<double> default_bench_resolutions_cm() { return {0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}; }

/// Times one stage-two correlation (rasterized lateral gripper against a
/// voxelized cylinder scene) per resolution. The object spectrum is computed
/// once per resolution, as in planning.
inline std::vector<BenchRow> run_bench(const std::vector<double>& res_cm, const BenchOptions& opts = {}) {
  if (opts.repeats == 0) throw Error(Errc::InvalidArgument, "bench needs at least one repeat");
  SceneSpec scene;
  scene.objects.push_back({Primitive::Cylinder, {0.105, 0.21, 0.0}, {0.0, 0.0, 0.105}, {}});
  const OrientedCloud cloud = gen_scene(scene);
  const Aabb box{Vec3(-opts.object_extent.x() / 2, -opts.object_extent.y() / 2, 0.0),
                 Vec3(opts.object_extent.x() / 2, opts.object_extent.y() / 2, opts.object_extent.z())};
  const GraspTypeModel model = lateral_model();
  const EulerRotation rotation = EulerRotation::from_angles(0.0, -kPi / 2.0, 0.0);
  std::vector<BenchRow> rows;
  for (double cm : res_cm) {
    if (!(cm > 0.0)) throw Error(Errc::InvalidArgument, "bench resolutions must be positive");
    const double res = cm / 100.0;
    const ObjectGrid object = build_object_grid(cloud, box, res);
    const VoxelGrid gripper = rasterize_gripper(model, rotation, res, default_gripper_dims(res, opts.gripper_edge));
    const FftCorrelator correlator(object.grid, gripper.dims());
    double total = 0.0;
    for (unsigned r = 0; r < opts.repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const CorrelationVolume volume = correlator.correlate(gripper);
      total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (volume.values.size() == 0) throw Error(Errc::InvalidArgument, "empty correlation volume");
    }
    rows.push_back({cm, object.grid.voxel_count(), gripper.voxel_count(), correlator.padded_voxel_count(),
                    total / opts.repeats});
  }
  return rows;
}

/// Least-squares slope of log(mean_s) against log(padded_voxels).
inline double log_log_slope(const std::vector<BenchRow>& rows) {
  if (rows.size() < 2) throw Error(Errc::InvalidArgument, "slope needs two rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    const double x = std::log(static_cast<double>(r.padded_voxels));
    const double y = std::log(r.mean_s);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "res_cm,object_voxels,gripper_voxels,padded_voxels,mean_s\n";
  for (const auto& r : rows) {
    out << r.res_cm << ',' << r.object_voxels << ',' << r.gripper_voxels << ',' << r.padded_voxels << ',' << r.mean_s
        << '\n';
  }
}

}  // namespace grasp
