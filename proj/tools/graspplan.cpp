// graspplan: plan, bench, scene and inspect subcommands.

#include "grasp/grasp.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace grasp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitInternal = 4;

constexpr double kDeg = kPi / 180.0;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::BinSizeMismatch:
    case Errc::ModelExceedsGrid:
    case Errc::ResolutionMismatch:
      return kExitConfig;
    default:
      return kExitInput;
  }
}

// Writes to a sibling temp file and renames, so a failed run leaves nothing behind.
void write_atomically(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    out << content;
    if (!out) throw Error(Errc::Io, "write failed for " + path);
  }
  fs::rename(tmp, target);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_atomically(path, content);
  }
}

struct RangeDeg {
  std::vector<double> roll{0.0, 360.0};
  std::vector<double> pitch{-90.0, 30.0};
  std::vector<double> yaw{0.0, 360.0};
};

AngleRange to_range(const std::vector<double>& deg) { return {deg.at(0) * kDeg, deg.at(1) * kDeg}; }

std::vector<GraspTypeModel> load_models(const std::vector<std::string>& names, const std::vector<std::string>& files) {
  std::vector<GraspTypeModel> models;
  for (const auto& n : names) models.push_back(builtin_model(n));
  for (const auto& f : files) models.push_back(read_model_file(f));
  if (models.empty()) {
    for (const char* n : {"lateral", "tripodal", "power"}) models.push_back(builtin_model(n));
  }
  return models;
}

OrientedCloud load_oriented(const std::string& path, std::size_t k, const std::vector<double>& viewpoint) {
  OrientedCloud cloud = read_cloud_file(path);
  if (cloud.needs_normals()) {
    cloud = estimate_normals(cloud, k, Vec3(viewpoint.at(0), viewpoint.at(1), viewpoint.at(2)));
  }
  return cloud;
}

std::string marker_color(const std::string& type) {
  if (type == "lateral") return "255 0 255";
  if (type == "tripodal") return "255 255 0";
  if (type == "power") return "255 0 0";
  return "255 255 255";
}

// One arrow per pose: tail behind the gripper frame, head at the grasp center.
std::string markers_ply(const GraspPlanResult& result, const std::vector<GraspTypeModel>& models) {
  std::ostringstream v;
  std::size_t count = 0;
  for (std::size_t m = 0; m < result.models.size(); ++m) {
    const std::string color = marker_color(result.models[m].grasp_type);
    for (const auto& pose : result.models[m].poses) {
      const Vec3 head = grasp_center_world(pose, models[m]);
      const Vec3 tail = pose.position - 0.05 * approach_axis(pose, models[m]);
      for (const Vec3& p : {tail, head}) v << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << color << '\n';
      ++count;
    }
  }
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << 2 * count
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         "element edge "
      << count << "\nproperty int vertex1\nproperty int vertex2\nend_header\n"
      << v.str();
  for (std::size_t i = 0; i < count; ++i) out << 2 * i << ' ' << 2 * i + 1 << '\n';
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grasp pose planner over oriented point clouds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "graspplan 1.0");

  // plan
  auto* plan = app.add_subcommand("plan", "plan grasp poses for a cloud");
  std::string plan_cloud, plan_out, plan_markers;
  std::vector<std::string> grasp_names, model_files;
  double res_cm = 1.5, step_deg = 30.0, bin_deg = 30.0, grid_edge_cm = 30.0;
  double threshold = 0.0, time_budget = 0.0;
  std::size_t cap = 32, normal_k = 10;
  unsigned threads = 0;
  bool full_cloud = false, paper_defaults = false, with_timings = false;
  RangeDeg ranges;
  std::vector<double> box, viewpoint{0.0, 0.0, 10.0};
  plan->add_option("cloud", plan_cloud, "input cloud (.ply or .xyzn)")->required();
  plan->add_option("-o,--output", plan_out, "result JSON path ('-' for stdout)")->default_str("-");
  plan->add_option("--markers", plan_markers, "colored arrow markers as PLY");
  plan->add_option("--grasp", grasp_names, "built-in grasp types")
      ->delimiter(',')
      ->check(CLI::IsMember({"lateral", "tripodal", "power"}));
  plan->add_option("--model", model_files, "grasp model files");
  auto* o_res = plan->add_option("--res-cm", res_cm, "voxel edge in cm")->check(CLI::PositiveNumber);
  auto* o_step = plan->add_option("--step-deg", step_deg, "orientation step in degrees")->check(CLI::PositiveNumber);
  auto* o_bin = plan->add_option("--bin-deg", bin_deg, "normal histogram bin in degrees")->check(CLI::Range(1e-6, 180.0));
  auto* o_roll = plan->add_option("--roll-range", ranges.roll, "roll lo hi (deg)")->expected(2);
  auto* o_pitch = plan->add_option("--pitch-range", ranges.pitch, "pitch lo hi (deg)")->expected(2);
  auto* o_yaw = plan->add_option("--yaw-range", ranges.yaw, "yaw lo hi (deg)")->expected(2);
  auto* o_grid = plan->add_option("--gripper-grid-cm", grid_edge_cm, "gripper grid edge in cm")->check(CLI::PositiveNumber);
  plan->add_option("--box", box, "object box xmin ymin zmin xmax ymax zmax (m)")->expected(6);
  plan->add_option("--cap", cap, "verified poses kept per orientation")->check(CLI::PositiveNumber);
  plan->add_option("--threshold", threshold, "verification inner-product threshold")->check(CLI::Range(1e-12, 1.0));
  plan->add_option("--threads", threads, "worker threads (0 = all cores)");
  plan->add_option("--time-budget", time_budget, "stop scheduling orientations after this many seconds")
      ->check(CLI::PositiveNumber);
  plan->add_flag("--full-cloud-verify", full_cloud, "verify against the full-resolution cloud");
  plan->add_option("--normal-k", normal_k, "neighbors for normal estimation when the cloud has none")
      ->check(CLI::PositiveNumber);
  plan->add_option("--viewpoint", viewpoint, "sensor position for normal orientation")->expected(3);
  plan->add_flag("--timings", with_timings, "include stage timings in the result");
  auto* o_paper = plan->add_flag("--paper-defaults", paper_defaults,
                                 "1.5 cm voxels, 30 deg steps and bins, full sweep ranges, 30 cm gripper grid");
  for (auto* o : {o_res, o_step, o_bin, o_roll, o_pitch, o_yaw, o_grid}) o_paper->excludes(o);

  // bench
  auto* bench = app.add_subcommand("bench", "time FFT correlation over a resolution sweep");
  std::vector<double> bench_res = default_bench_resolutions_cm();
  unsigned repeats = 3;
  std::vector<double> bench_extent{0.5, 0.6, 0.3};
  bench->add_option("--res-cm", bench_res, "resolutions in cm")->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--repeats", repeats, "timed correlations per resolution")->check(CLI::PositiveNumber);
  bench->add_option("--object-extent", bench_extent, "object box edge lengths (m)")->expected(3);

  // scene
  auto* scene = app.add_subcommand("scene", "generate, scan or merge clouds");
  std::string scene_spec, scene_out;
  std::vector<double> scan_views, scan_offset;
  std::vector<std::string> merge_inputs;
  double merge_res_cm = 0.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  auto* o_spec = scene->add_option("spec", scene_spec, "scene description file");
  scene->add_option("-o,--output", scene_out, "output cloud (.ply or .xyzn)")->required();
  scene->add_option("--viewpoint", scan_views, "scan position x y z (repeatable)")->expected(3)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  scene->add_option("--offset", scan_offset, "shift of the last scan, x y z (m)")->expected(3);
  auto* o_merge = scene->add_option("--merge", merge_inputs, "clouds to concatenate");
  scene->add_option("--res-cm", merge_res_cm, "downsample the output at this resolution")->check(CLI::PositiveNumber);
  scene->add_option("--seed", seed, "noise seed")->each([&](const std::string&) { seed_given = true; });
  o_spec->excludes(o_merge);

  // inspect
  auto* inspect = app.add_subcommand("inspect", "debug exports");
  std::string what, inspect_cloud, inspect_out, inspect_grasp = "lateral";
  std::vector<double> rpy_deg{0.0, 0.0, 0.0};
  double inspect_res_cm = 1.5, inspect_bin_deg = 30.0, inspect_step_deg = 30.0;
  int slice_axis = 2, slice_index = -1;
  inspect->add_option("what", what, "histogram | rank | gripper | slice | model")
      ->required()
      ->check(CLI::IsMember({"histogram", "rank", "gripper", "slice", "model"}));
  inspect->add_option("--cloud", inspect_cloud, "input cloud");
  inspect->add_option("--grasp", inspect_grasp, "built-in grasp type")
      ->check(CLI::IsMember({"lateral", "tripodal", "power"}));
  inspect->add_option("--rpy", rpy_deg, "roll pitch yaw (deg)")->expected(3);
  inspect->add_option("--res-cm", inspect_res_cm, "voxel edge in cm")->check(CLI::PositiveNumber);
  inspect->add_option("--bin-deg", inspect_bin_deg, "histogram bin in degrees")->check(CLI::Range(1e-6, 180.0));
  inspect->add_option("--step-deg", inspect_step_deg, "orientation step in degrees")->check(CLI::PositiveNumber);
  inspect->add_option("--axis", slice_axis, "slice axis (0, 1, 2)")->check(CLI::Range(0, 2));
  inspect->add_option("--index", slice_index, "slice index (default: middle)");
  inspect->add_option("-o,--output", inspect_out, "output path ('-' for stdout)")->default_str("-");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*plan) {
      PlannerConfig cfg;
      if (paper_defaults) {
        res_cm = 1.5;
        step_deg = 30.0;
        bin_deg = 30.0;
        ranges = RangeDeg{};
        grid_edge_cm = 30.0;
      }
      cfg.voxel_res = res_cm / 100.0;
      cfg.orientation_step = step_deg * kDeg;
      cfg.bin_size = bin_deg * kDeg;
      cfg.orientation_ranges = {to_range(ranges.roll), to_range(ranges.pitch), to_range(ranges.yaw)};
      cfg.gripper_grid_edge = grid_edge_cm / 100.0;
      cfg.max_candidates_per_orientation = cap;
      cfg.threads = threads;
      cfg.verify_full_cloud = full_cloud;
      if (threshold > 0.0) cfg.verification_threshold = threshold;
      if (time_budget > 0.0) cfg.time_budget_s = time_budget;
      if (!box.empty()) cfg.object_box = Aabb{Vec3(box[0], box[1], box[2]), Vec3(box[3], box[4], box[5])};
      validate(cfg);
      const auto models = load_models(grasp_names, model_files);
      const OrientedCloud cloud = load_oriented(plan_cloud, normal_k, viewpoint);
      const GraspPlanResult result = plan_grasps(cloud, models, cfg);
      const std::string json = to_json(result, with_timings).dump(2) + "\n";
      if (!plan_markers.empty()) write_atomically(plan_markers, markers_ply(result, models));
      write_output(plan_out, json);
      for (const auto& m : result.models) {
        std::cerr << m.grasp_type << ": " << m.poses.size() << " poses, " << m.stats.correlations_run << "/"
                  << m.stats.orientations_enumerated << " orientations correlated, " << m.timings.total_s << " s\n";
      }
    } else if (*bench) {
      BenchOptions opts;
      opts.repeats = repeats;
      opts.object_extent = Vec3(bench_extent[0], bench_extent[1], bench_extent[2]);
      const auto rows = run_bench(bench_res, opts);
      write_bench_csv(std::cout, rows);
      if (rows.size() >= 2) std::cerr << "log-log slope: " << log_log_slope(rows) << "\n";
    } else if (*scene) {
      if (scan_views.size() % 3 != 0) throw Error(Errc::InvalidArgument, "--viewpoint takes x y z triples");
      OrientedCloud cloud;
      if (!merge_inputs.empty()) {
        for (const auto& path : merge_inputs) cloud = concatenate(cloud, read_cloud_file(path));
      } else {
        if (scene_spec.empty()) throw Error(Errc::InvalidArgument, "scene needs a spec file or --merge inputs");
        SceneSpec spec = read_scene_file(scene_spec);
        if (seed_given) spec.seed = seed;
        const OrientedCloud full = gen_scene(spec);
        if (scan_views.empty()) {
          cloud = full;
        } else {
          std::vector<OrientedCloud> scans;
          for (std::size_t i = 0; i < scan_views.size(); i += 3) {
            scans.push_back(partial_scan(full, Vec3(scan_views[i], scan_views[i + 1], scan_views[i + 2])));
          }
          const Vec3 offset = scan_offset.empty() ? Vec3::Zero() : Vec3(scan_offset[0], scan_offset[1], scan_offset[2]);
          cloud = perturb_registration(scans, offset, false);
        }
      }
      if (merge_res_cm > 0.0) cloud = downsample(cloud, merge_res_cm / 100.0);
      std::ostringstream out;
      write_cloud(out, cloud, format_for_path(scene_out));
      write_atomically(scene_out, out.str());
      std::cerr << cloud.size() << " points\n";
    } else if (*inspect) {
      const double res = inspect_res_cm / 100.0;
      const GraspTypeModel model = builtin_model(inspect_grasp);
      const EulerRotation rot = EulerRotation::from_angles(rpy_deg[0] * kDeg, rpy_deg[1] * kDeg, rpy_deg[2] * kDeg);
      auto need_cloud = [&]() {
        if (inspect_cloud.empty()) throw Error(Errc::InvalidArgument, "inspect " + what + " needs --cloud");
        return load_oriented(inspect_cloud, 10, {0.0, 0.0, 10.0});
      };
      std::ostringstream out;
      if (what == "histogram") {
        build_object_histogram(need_cloud(), inspect_bin_deg * kDeg).dump(out);
      } else if (what == "rank") {
        const auto h_o = build_object_histogram(need_cloud(), inspect_bin_deg * kDeg);
        build_rank_histogram(h_o, model, OrientationRanges{}, inspect_step_deg * kDeg).dump(out);
      } else if (what == "gripper") {
        write_grid_ply(out, rasterize_gripper(model, rot, res, default_gripper_dims(res)));
      } else if (what == "slice") {
        const OrientedCloud cloud = need_cloud();
        const ObjectGrid object = build_object_grid(cloud, auto_object_box(cloud, res), res);
        const CorrelationVolume v =
            xcorr_fft(rasterize_gripper(model, rot, res, default_gripper_dims(res)), object.grid);
        write_slice_csv(out, v, slice_axis, slice_index >= 0 ? slice_index : v.dims()[slice_axis] / 2);
      } else {
        write_model(out, model);
      }
      write_output(inspect_out, out.str());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
