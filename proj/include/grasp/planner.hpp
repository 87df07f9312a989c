#pragma once

#include "grasp/cloud.hpp"
#include "grasp/correlator.hpp"
#include "grasp/error.hpp"
#include "grasp/geometry.hpp"
#include "grasp/grasp_models.hpp"
#include "grasp/normal_histogram.hpp"
#include "grasp/orientation_ranker.hpp"
#include "grasp/verifier.hpp"
#include "grasp/voxel_grid.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace grasp {

struct PlannerConfig {
  double voxel_res = 0.015;
  double bin_size = kPi / 6.0;
  double orientation_step = kPi / 6.0;
  OrientationRanges orientation_ranges;
  std::optional<Aabb> object_box;  // nullopt: auto_object_box
  std::size_t max_candidates_per_orientation = 32;
  std::optional<double> verification_threshold;  // nullopt: cos(bin_size / 2)
  double gripper_grid_edge = 0.30;
  unsigned threads = 0;  // 0: hardware concurrency
  bool verify_full_cloud = false;
  std::optional<double> time_budget_s;

  double threshold() const { return verification_threshold.value_or(default_threshold(bin_size)); }
};

inline void validate(const PlannerConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidArgument, what); };
  if (!(cfg.voxel_res > 0.0) || !std::isfinite(cfg.voxel_res)) fail("voxel_res must be positive");
  if (!(cfg.bin_size > 0.0) || cfg.bin_size > kPi) fail("bin_size must lie in (0, pi]");
  if (!(cfg.orientation_step > 0.0)) fail("orientation_step must be positive");
  if (!(cfg.gripper_grid_edge > 0.0)) fail("gripper grid edge must be positive");
  const double t = cfg.threshold();
  if (!(t > 0.0) || t > 1.0) fail("verification threshold must lie in (0, 1]");
  if (cfg.object_box && (cfg.object_box->extent().array() <= 0.0).any()) fail("object box must have positive extent");
  if (cfg.time_budget_s && !(*cfg.time_budget_s > 0.0)) fail("time budget must be positive");
}

struct StageStats {
  std::size_t orientations_enumerated = 0;
  std::size_t stage1_survivors = 0;
  std::size_t correlations_run = 0;
  std::size_t orientations_with_candidates = 0;
  std::size_t orientations_with_poses = 0;
  std::size_t candidates = 0;
  std::size_t candidates_examined = 0;
  std::size_t verified = 0;
  std::size_t rejected = 0;
  bool budget_exhausted = false;
};

struct StageTimings {
  double histograms_s = 0.0;
  double correlation_s = 0.0;
  double verification_s = 0.0;
  double total_s = 0.0;
};

struct ModelPlan {
  std::string grasp_type;
  int contact_count = 0;
  std::vector<GraspPose> poses;
  StageStats stats;
  StageTimings timings;
};

struct GraspPlanResult {
  std::vector<ModelPlan> models;
  std::size_t cloud_points = 0;
  std::size_t working_points = 0;
  Aabb object_box;
  Vec3i object_dims = Vec3i::Zero();
  double setup_s = 0.0;

  std::size_t pose_count() const {
    std::size_t n = 0;
    for (const auto& m : models) n += m.poses.size();
    return n;
  }
  const ModelPlan* find(const std::string& grasp_type) const {
    for (const auto& m : models)
      if (m.grasp_type == grasp_type) return &m;
    return nullptr;
  }
};

/// World-frame approach direction of a pose.
inline Vec3 approach_axis(const GraspPose& pose, const GraspTypeModel& model) {
  return pose.rotation.matrix * model.approach_axis;
}

/// Where the fingers close, in world coordinates.
inline Vec3 grasp_center_world(const GraspPose& pose, const GraspTypeModel& model) {
  return pose.position + pose.rotation.matrix * grasp_center(model);
}

/// Closing direction of a two-finger model in world coordinates.
inline Vec3 closing_axis(const GraspPose& pose, const GraspTypeModel& model) {
  if (model.finger_contacts.size() < 2) throw Error(Errc::InvalidArgument, "closing axis needs two fingers");
  const Vec3 d = model.finger_contacts[1].origin - model.finger_contacts[0].origin;
  return (pose.rotation.matrix * d).normalized();
}

/// Cloud bounds plus at least one free cell per side, with faces on the
/// world lattice of spacing `res`. With an even gripper grid this puts every
/// candidate position on that lattice too.
inline Aabb auto_object_box(const OrientedCloud& cloud, double res) {
  const Aabb bounds = bounding_box(cloud);
  const Vec3 lo = ((bounds.min / res).array() - 1e-9).floor() - 1.0;
  const Vec3 hi = ((bounds.max / res).array() + 1e-9).ceil() + 1.0;
  return {lo * res, hi * res};
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct OrientationOutcome {
  bool ran = false;
  std::size_t candidates = 0;
  std::size_t examined = 0;
  std::size_t rejected = 0;
  std::vector<GraspPose> poses;
  double correlation_s = 0.0;
  double verification_s = 0.0;
  std::exception_ptr error;
};

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace detail

/// Runs both stages for every model. Poses come out grouped by model, each
/// group ordered by descending (stage-1 rank, correlation), then orientation
/// enumeration order, then candidate order.
inline GraspPlanResult plan_grasps(const OrientedCloud& cloud, const std::vector<GraspTypeModel>& models,
                                   const PlannerConfig& cfg) {
  using detail::Clock;
  validate(cfg);
  if (models.empty()) throw Error(Errc::InvalidArgument, "no grasp models given");
  for (const auto& m : models) validate(m);
  const auto t_setup = Clock::now();

  GraspPlanResult result;
  result.cloud_points = cloud.size();
  for (const auto& m : models) result.models.push_back({m.name, m.contact_count(), {}, {}, {}});
  if (cloud.empty()) return result;
  if (!cloud.has_normals()) throw Error(Errc::MissingNormals, "planning needs surface normals; estimate them first");

  const double res = cfg.voxel_res;
  const Vec3i g_dims = default_gripper_dims(res, cfg.gripper_grid_edge);
  const Aabb box = cfg.object_box.value_or(auto_object_box(cloud, res));
  result.object_box = box;

  OrientedCloud inside;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (box.contains(cloud.points[i])) inside.push_back(cloud.points[i], cloud.normals[i]);
  }
  const OrientedCloud working = downsample(inside, res, box.min);
  result.working_points = working.size();
  if (working.empty()) return result;

  const NormalHistogram h_o = build_object_histogram(working, cfg.bin_size);
  const ObjectGrid v_o = build_object_grid(working, box, res);
  result.object_dims = v_o.grid.dims();
  const FftCorrelator correlator(v_o.grid, g_dims);
  const NeighborIndex index = build_nn_index(cfg.verify_full_cloud ? inside : working);
  const VerifyOptions verify{cfg.threshold(), 2.0 * res, res / 2.0};
  result.setup_s = detail::seconds_since(t_setup);
  const auto deadline =
      cfg.time_budget_s ? std::optional(t_setup + std::chrono::duration_cast<Clock::duration>(
                                                      std::chrono::duration<double>(*cfg.time_budget_s)))
                        : std::nullopt;

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const GraspTypeModel& model = models[mi];
    ModelPlan& plan = result.models[mi];
    const auto t_model = Clock::now();

    const RankHistogram h_r = build_rank_histogram(h_o, model, cfg.orientation_ranges, cfg.orientation_step);
    const auto selected = select_orientations(h_r);
    plan.stats.orientations_enumerated = h_r.size();
    plan.stats.stage1_survivors = selected.size();
    plan.timings.histograms_s = detail::seconds_since(t_model);

    std::vector<detail::OrientationOutcome> outcomes(selected.size());
    std::atomic<bool> out_of_time{false};
    detail::parallel_for(selected.size(), cfg.threads, [&](std::size_t k) {
      auto& out = outcomes[k];
      if (deadline && (out_of_time || Clock::now() > *deadline)) {
        out_of_time = true;
        return;
      }
      try {
        const auto& ro = selected[k];
        const auto t0 = Clock::now();
        const VoxelGrid v_g = rasterize_gripper(model, ro.rotation, res, g_dims);
        const CorrelationVolume v_go = correlator.correlate(v_g);
        const auto cands = extract_candidates(v_go, model.contact_count(), ro.rotation, ro.rank, model.name);
        out.ran = true;
        out.candidates = cands.size();
        const auto t1 = Clock::now();
        out.correlation_s = std::chrono::duration<double>(t1 - t0).count();
        for (const auto& cand : cands) {
          if (out.poses.size() >= cfg.max_candidates_per_orientation) break;
          ++out.examined;
          auto verdict = verify_candidate(cand, model, index, verify);
          if (auto* pose = std::get_if<GraspPose>(&verdict)) {
            out.poses.push_back(std::move(*pose));
          } else {
            ++out.rejected;
          }
        }
        out.verification_s = detail::seconds_since(t1);
      } catch (...) {
        out.error = std::current_exception();
      }
    });

    for (auto& out : outcomes) {
      if (out.error) std::rethrow_exception(out.error);
      if (!out.ran) continue;
      ++plan.stats.correlations_run;
      plan.stats.candidates += out.candidates;
      plan.stats.candidates_examined += out.examined;
      plan.stats.rejected += out.rejected;
      plan.stats.verified += out.poses.size();
      if (out.candidates > 0) ++plan.stats.orientations_with_candidates;
      if (!out.poses.empty()) ++plan.stats.orientations_with_poses;
      plan.timings.correlation_s += out.correlation_s;
      plan.timings.verification_s += out.verification_s;
      for (auto& p : out.poses) plan.poses.push_back(std::move(p));
    }
    plan.stats.budget_exhausted = out_of_time;
    std::stable_sort(plan.poses.begin(), plan.poses.end(), [](const GraspPose& a, const GraspPose& b) {
      if (a.stage1_rank != b.stage1_rank) return a.stage1_rank > b.stage1_rank;
      return a.correlation > b.correlation;
    });
    plan.timings.total_s = detail::seconds_since(t_model);
  }
  return result;
}

inline nlohmann::ordered_json to_json(const Vec3& v) { return nlohmann::ordered_json::array({v.x(), v.y(), v.z()}); }

inline nlohmann::ordered_json to_json(const StageStats& s) {
  return {{"orientations_enumerated", s.orientations_enumerated},
          {"stage1_survivors", s.stage1_survivors},
          {"correlations_run", s.correlations_run},
          {"orientations_with_candidates", s.orientations_with_candidates},
          {"orientations_with_poses", s.orientations_with_poses},
          {"candidates", s.candidates},
          {"candidates_examined", s.candidates_examined},
          {"verified", s.verified},
          {"rejected", s.rejected},
          {"budget_exhausted", s.budget_exhausted}};
}

inline nlohmann::ordered_json to_json(const StageTimings& t) {
  return {{"histograms_s", t.histograms_s},
          {"correlation_s", t.correlation_s},
          {"verification_s", t.verification_s},
          {"total_s", t.total_s}};
}

/// Timings are left out unless asked for, so reruns serialize identically.
inline nlohmann::ordered_json to_json(const GraspPlanResult& result, bool with_timings = false) {
  using nlohmann::ordered_json;
  ordered_json poses = ordered_json::array();
  ordered_json stats = ordered_json::object();
  for (const auto& m : result.models) {
    for (const auto& p : m.poses) {
      poses.push_back({{"grasp_type", p.grasp_type},
                       {"position_m", to_json(p.position)},
                       {"euler_rad", ordered_json::array({p.rotation.roll, p.rotation.pitch, p.rotation.yaw})},
                       {"rank", p.stage1_rank},
                       {"correlation", p.correlation}});
    }
    ordered_json s = to_json(m.stats);
    s["poses"] = m.poses.size();
    if (with_timings) s["timings"] = to_json(m.timings);
    stats[m.grasp_type] = std::move(s);
  }
  ordered_json out;
  out["poses"] = std::move(poses);
  out["stats"] = {{"cloud_points", result.cloud_points},
                  {"working_points", result.working_points},
                  {"object_box_min", to_json(result.object_box.min)},
                  {"object_box_max", to_json(result.object_box.max)},
                  {"object_dims", ordered_json::array({result.object_dims.x(), result.object_dims.y(),
                                                       result.object_dims.z()})},
                  {"grasp_types", std::move(stats)}};
  if (with_timings) out["stats"]["setup_s"] = result.setup_s;
  return out;
}

}  // namespace grasp
