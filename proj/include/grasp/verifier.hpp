#pragma once

#include "grasp/cloud.hpp"
#include "grasp/correlator.hpp"
#include "grasp/error.hpp"
#include "grasp/geometry.hpp"
#include "grasp/grasp_models.hpp"
#include "grasp/kd_tree.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace grasp {

/// Exact nearest-neighbor lookup over an oriented cloud.
class NeighborIndex {
 public:
  explicit NeighborIndex(const OrientedCloud& cloud) : tree_(cloud.points), normals_(cloud.normals) {}

  bool has_normals() const { return normals_.size() == tree_.size(); }
  std::size_t size() const { return tree_.size(); }
  Neighbor nearest(const Vec3& q) const { return tree_.nearest(q); }
  const Vec3& point(std::size_t i) const { return tree_.point(i); }
  const Vec3& normal(std::size_t i) const { return normals_[i]; }

 private:
  KdTree tree_;
  std::vector<Vec3> normals_;
};

inline NeighborIndex build_nn_index(const OrientedCloud& cloud) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "nearest-neighbor index over an empty cloud");
  return NeighborIndex(cloud);
}

/// One histogram bin's worth of angular slack: cos(bin_size / 2).
inline double default_threshold(double bin_size) {
  if (!(bin_size > 0.0) || bin_size > kPi) throw Error(Errc::InvalidArgument, "bin size must lie in (0, pi]");
  return std::cos(bin_size / 2.0);
}

struct ContactMatch {
  Vec3 contact_point = Vec3::Zero();  // world
  Vec3 surface_point = Vec3::Zero();
  double inner_product = 0.0;
  double distance = 0.0;
};

struct GraspPose {
  std::string grasp_type;
  Vec3 position = Vec3::Zero();  // gripper frame {g} in world
  EulerRotation rotation;
  double stage1_rank = 0.0;
  double correlation = 0.0;
  std::vector<ContactMatch> contact_matches;
};

struct Rejection {
  enum class Reason { NoSurfaceNearby, NormalMismatch };
  std::size_t contact = 0;
  Reason reason = Reason::NormalMismatch;
  double inner_product = 0.0;
  double distance = 0.0;
};

struct VerifyOptions {
  double threshold = 0.0;
  double max_match_distance = std::numeric_limits<double>::infinity();
  double sample_step = 0.005;
};

/// Checks each counted contact against the surface: the positive-segment
/// sample nearest to any cloud point picks the matched surface point, whose
/// normal must satisfy n_surface . (R * -n_contact) >= threshold.
inline std::variant<GraspPose, Rejection> verify_candidate(const GraspCandidate& cand, const GraspTypeModel& model,
                                                           const NeighborIndex& index, const VerifyOptions& opts) {
  if (!(opts.threshold > 0.0) || opts.threshold > 1.0) {
    throw Error(Errc::InvalidArgument, "verification threshold must lie in (0, 1]");
  }
  if (!index.has_normals()) throw Error(Errc::MissingNormals, "verification needs surface normals");
  const Mat3& r = cand.rotation.matrix;
  GraspPose pose{cand.grasp_type, cand.position, cand.rotation, cand.stage1_rank, cand.correlation, {}};
  pose.contact_matches.reserve(model.finger_contacts.size());
  for (std::size_t c = 0; c < model.finger_contacts.size(); ++c) {
    const ContactVector& contact = model.finger_contacts[c];
    Neighbor best;
    Vec3 best_sample = Vec3::Zero();
    for (const Vec3& s : contact.positive_samples(opts.sample_step)) {
      const Vec3 w = cand.position + r * s;
      const Neighbor nb = index.nearest(w);
      if (nb.squared_distance < best.squared_distance) {
        best = nb;
        best_sample = w;
      }
    }
    const double distance = std::sqrt(best.squared_distance);
    if (!(distance <= opts.max_match_distance)) {
      return Rejection{c, Rejection::Reason::NoSurfaceNearby, 0.0, distance};
    }
    const double ip = index.normal(best.index).dot(r * (-contact.contact_normal));
    if (ip < opts.threshold) return Rejection{c, Rejection::Reason::NormalMismatch, ip, distance};
    pose.contact_matches.push_back({best_sample, index.point(best.index), ip, distance});
  }
  return pose;
}

}  // namespace grasp
