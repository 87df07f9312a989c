#pragma once

#include "grasp/error.hpp"
#include "grasp/geometry.hpp"
#include "grasp/grasp_models.hpp"
#include "grasp/normal_histogram.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace grasp {

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-axis sweep limits. Defaults: roll and yaw over the full circle, pitch
/// from straight down (-pi/2) to 30 degrees up.
struct OrientationRanges {
  AngleRange roll{0.0, kTwoPi};
  AngleRange pitch{-kPi / 2.0, kPi / 6.0};
  AngleRange yaw{0.0, kTwoPi};
};

/// lo, lo+step, ... <= hi. A sample landing a full turn after `lo` duplicates
/// `lo` and is dropped.
inline std::vector<double> axis_samples(const AngleRange& range, double step) {
  if (!(step > 0.0)) throw Error(Errc::InvalidArgument, "orientation step must be positive");
  if (range.hi < range.lo) throw Error(Errc::InvalidArgument, "angle range has hi < lo");
  const auto n = static_cast<std::size_t>(std::floor((range.hi - range.lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = range.lo + static_cast<double>(i) * step;
    if (i > 0 && v >= range.lo + kTwoPi - 1e-9) break;
    out.push_back(v);
  }
  return out;
}

/// Cartesian product ordered roll-major, then pitch, then yaw.
inline std::vector<EulerRotation> enumerate_orientations(const OrientationRanges& ranges, double step) {
  const auto rolls = axis_samples(ranges.roll, step);
  const auto pitches = axis_samples(ranges.pitch, step);
  const auto yaws = axis_samples(ranges.yaw, step);
  std::vector<EulerRotation> out;
  out.reserve(rolls.size() * pitches.size() * yaws.size());
  for (double r : rolls)
    for (double p : pitches)
      for (double y : yaws) out.push_back(EulerRotation::from_angles(r, p, y));
  return out;
}

struct OrientationMatch {
  bool matched = false;
  double rank = 0.0;
};

/// Stage-1 score of one gripper orientation against H_o.
///
/// Each inverted contact normal is rotated by R and binned. The orientation
/// matches when every bin the rotated gripper histogram occupies holds at
/// least as much object mass. A match scores the sum over contacts of
/// ln(H_o) at the contact's bin; a polar contact scores ln of its row's mass.
/// A match whose bins all hold exactly one normal scores 0 yet still counts
/// as matched.
inline OrientationMatch match_orientation(const NormalHistogram& object, std::span<const Vec3> contact_normals,
                                          const EulerRotation& rotation) {
  std::map<std::pair<int, int>, double> gripper;
  std::vector<BinRef> refs;
  refs.reserve(contact_normals.size());
  for (const Vec3& n : contact_normals) {
    const BinRef ref = object.locate(rotation.matrix * (-n));
    refs.push_back(ref);
    if (ref.whole_row()) {
      const double share = 1.0 / object.azimuth_bins();
      for (int a = 0; a < object.azimuth_bins(); ++a) gripper[{ref.elevation, a}] += share;
    } else {
      gripper[{ref.elevation, ref.azimuth}] += 1.0;
    }
  }
  for (const auto& [bin, weight] : gripper) {
    if (object.at(bin.first, bin.second) + 1e-9 < weight) return {};
  }
  OrientationMatch m{true, 0.0};
  for (const BinRef& ref : refs) {
    m.rank += std::log(ref.whole_row() ? object.row_mass(ref.elevation) : object.at(ref.elevation, ref.azimuth));
  }
  return m;
}

inline double rank_orientation(const NormalHistogram& object, std::span<const Vec3> contact_normals,
                               const EulerRotation& rotation, double gripper_bin_size) {
  if (std::abs(object.bin_size() - gripper_bin_size) > 1e-12) {
    throw Error(Errc::BinSizeMismatch, "object and gripper histograms use different bin sizes");
  }
  return match_orientation(object, contact_normals, rotation).rank;
}

inline double rank_orientation(const NormalHistogram& object, std::span<const Vec3> contact_normals,
                               const EulerRotation& rotation) {
  return rank_orientation(object, contact_normals, rotation, object.bin_size());
}

inline std::vector<Vec3> contact_normals(const GraspTypeModel& model) {
  std::vector<Vec3> out;
  for (const auto& c : model.finger_contacts) out.push_back(c.contact_normal);
  return out;
}

/// H_r over the (roll, pitch, yaw) sample grid.
class RankHistogram {
 public:
  RankHistogram() = default;

  RankHistogram(std::vector<double> rolls, std::vector<double> pitches, std::vector<double> yaws, double step)
      : rolls_(std::move(rolls)), pitches_(std::move(pitches)), yaws_(std::move(yaws)), step_(step) {
    entries_.resize(rolls_.size() * pitches_.size() * yaws_.size());
  }

  double step() const { return step_; }
  std::array<std::size_t, 3> dims() const { return {rolls_.size(), pitches_.size(), yaws_.size()}; }
  std::size_t size() const { return entries_.size(); }

  std::size_t flat(std::size_t r, std::size_t p, std::size_t y) const {
    return (r * pitches_.size() + p) * yaws_.size() + y;
  }

  std::array<std::size_t, 3> unflat(std::size_t i) const {
    const std::size_t y = i % yaws_.size();
    const std::size_t p = (i / yaws_.size()) % pitches_.size();
    return {i / (yaws_.size() * pitches_.size()), p, y};
  }

  EulerRotation rotation(std::size_t i) const {
    const auto [r, p, y] = unflat(i);
    return EulerRotation::from_angles(rolls_[r], pitches_[p], yaws_[y]);
  }

  OrientationMatch& entry(std::size_t i) { return entries_[i]; }
  const OrientationMatch& entry(std::size_t i) const { return entries_[i]; }
  double rank(std::size_t r, std::size_t p, std::size_t y) const { return entries_[flat(r, p, y)].rank; }

  const std::vector<double>& rolls() const { return rolls_; }
  const std::vector<double>& pitches() const { return pitches_; }
  const std::vector<double>& yaws() const { return yaws_; }

  std::size_t matched_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](const OrientationMatch& m) { return m.matched; }));
  }

  /// One line per orientation: indices, angles (rad), matched flag, rank.
  void dump(std::ostream& out) const {
    std::string buf = "# rank_histogram roll_idx pitch_idx yaw_idx roll pitch yaw matched rank\n";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto [r, p, y] = unflat(i);
      buf += std::to_string(r) + ' ' + std::to_string(p) + ' ' + std::to_string(y) + ' ';
      detail::append_number(buf, rolls_[r]);
      buf += ' ';
      detail::append_number(buf, pitches_[p]);
      buf += ' ';
      detail::append_number(buf, yaws_[y]);
      buf += entries_[i].matched ? " 1 " : " 0 ";
      detail::append_number(buf, entries_[i].rank);
      buf += '\n';
    }
    out << buf;
  }

 private:
  std::vector<double> rolls_, pitches_, yaws_;
  double step_ = 0.0;
  std::vector<OrientationMatch> entries_;
};

inline RankHistogram build_rank_histogram(const NormalHistogram& object, const GraspTypeModel& model,
                                          const OrientationRanges& ranges, double step) {
  RankHistogram hr(axis_samples(ranges.roll, step), axis_samples(ranges.pitch, step), axis_samples(ranges.yaw, step),
                   step);
  const auto normals = contact_normals(model);
  for (std::size_t i = 0; i < hr.size(); ++i) hr.entry(i) = match_orientation(object, normals, hr.rotation(i));
  return hr;
}

struct RankedOrientation {
  EulerRotation rotation;
  double rank = 0.0;
  std::array<std::size_t, 3> index{};
};

/// Matched orientations by descending rank; ties keep (roll, pitch, yaw) index order.
inline std::vector<RankedOrientation> select_orientations(const RankHistogram& hr) {
  std::vector<RankedOrientation> out;
  for (std::size_t i = 0; i < hr.size(); ++i) {
    if (hr.entry(i).matched) out.push_back({hr.rotation(i), hr.entry(i).rank, hr.unflat(i)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedOrientation& a, const RankedOrientation& b) { return a.rank > b.rank; });
  return out;
}

}  // namespace grasp
