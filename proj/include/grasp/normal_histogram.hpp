#pragma once

#include "grasp/cloud.hpp"
#include "grasp/error.hpp"
#include "grasp/geometry.hpp"
#include "grasp/grasp_models.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace grasp {

struct SphericalAngles {
  double elevation = 0.0;  // [-pi/2, pi/2]
  double azimuth = 0.0;    // [0, 2pi)
};

enum class Pole { North, South };

inline constexpr double kPoleTolerance = 1e-9;
inline constexpr double kUnitTolerance = 1e-6;
// Values within this many bin widths below a bin edge snap up to the next bin,
// so rotated normals that land on an edge up to rounding bin consistently.
inline constexpr double kBinEdgeSnap = 1e-9;

inline void require_unit(const Vec3& n) {
  if (!is_finite(n) || std::abs(n.norm() - 1.0) > kUnitTolerance) {
    throw Error(Errc::NotUnitVector, "normal is not unit length");
  }
}

/// Elevation is measured from the equator (pi/2 - arccos(n_z)); azimuth is
/// atan2(n_y, n_x) folded into [0, 2pi). Normals at the poles have no azimuth.
inline std::variant<SphericalAngles, Pole> spherical_angles(const Vec3& n) {
  require_unit(n);
  if (n.z() >= 1.0 - kPoleTolerance) return Pole::North;
  if (n.z() <= -1.0 + kPoleTolerance) return Pole::South;
  SphericalAngles a;
  a.elevation = kPi / 2.0 - std::acos(std::clamp(n.z(), -1.0, 1.0));
  a.azimuth = std::atan2(n.y(), n.x());
  if (a.azimuth < 0.0) a.azimuth += kTwoPi;
  if (a.azimuth >= kTwoPi) a.azimuth -= kTwoPi;
  return a;
}

/// Bin reference; azimuth == kWholeRow addresses every azimuth bin of a polar row.
struct BinRef {
  static constexpr int kWholeRow = -1;
  int elevation = 0;
  int azimuth = 0;

  bool whole_row() const { return azimuth == kWholeRow; }
  friend bool operator==(const BinRef&, const BinRef&) = default;
};

/// Elevation x azimuth counts of surface normals over uniform angular bins.
class NormalHistogram {
 public:
  NormalHistogram() = default;

  explicit NormalHistogram(double bin_size) : bin_size_(bin_size) {
    if (!(bin_size > 0.0) || bin_size > kPi) {
      throw Error(Errc::InvalidArgument, "bin size must lie in (0, pi]");
    }
    elevation_bins_ = std::max(1, static_cast<int>(std::lround(kPi / bin_size)));
    azimuth_bins_ = std::max(1, static_cast<int>(std::lround(kTwoPi / bin_size)));
    counts_.assign(static_cast<std::size_t>(elevation_bins_ * azimuth_bins_), 0.0);
  }

  double bin_size() const { return bin_size_; }
  int elevation_bins() const { return elevation_bins_; }
  int azimuth_bins() const { return azimuth_bins_; }

  double at(int elevation, int azimuth) const { return counts_[index(elevation, azimuth)]; }

  int elevation_index(double elevation) const {
    const int i = static_cast<int>(std::floor((elevation + kPi / 2.0) / bin_size_ + kBinEdgeSnap));
    return std::clamp(i, 0, elevation_bins_ - 1);
  }

  int azimuth_index(double azimuth) const {
    const double scaled = azimuth / bin_size_ + kBinEdgeSnap;
    if (azimuth + kBinEdgeSnap * bin_size_ >= kTwoPi) return 0;
    return std::clamp(static_cast<int>(std::floor(scaled)), 0, azimuth_bins_ - 1);
  }

  BinRef locate(const Vec3& n) const {
    const auto angles = spherical_angles(n);
    if (const Pole* pole = std::get_if<Pole>(&angles)) {
      return {*pole == Pole::North ? elevation_bins_ - 1 : 0, BinRef::kWholeRow};
    }
    const auto& a = std::get<SphericalAngles>(angles);
    return {elevation_index(a.elevation), azimuth_index(a.azimuth)};
  }

  /// Adds `weight` at the bin of `n`. A polar normal spreads the weight evenly
  /// over its whole row (weight * bin_size / 2pi per bin when the row divides evenly).
  void insert(const Vec3& n, double weight = 1.0) { add(locate(n), weight); }

  void add(const BinRef& bin, double weight) {
    if (bin.whole_row()) {
      const double share = weight / azimuth_bins_;
      for (int a = 0; a < azimuth_bins_; ++a) counts_[index(bin.elevation, a)] += share;
    } else {
      counts_[index(bin.elevation, bin.azimuth)] += weight;
    }
  }

  double total_mass() const {
    double sum = 0.0;
    for (double c : counts_) sum += c;
    return sum;
  }

  std::size_t nonzero_bins() const {
    return static_cast<std::size_t>(std::count_if(counts_.begin(), counts_.end(), [](double c) { return c != 0.0; }));
  }

  double row_mass(int elevation) const {
    double sum = 0.0;
    for (int a = 0; a < azimuth_bins_; ++a) sum += at(elevation, a);
    return sum;
  }

  const std::vector<double>& counts() const { return counts_; }

  /// Text matrix: a header comment, then one line per elevation row (south
  /// pole first) with azimuth columns.
  void dump(std::ostream& out) const {
    std::string buf = "# normal_histogram bin_size ";
    detail::append_number(buf, bin_size_);
    buf += " elevation_bins " + std::to_string(elevation_bins_) + " azimuth_bins " +
           std::to_string(azimuth_bins_) + "\n";
    for (int e = 0; e < elevation_bins_; ++e) {
      for (int a = 0; a < azimuth_bins_; ++a) {
        if (a) buf += ' ';
        detail::append_number(buf, at(e, a));
      }
      buf += '\n';
    }
    out << buf;
  }

  friend bool operator==(const NormalHistogram&, const NormalHistogram&) = default;

 private:
  std::size_t index(int elevation, int azimuth) const {
    return static_cast<std::size_t>(elevation * azimuth_bins_ + azimuth);
  }

  double bin_size_ = 0.0;
  int elevation_bins_ = 0;
  int azimuth_bins_ = 0;
  std::vector<double> counts_;
};

inline NormalHistogram build_object_histogram(const OrientedCloud& cloud, double bin_size) {
  NormalHistogram hist(bin_size);
  if (cloud.empty()) return hist;
  if (!cloud.has_normals()) throw Error(Errc::MissingNormals, "object histogram needs normals");
  for (const Vec3& n : cloud.normals) hist.insert(n);
  return hist;
}

/// H_g: each finger contact contributes its inverted normal with weight 1.
inline NormalHistogram build_gripper_histogram(const GraspTypeModel& model, double bin_size) {
  NormalHistogram hist(bin_size);
  for (const auto& c : model.finger_contacts) hist.insert(-c.contact_normal);
  return hist;
}

}  // namespace grasp
