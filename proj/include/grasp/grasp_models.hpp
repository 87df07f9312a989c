#pragma once

#include "grasp/cloud.hpp"
#include "grasp/error.hpp"
#include "grasp/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace grasp {

/// A finger pad's closing travel in the gripper frame {g}. The positive
/// segment runs from `origin` along `direction`; the constraint segment
/// extends behind the origin, opposite to `direction`.
struct ContactVector {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double positive_length = 0.0;
  double negative_length = 0.0;
  Vec3 contact_normal = Vec3::UnitX();

  /// Midpoints of equal subdivisions no longer than `step`; endpoints are
  /// never sampled so segments ending on a cell face do not bleed over it.
  static std::vector<double> sample_params(double length, double step) {
    std::vector<double> t;
    if (!(length > 0.0)) return t;
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / step - 1e-9)));
    t.reserve(n);
    for (std::size_t m = 0; m < n; ++m) t.push_back((static_cast<double>(m) + 0.5) * length / static_cast<double>(n));
    return t;
  }

  std::vector<Vec3> positive_samples(double step) const {
    std::vector<Vec3> out;
    for (double t : sample_params(positive_length, step)) out.push_back(origin + t * direction);
    return out;
  }

  std::vector<Vec3> negative_samples(double step) const {
    std::vector<Vec3> out;
    for (double t : sample_params(negative_length, step)) out.push_back(origin - t * direction);
    return out;
  }

  friend bool operator==(const ContactVector&, const ContactVector&) = default;
};

struct ConstraintBlock {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return ((p - center).cwiseAbs().array() <= half_extents.array()).all();
  }

  friend bool operator==(const ConstraintBlock&, const ConstraintBlock&) = default;
};

/// A grasp type: N counted finger contacts, an optional uncounted palm
/// vector, and constraint blocks, all expressed in {g}.
struct GraspTypeModel {
  std::string name;
  std::vector<ContactVector> finger_contacts;
  std::optional<ContactVector> palm_vector;
  std::vector<ConstraintBlock> constraint_blocks;
  Vec3 approach_axis = -Vec3::UnitX();

  int contact_count() const { return static_cast<int>(finger_contacts.size()); }

  /// Finger contacts followed by the palm vector, if any.
  std::vector<ContactVector> all_vectors() const {
    std::vector<ContactVector> v = finger_contacts;
    if (palm_vector) v.push_back(*palm_vector);
    return v;
  }

  friend bool operator==(const GraspTypeModel&, const GraspTypeModel&) = default;
};

inline void validate(const GraspTypeModel& model) {
  auto unit = [](const Vec3& v) { return is_finite(v) && std::abs(v.norm() - 1.0) <= 1e-6; };
  if (model.finger_contacts.empty()) throw Error(Errc::MalformedModel, model.name + ": no finger contacts");
  if (!unit(model.approach_axis)) throw Error(Errc::MalformedModel, model.name + ": approach axis not unit");
  auto check = [&](const ContactVector& c) {
    if (!unit(c.direction) || !unit(c.contact_normal)) {
      throw Error(Errc::MalformedModel, model.name + ": contact direction/normal not unit");
    }
    if (!(c.positive_length > 0.0) || c.negative_length < 0.0) {
      throw Error(Errc::MalformedModel, model.name + ": contact lengths out of range");
    }
  };
  for (const auto& c : model.finger_contacts) check(c);
  if (model.palm_vector) check(*model.palm_vector);
  for (const auto& b : model.constraint_blocks) {
    if (!(b.half_extents.array() > 0.0).all()) {
      throw Error(Errc::MalformedModel, model.name + ": constraint block half extents must be positive");
    }
  }
}

/// Point closest (least squares) to every finger closing line. Lines that
/// leave a direction unconstrained fall back to the mean contact origin.
inline Vec3 grasp_center(const GraspTypeModel& model) {
  Mat3 a = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  Vec3 mean = Vec3::Zero();
  for (const auto& c : model.finger_contacts) mean += c.origin;
  mean /= static_cast<double>(std::max<std::size_t>(1, model.finger_contacts.size()));
  constexpr double kPull = 1e-9;
  for (const auto& c : model.finger_contacts) {
    const Mat3 p = Mat3::Identity() - c.direction * c.direction.transpose();
    a += p;
    b += p * c.origin;
  }
  a += kPull * Mat3::Identity();
  b += kPull * mean;
  return a.ldlt().solve(b);
}

/// Geometry shared by the built-in grasp types, lengths in meters.
struct GraspModelParams {
  double positive_length = 0.045;
  double negative_length = 0.015;
  double finger_reach = 0.06;   // grasp axis to the start of each positive segment
  double grasp_depth = 0.06;    // palm to the grasp axis, along the approach
  double palm_gap = 0.015;      // palm to the front face of the wrist block
  double wrist_width = 0.12;
  double wrist_length = 0.10;
  double wrist_thickness = 0.12;
  double tripod_gap_1_deg = 135.0;  // thumb to first finger
  double tripod_gap_2_deg = 135.0;  // first to second finger; the third gap closes the circle
  double power_tilt_deg = 30.0;
  double grid = 0.005;              // origins and block geometry snap to this lattice
};

namespace detail {

inline double snap(double v, double grid) { return std::round(v / grid) / std::round(1.0 / grid); }

inline Vec3 snap(const Vec3& v, double grid) { return {snap(v.x(), grid), snap(v.y(), grid), snap(v.z(), grid)}; }

// Rounds away from zero so a snapped finger never sits closer to the grasp
// axis than requested.
inline double snap_outward(double v, double grid) {
  const double cells = std::ceil(std::abs(v) / grid - 1e-9);
  return std::copysign(cells / std::round(1.0 / grid), v);
}

inline Vec3 finger_origin(const Vec3& axis_point, const Vec3& offset, double grid) {
  return {snap(axis_point.x() + offset.x(), grid), snap_outward(offset.y(), grid), snap_outward(offset.z(), grid)};
}

// {g}: the gripper approaches along -x, the palm sits at the origin, the grasp
// axis crosses (-grasp_depth, 0, 0) and the wrist extends along +x.
inline Vec3 grasp_point(const GraspModelParams& p) { return {-snap(p.grasp_depth, p.grid), 0.0, 0.0}; }

inline ContactVector palm_vector(const GraspModelParams& p) {
  return {Vec3::Zero(), -Vec3::UnitX(), snap(p.positive_length, p.grid), snap(p.negative_length, p.grid),
          -Vec3::UnitX()};
}

inline ConstraintBlock wrist_block(const GraspModelParams& p) {
  const double half_len = snap(p.wrist_length / 2.0, p.grid);
  return {Vec3(snap(p.palm_gap + p.wrist_length / 2.0, p.grid), 0.0, 0.0),
          Vec3(half_len, snap(p.wrist_width / 2.0, p.grid), snap(p.wrist_thickness / 2.0, p.grid))};
}

// Radial finger at angle `theta` (about the approach axis, from +y) closing
// onto the grasp axis.
inline ContactVector radial_finger(const GraspModelParams& p, double theta) {
  const Vec3 axis_point = grasp_point(p);
  const Vec3 outward(0.0, std::cos(theta), std::sin(theta));
  const Vec3 origin = finger_origin(axis_point, p.finger_reach * outward, p.grid);
  Vec3 dir = axis_point - origin;
  dir.x() = 0.0;
  dir.normalize();
  return {origin, dir, snap(p.positive_length, p.grid), snap(p.negative_length, p.grid), dir};
}

}  // namespace detail

/// Parallel-jaw pinch: two distal pads closing along y.
inline GraspTypeModel lateral_model(const GraspModelParams& p = {}) {
  GraspTypeModel m;
  m.name = "lateral";
  m.finger_contacts = {detail::radial_finger(p, 0.0), detail::radial_finger(p, kPi)};
  m.palm_vector = detail::palm_vector(p);
  m.constraint_blocks = {detail::wrist_block(p)};
  return m;
}

/// Three fingertips around the grasp axis; gaps default to 135, 135 and 90 degrees.
inline GraspTypeModel tripodal_model(const GraspModelParams& p = {}) {
  const double g1 = p.tripod_gap_1_deg * kPi / 180.0;
  const double g2 = p.tripod_gap_2_deg * kPi / 180.0;
  if (!(g1 > 0.0 && g2 > 0.0 && g1 + g2 < kTwoPi)) {
    throw Error(Errc::InvalidArgument, "tripodal gaps must be positive and sum below 360 degrees");
  }
  GraspTypeModel m;
  m.name = "tripodal";
  m.finger_contacts = {detail::radial_finger(p, 0.0), detail::radial_finger(p, g1),
                       detail::radial_finger(p, g1 + g2)};
  m.palm_vector = detail::palm_vector(p);
  m.constraint_blocks = {detail::wrist_block(p)};
  return m;
}

/// Enclosing grasp: a proximal and a distal pad on each side of the closing
/// plane, pad normals canted by +-power_tilt toward and away from the palm.
/// No palm vector.
inline GraspTypeModel power_model(const GraspModelParams& p = {}) {
  const double tilt = p.power_tilt_deg * kPi / 180.0;
  const Vec3 axis_point = detail::grasp_point(p);
  GraspTypeModel m;
  m.name = "power";
  for (double side : {1.0, -1.0}) {
    for (double cant : {1.0, -1.0}) {  // +1 proximal (toward the palm), -1 distal
      const Vec3 outward(cant * std::sin(tilt), side * std::cos(tilt), 0.0);
      const Vec3 origin = detail::finger_origin(axis_point, p.finger_reach * outward, p.grid);
      m.finger_contacts.push_back({origin, -outward, detail::snap(p.positive_length, p.grid),
                                   detail::snap(p.negative_length, p.grid), -outward});
    }
  }
  m.constraint_blocks = {detail::wrist_block(p)};
  return m;
}

inline GraspTypeModel builtin_model(const std::string& name, const GraspModelParams& p = {}) {
  if (name == "lateral") return lateral_model(p);
  if (name == "tripodal") return tripodal_model(p);
  if (name == "power") return power_model(p);
  throw Error(Errc::InvalidArgument, "unknown built-in grasp type '" + name + "'");
}

// ---------------------------------------------------------------------------
// Model files: one record per line, '#' comments.
//   name <label>
//   approach <x y z>
//   contact origin <x y z> direction <x y z> positive <m> negative <m> normal <x y z>
//   palm    (same fields as contact)
//   block center <x y z> half <x y z>

namespace detail {

inline std::string format_vec(const Vec3& v) {
  std::string s;
  for (int i = 0; i < 3; ++i) {
    if (i) s += ' ';
    append_number(s, v[i] == 0.0 ? 0.0 : v[i]);
  }
  return s;
}

inline std::string format_contact(const char* tag, const ContactVector& c) {
  std::string s = std::string(tag) + " origin " + format_vec(c.origin) + " direction " + format_vec(c.direction) +
                  " positive ";
  append_number(s, c.positive_length);
  s += " negative ";
  append_number(s, c.negative_length);
  s += " normal " + format_vec(c.contact_normal) + "\n";
  return s;
}

class RecordReader {
 public:
  RecordReader(std::vector<std::string_view> tokens, std::size_t line_no)
      : tokens_(std::move(tokens)), line_no_(line_no) {}

  std::string_view word() {
    if (pos_ >= tokens_.size()) fail("unexpected end of record");
    return tokens_[pos_++];
  }

  void expect(std::string_view key) {
    if (word() != key) fail("expected '" + std::string(key) + "'");
  }

  double number() {
    const std::string_view t = word();
    try {
      return parse_number(t, line_no_);
    } catch (const Error&) {
      fail("bad number '" + std::string(t) + "'");
    }
  }

  Vec3 vec() {
    const double x = number();
    const double y = number();
    const double z = number();
    return {x, y, z};
  }

  void finish() {
    if (pos_ != tokens_.size()) fail("trailing tokens");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::MalformedModel, "line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::vector<std::string_view> tokens_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

inline ContactVector read_contact(RecordReader& r) {
  ContactVector c;
  r.expect("origin");
  c.origin = r.vec();
  r.expect("direction");
  c.direction = r.vec();
  r.expect("positive");
  c.positive_length = r.number();
  r.expect("negative");
  c.negative_length = r.number();
  r.expect("normal");
  c.contact_normal = r.vec();
  r.finish();
  return c;
}

}  // namespace detail

inline void write_model(std::ostream& out, const GraspTypeModel& m) {
  std::string s = "# grasp type model, lengths in meters, frame {g}\n";
  s += "name " + m.name + "\n";
  s += "approach " + detail::format_vec(m.approach_axis) + "\n";
  for (const auto& c : m.finger_contacts) s += detail::format_contact("contact", c);
  if (m.palm_vector) s += detail::format_contact("palm", *m.palm_vector);
  for (const auto& b : m.constraint_blocks) {
    s += "block center " + detail::format_vec(b.center) + " half " + detail::format_vec(b.half_extents) + "\n";
  }
  out << s;
}

inline GraspTypeModel parse_model(std::istream& in) {
  GraspTypeModel m;
  bool named = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens.front().starts_with('#')) continue;
    detail::RecordReader r(std::move(tokens), line_no);
    const std::string_view key = r.word();
    if (key == "name") {
      m.name = std::string(r.word());
      r.finish();
      named = true;
    } else if (key == "approach") {
      m.approach_axis = r.vec();
      r.finish();
    } else if (key == "contact") {
      m.finger_contacts.push_back(detail::read_contact(r));
    } else if (key == "palm") {
      if (m.palm_vector) r.fail("more than one palm vector");
      m.palm_vector = detail::read_contact(r);
    } else if (key == "block") {
      ConstraintBlock b;
      r.expect("center");
      b.center = r.vec();
      r.expect("half");
      b.half_extents = r.vec();
      r.finish();
      m.constraint_blocks.push_back(b);
    } else {
      r.fail("unknown record '" + std::string(key) + "'");
    }
  }
  if (!named) throw Error(Errc::MalformedModel, "model has no name");
  validate(m);
  return m;
}

inline GraspTypeModel read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open model '" + path + "'");
  return parse_model(in);
}

}  // namespace grasp
