#pragma once

#include "grasp/error.hpp"
#include "grasp/geometry.hpp"
#include "grasp/voxel_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

namespace grasp {

/// V_go over every offset at which V_g overlaps V_o at least partially.
/// Index u corresponds to object-cell offset t = u - (gripper_dims - 1);
/// `origin` is the world position of the gripper frame at u = 0.
struct CorrelationVolume {
  double resolution = 0.0;
  Vec3 origin = Vec3::Zero();
  Vec3i gripper_dims = Vec3i::Zero();
  Grid3<double> values;

  const Vec3i& dims() const { return values.dims(); }
  Vec3 position(const Vec3i& u) const { return origin + u.cast<double>() * resolution; }
  Vec3i offset(const Vec3i& u) const { return u - (gripper_dims - Vec3i::Ones()); }
};

namespace detail {

inline void require_same_resolution(const VoxelGrid& g, const VoxelGrid& o) {
  if (std::abs(g.resolution - o.resolution) > 1e-12 * std::max(1.0, o.resolution)) {
    throw Error(Errc::ResolutionMismatch, "gripper and object grids differ in resolution");
  }
}

inline CorrelationVolume empty_volume(const VoxelGrid& g, const VoxelGrid& o) {
  CorrelationVolume v;
  v.resolution = o.resolution;
  v.gripper_dims = g.dims();
  const Vec3i out_dims = o.dims() + g.dims() - Vec3i::Ones();
  v.values = Grid3<double>(out_dims, 0.0);
  // {g} world position at offset t: o.origin + t * res + (g.frame_center - g.origin).
  const Vec3i t0 = -(g.dims() - Vec3i::Ones());
  v.origin = o.origin + t0.cast<double>() * o.resolution + (g.frame_center - g.origin);
  return v;
}

}  // namespace detail

/// Direct evaluation of V_go(t) = sum_I V_g(I) V_o(t + I); reads outside V_o
/// contribute 0.
inline CorrelationVolume xcorr_naive(const VoxelGrid& gripper, const VoxelGrid& object) {
  detail::require_same_resolution(gripper, object);
  CorrelationVolume v = detail::empty_volume(gripper, object);
  std::vector<std::pair<Vec3i, double>> g_cells;
  for (std::size_t i = 0; i < gripper.cells.size(); ++i) {
    if (gripper.cells.data()[i] != 0) g_cells.emplace_back(gripper.cells.coords(i), gripper.cells.data()[i]);
  }
  const Vec3i shift = gripper.dims() - Vec3i::Ones();
  for (std::size_t j = 0; j < object.cells.size(); ++j) {
    const double o = object.cells.data()[j];
    if (o == 0.0) continue;
    const Vec3i oj = object.cells.coords(j);
    for (const auto& [gi, gv] : g_cells) v.values[oj - gi + shift] += gv * o;
  }
  return v;
}

/// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7.
inline int fft_friendly_size(int n) {
  for (int m = std::max(1, n);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

namespace detail {

// The FFTW planner is not re-entrant; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

struct FftwPlanDestroy {
  void operator()(fftw_plan p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

inline RealBuffer alloc_real(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  if (!p) throw std::bad_alloc();
  return RealBuffer(p);
}

inline ComplexBuffer alloc_complex(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!p) throw std::bad_alloc();
  return ComplexBuffer(p);
}

}  // namespace detail

/// FFT cross-correlation against one fixed object grid. The object spectrum
/// and FFTW plans are built once; correlate() may then be called
/// concurrently for many gripper grids of the configured dimensions.
///
/// Both grids are zero-padded to at least dims_o + dims_g - 1 per axis (so
/// the circular result equals the linear correlation), transformed with real
/// input, multiplied with the gripper spectrum conjugated, and transformed
/// back.
class FftCorrelator {
 public:
  FftCorrelator(const VoxelGrid& object, const Vec3i& gripper_dims)
      : object_dims_(object.dims()),
        gripper_dims_(gripper_dims),
        resolution_(object.resolution),
        object_origin_(object.origin) {
    for (int a = 0; a < 3; ++a) padded_[a] = fft_friendly_size(object_dims_[a] + gripper_dims_[a] - 1);
    real_size_ = static_cast<std::size_t>(padded_.x()) * padded_.y() * padded_.z();
    complex_size_ = static_cast<std::size_t>(padded_.z()) * padded_.y() * (padded_.x() / 2 + 1);

    auto real = detail::alloc_real(real_size_);
    spectrum_ = detail::alloc_complex(complex_size_);
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      // FFTW wants the slowest axis first: (z, y, x).
      forward_.reset(fftw_plan_dft_r2c_3d(padded_.z(), padded_.y(), padded_.x(), real.get(), spectrum_.get(),
                                          FFTW_ESTIMATE));
      backward_.reset(fftw_plan_dft_c2r_3d(padded_.z(), padded_.y(), padded_.x(), spectrum_.get(), real.get(),
                                           FFTW_ESTIMATE));
    }
    if (!forward_ || !backward_) throw Error(Errc::InvalidArgument, "FFTW could not plan the transform");
    load(object, real.get());
    fftw_execute_dft_r2c(forward_.get(), real.get(), spectrum_.get());
  }

  const Vec3i& padded_dims() const { return padded_; }
  std::size_t padded_voxel_count() const { return real_size_; }
  const Vec3i& gripper_dims() const { return gripper_dims_; }

  CorrelationVolume correlate(const VoxelGrid& gripper) const {
    if (gripper.dims() != gripper_dims_) {
      throw Error(Errc::InvalidArgument, "gripper grid dimensions differ from the correlator's");
    }
    if (std::abs(gripper.resolution - resolution_) > 1e-12 * std::max(1.0, resolution_)) {
      throw Error(Errc::ResolutionMismatch, "gripper and object grids differ in resolution");
    }
    auto real = detail::alloc_real(real_size_);
    auto spec = detail::alloc_complex(complex_size_);
    load(gripper, real.get());
    fftw_execute_dft_r2c(forward_.get(), real.get(), spec.get());
    for (std::size_t i = 0; i < complex_size_; ++i) {
      // conj(G) * O
      const double gr = spec[i][0], gi = -spec[i][1];
      const double orr = spectrum_[i][0], oi = spectrum_[i][1];
      spec[i][0] = gr * orr - gi * oi;
      spec[i][1] = gr * oi + gi * orr;
    }
    fftw_execute_dft_c2r(backward_.get(), spec.get(), real.get());

    CorrelationVolume v;
    v.resolution = resolution_;
    v.gripper_dims = gripper_dims_;
    v.values = Grid3<double>(object_dims_ + gripper_dims_ - Vec3i::Ones(), 0.0);
    const Vec3i t0 = -(gripper_dims_ - Vec3i::Ones());
    v.origin = object_origin_ + t0.cast<double>() * resolution_ + (gripper.frame_center - gripper.origin);
    const double scale = 1.0 / static_cast<double>(real_size_);
    const Vec3i out = v.dims();
    for (int k = 0; k < out.z(); ++k) {
      const int sz = wrap(k + t0.z(), padded_.z());
      for (int j = 0; j < out.y(); ++j) {
        const int sy = wrap(j + t0.y(), padded_.y());
        const std::size_t row = (static_cast<std::size_t>(sz) * padded_.y() + sy) * padded_.x();
        for (int i = 0; i < out.x(); ++i) v.values(i, j, k) = real[row + wrap(i + t0.x(), padded_.x())] * scale;
      }
    }
    return v;
  }

 private:
  static int wrap(int t, int n) { return t < 0 ? t + n : t; }

  void load(const VoxelGrid& grid, double* real) const {
    std::fill(real, real + real_size_, 0.0);
    const Vec3i d = grid.dims();
    for (int k = 0; k < d.z(); ++k)
      for (int j = 0; j < d.y(); ++j) {
        const std::size_t row = (static_cast<std::size_t>(k) * padded_.y() + j) * padded_.x();
        for (int i = 0; i < d.x(); ++i) real[row + i] = grid.cells(i, j, k);
      }
  }

  Vec3i object_dims_;
  Vec3i gripper_dims_;
  double resolution_;
  Vec3 object_origin_;
  Vec3i padded_ = Vec3i::Zero();
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  detail::ComplexBuffer spectrum_;
  detail::Plan forward_;
  detail::Plan backward_;
};

inline CorrelationVolume xcorr_fft(const VoxelGrid& gripper, const VoxelGrid& object) {
  detail::require_same_resolution(gripper, object);
  return FftCorrelator(object, gripper.dims()).correlate(gripper);
}

/// A gripper-frame position whose correlation reaches the contact count.
struct GraspCandidate {
  Vec3 position = Vec3::Zero();
  EulerRotation rotation;
  double correlation = 0.0;
  double stage1_rank = 0.0;
  std::string grasp_type;
  Vec3i cell = Vec3i::Zero();  // index into the correlation volume
};

/// One candidate per cell whose (rounded) value is >= contact_count, sorted
/// by descending value then by cell index. Values above the count come from
/// the palm vector and rank those positions first.
inline std::vector<GraspCandidate> extract_candidates(const CorrelationVolume& volume, int contact_count,
                                                      const EulerRotation& rotation, double rank,
                                                      const std::string& grasp_type = {}) {
  std::vector<GraspCandidate> out;
  const auto& data = volume.values.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double rounded = std::round(data[i]);
    if (rounded >= contact_count) {
      const Vec3i u = volume.values.coords(i);
      out.push_back({volume.position(u), rotation, rounded, rank, grasp_type, u});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GraspCandidate& a, const GraspCandidate& b) { return a.correlation > b.correlation; });
  return out;
}

/// Debug export of the slice `index` along `axis` (0=x, 1=y, 2=z) as CSV.
inline void write_slice_csv(std::ostream& out, const CorrelationVolume& volume, int axis, int index) {
  if (axis < 0 || axis > 2 || index < 0 || index >= volume.dims()[axis]) {
    throw Error(Errc::InvalidArgument, "slice out of range");
  }
  const int a = axis == 0 ? 1 : 0;
  const int b = axis == 2 ? 1 : 2;
  std::string s;
  for (int r = 0; r < volume.dims()[b]; ++r) {
    for (int c = 0; c < volume.dims()[a]; ++c) {
      Vec3i u;
      u[axis] = index;
      u[a] = c;
      u[b] = r;
      if (c) s += ',';
      detail::append_number(s, std::round(volume.values[u] * 1e6) / 1e6);
    }
    s += '\n';
  }
  out << s;
}

}  // namespace grasp
