#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <vector>

#include <fftw3.h>

#include "kerker/dda.hpp"
#include "kerker/errors.hpp"

namespace kerker {
namespace {

// FFTW planning is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(cplx* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<cplx[], FftwFree>;

FftwBuffer allocate(std::size_t n) {
  auto* p = static_cast<cplx*>(fftw_malloc(sizeof(cplx) * n));
  if (!p) throw std::bad_alloc();
  std::fill(p, p + n, cplx{});
  return FftwBuffer(p);
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

// Smallest m >= n whose only prime factors are 2, 3, 5, 7.
int smooth_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

class DirectInteraction final : public DipoleInteraction {
 public:
  DirectInteraction(const Points& positions, double k) : r_(positions), k_(k) {}

  void apply(const Fields& q, Fields& y) const override {
    const Eigen::Index n = r_.cols();
    y.setZero(3, n);
    for (Eigen::Index s = 0; s < n; ++s) {
      Vec3c acc = Vec3c::Zero();
      for (Eigen::Index t = 0; t < n; ++t) {
        if (t == s) continue;
        acc += dyadic_green(r_.col(s) - r_.col(t), k_) * q.col(t);
      }
      y.col(s) = acc;
    }
  }
  bool fft_accelerated() const override { return false; }

 private:
  Points r_;
  double k_;
};

// Green tensor on a zero-padded lattice; the interaction is a discrete
// convolution evaluated with three forward and three inverse transforms.
class FftInteraction final : public DipoleInteraction {
 public:
  FftInteraction(const Points& positions, double k) {
    const Eigen::Index n_pts = positions.cols();
    if (n_pts < 2) throw DomainError("fft interaction: need at least two points");

    double h = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      std::vector<double> c(static_cast<std::size_t>(n_pts));
      for (Eigen::Index i = 0; i < n_pts; ++i) c[static_cast<std::size_t>(i)] = positions(a, i);
      std::sort(c.begin(), c.end());
      const double span = c.back() - c.front();
      for (std::size_t i = 1; i < c.size(); ++i) {
        const double d = c[i] - c[i - 1];
        if (d > 1e-9 * std::max(span, 1.0)) h = std::min(h, d);
      }
    }
    if (!std::isfinite(h)) throw DomainError("fft interaction: degenerate point set");
    h_ = h;
    const Vec3d origin = positions.rowwise().minCoeff();

    std::array<int, 3> extent{1, 1, 1};
    std::vector<std::array<int, 3>> index(static_cast<std::size_t>(n_pts));
    for (Eigen::Index i = 0; i < n_pts; ++i) {
      for (int a = 0; a < 3; ++a) {
        const double u = (positions(a, i) - origin[a]) / h;
        const double ru = std::round(u);
        if (std::abs(u - ru) > 1e-6) throw DomainError("fft interaction: points not on a lattice");
        index[static_cast<std::size_t>(i)][a] = static_cast<int>(ru);
        extent[a] = std::max(extent[a], static_cast<int>(ru) + 1);
      }
    }
    for (int a = 0; a < 3; ++a) dims_[a] = smooth_size(2 * extent[a] - 1);
    total_ = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    linear_.resize(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) linear_[i] = offset(index[i][0], index[i][1], index[i][2]);

    for (auto& buf : work_) buf = allocate(total_);
    for (auto& buf : kernel_) buf = allocate(total_);
    {
      std::lock_guard lock(planner_mutex());
      forward_ = fftw_plan_dft_3d(dims_[0], dims_[1], dims_[2], as_fftw(work_[0].get()),
                                  as_fftw(work_[0].get()), FFTW_FORWARD, FFTW_MEASURE);
      backward_ = fftw_plan_dft_3d(dims_[0], dims_[1], dims_[2], as_fftw(work_[0].get()),
                                   as_fftw(work_[0].get()), FFTW_BACKWARD, FFTW_MEASURE);
    }
    if (!forward_ || !backward_) throw std::runtime_error("fft interaction: FFTW planning failed");

    // Kernel components xx, xy, xz, yy, yz, zz at wrapped displacements.
    auto wrap = [&](int i, int a) -> std::optional<int> {
      if (i < extent[a]) return i;
      if (i > dims_[a] - extent[a]) return i - dims_[a];
      return std::nullopt;
    };
    for (int i = 0; i < dims_[0]; ++i) {
      const auto di = wrap(i, 0);
      if (!di) continue;
      for (int j = 0; j < dims_[1]; ++j) {
        const auto dj = wrap(j, 1);
        if (!dj) continue;
        for (int l = 0; l < dims_[2]; ++l) {
          const auto dl = wrap(l, 2);
          if (!dl || (*di == 0 && *dj == 0 && *dl == 0)) continue;
          const Mat3c g = dyadic_green(h * Vec3d(*di, *dj, *dl), k);
          const std::size_t o = offset(i, j, l);
          kernel_[0][o] = g(0, 0);
          kernel_[1][o] = g(0, 1);
          kernel_[2][o] = g(0, 2);
          kernel_[3][o] = g(1, 1);
          kernel_[4][o] = g(1, 2);
          kernel_[5][o] = g(2, 2);
        }
      }
    }
    const double scale = 1.0 / static_cast<double>(total_);
    for (auto& buf : kernel_) {
      fftw_execute_dft(forward_, as_fftw(buf.get()), as_fftw(buf.get()));
      for (std::size_t o = 0; o < total_; ++o) buf[o] *= scale;
    }
  }

  ~FftInteraction() override {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void apply(const Fields& q, Fields& y) const override {
    std::lock_guard lock(apply_mutex_);
    for (int c = 0; c < 3; ++c) {
      cplx* w = work_[c].get();
      std::fill(w, w + total_, cplx{});
      for (std::size_t i = 0; i < linear_.size(); ++i) w[linear_[i]] = q(c, static_cast<Eigen::Index>(i));
      fftw_execute_dft(forward_, as_fftw(w), as_fftw(w));
    }
    cplx* wx = work_[0].get();
    cplx* wy = work_[1].get();
    cplx* wz = work_[2].get();
    const cplx *kxx = kernel_[0].get(), *kxy = kernel_[1].get(), *kxz = kernel_[2].get();
    const cplx *kyy = kernel_[3].get(), *kyz = kernel_[4].get(), *kzz = kernel_[5].get();
    for (std::size_t o = 0; o < total_; ++o) {
      const cplx x = wx[o], yv = wy[o], z = wz[o];
      wx[o] = kxx[o] * x + kxy[o] * yv + kxz[o] * z;
      wy[o] = kxy[o] * x + kyy[o] * yv + kyz[o] * z;
      wz[o] = kxz[o] * x + kyz[o] * yv + kzz[o] * z;
    }
    y.resize(3, static_cast<Eigen::Index>(linear_.size()));
    for (int c = 0; c < 3; ++c) {
      cplx* w = work_[c].get();
      fftw_execute_dft(backward_, as_fftw(w), as_fftw(w));
      for (std::size_t i = 0; i < linear_.size(); ++i) y(c, static_cast<Eigen::Index>(i)) = w[linear_[i]];
    }
  }
  bool fft_accelerated() const override { return true; }

 private:
  std::size_t offset(int i, int j, int l) const {
    return (static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + l;
  }

  double h_ = 0.0;
  std::array<int, 3> dims_{};
  std::size_t total_ = 0;
  std::vector<std::size_t> linear_;
  std::array<FftwBuffer, 6> kernel_;
  mutable std::array<FftwBuffer, 3> work_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  mutable std::mutex apply_mutex_;
};

}  // namespace

std::unique_ptr<DipoleInteraction> make_direct_interaction(const Points& positions, double k) {
  return std::make_unique<DirectInteraction>(positions, k);
}

std::unique_ptr<DipoleInteraction> make_fft_interaction(const Points& positions, double k) {
  return std::make_unique<FftInteraction>(positions, k);
}

}  // namespace kerker
