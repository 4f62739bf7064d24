#pragma once

#include "odenet/types.hpp"

namespace odenet {

// Symmetric band storage, lower LAPACK layout: ab(d, j) = A(j + d, j) for
// d = 0..kd.  All matrices met here (basis Gram matrices, inner Hessians)
// are banded with half-bandwidth order-1, so an O(m kd^2) Cholesky replaces
// the O(m^3) dense one.
class BandedCholesky {
 public:
  BandedCholesky() = default;

  /// Factor A = L L^T from its lower band. Returns false if a pivot is not
  /// strictly positive (matrix not positive definite to working precision).
  bool compute(const Mat& lower_band) {
    kd_ = static_cast<int>(lower_band.rows()) - 1;
    n_ = static_cast<int>(lower_band.cols());
    l_ = lower_band;
    for (int j = 0; j < n_; ++j) {
      const int kmin = std::max(0, j - kd_);
      double d = l_(0, j);
      for (int k = kmin; k < j; ++k) d -= l_(j - k, k) * l_(j - k, k);
      if (!(d > 0.0) || !std::isfinite(d)) {
        ok_ = false;
        return false;
      }
      const double root = std::sqrt(d);
      l_(0, j) = root;
      const int imax = std::min(j + kd_, n_ - 1);
      for (int i = j + 1; i <= imax; ++i) {
        double s = l_(i - j, j);
        for (int k = std::max(kmin, i - kd_); k < j; ++k) s -= l_(i - k, k) * l_(j - k, k);
        l_(i - j, j) = s / root;
      }
    }
    ok_ = true;
    return true;
  }

  bool ok() const { return ok_; }
  int size() const { return n_; }

  void solve_in_place(Eigen::Ref<Vec> b) const {
    // L y = b
    for (int j = 0; j < n_; ++j) {
      const double x = b[j] / l_(0, j);
      b[j] = x;
      const int imax = std::min(j + kd_, n_ - 1);
      for (int i = j + 1; i <= imax; ++i) b[i] -= l_(i - j, j) * x;
    }
    // L^T x = y
    for (int j = n_ - 1; j >= 0; --j) {
      double s = b[j];
      const int imax = std::min(j + kd_, n_ - 1);
      for (int i = j + 1; i <= imax; ++i) s -= l_(i - j, j) * b[i];
      b[j] = s / l_(0, j);
    }
  }

  Vec solve(Vec b) const {
    solve_in_place(b);
    return b;
  }

  Mat solve(Mat b) const {
    for (int c = 0; c < b.cols(); ++c) solve_in_place(b.col(c));
    return b;
  }

 private:
  Mat l_;
  int n_ = 0;
  int kd_ = 0;
  bool ok_ = false;
};

/// y = A x for a symmetric matrix in lower band storage.
inline Vec band_apply(const Mat& lower_band, const Vec& x) {
  const int kd = static_cast<int>(lower_band.rows()) - 1;
  const int n = static_cast<int>(lower_band.cols());
  Vec y = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    y[j] += lower_band(0, j) * x[j];
    for (int d = 1; d <= kd && j + d < n; ++d) {
      y[j + d] += lower_band(d, j) * x[j];
      y[j] += lower_band(d, j) * x[j + d];
    }
  }
  return y;
}

/// Expand lower band storage into a full symmetric dense matrix.
inline Mat band_to_dense(const Mat& lower_band) {
  const int kd = static_cast<int>(lower_band.rows()) - 1;
  const int n = static_cast<int>(lower_band.cols());
  Mat a = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int d = 0; d <= kd && j + d < n; ++d) {
      a(j + d, j) = lower_band(d, j);
      a(j, j + d) = lower_band(d, j);
    }
  }
  return a;
}

}  // namespace odenet
