#include "odenet/basis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace odenet {

// Nodes/weights of the q-point Gauss-Legendre rule on [-1,1], by Newton
// iteration on the Legendre recurrence.
void gauss_legendre_rule(int q, Vec& x, Vec& w) {
  x.resize(q);
  w.resize(q);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < q; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * z * p1 - k * p2) / (k + 1.0);
      }
      pp = q * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[q - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[q - 1 - i] = w[i];
  }
}

namespace {

QuadratureRule per_interval_rule(const Vec& interior, int points_per_interval) {
  const int n_break = static_cast<int>(interior.size()) + 2;
  Vec breaks(n_break);
  breaks[0] = 0.0;
  breaks.segment(1, interior.size()) = interior;
  breaks[n_break - 1] = 1.0;

  Vec gx, gw;
  gauss_legendre_rule(points_per_interval, gx, gw);

  QuadratureRule rule;
  const int total = (n_break - 1) * points_per_interval;
  rule.nodes.resize(total);
  rule.weights.resize(total);
  int at = 0;
  for (int i = 0; i + 1 < n_break; ++i) {
    const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
    const double half = 0.5 * (breaks[i + 1] - breaks[i]);
    for (int g = 0; g < points_per_interval; ++g, ++at) {
      rule.nodes[at] = mid + half * gx[g];
      rule.weights[at] = half * gw[g];
    }
  }
  return rule;
}

}  // namespace

BasisSystem::BasisSystem(int order, Vec interior) : order_(order), interior_(std::move(interior)) {
  if (order_ < 1) throw InvalidConfig("spline order must be >= 1");
  for (int i = 0; i < interior_.size(); ++i) {
    if (!(interior_[i] > 0.0 && interior_[i] < 1.0))
      throw InvalidConfig("interior knots must lie strictly inside (0,1)");
    if (i > 0 && !(interior_[i] > interior_[i - 1]))
      throw InvalidConfig("interior knots must be strictly increasing");
  }
  m_ = static_cast<int>(interior_.size()) + order_;
  knots_.resize(m_ + order_);
  for (int i = 0; i < order_; ++i) knots_[i] = 0.0;
  knots_.segment(order_, interior_.size()) = interior_;
  for (int i = 0; i < order_; ++i) knots_[m_ + i] = 1.0;
  // q-point Gauss-Legendre is exact to degree 2q-1; q = order+1 covers the
  // degree 2(order-1)+2 products met in the criteria.  7 matches order 6.
  quad_ = per_interval_rule(interior_, std::max(7, order_ + 1));
}

int BasisSystem::eval_local(double t, int deriv, double* out) const {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("basis evaluation point outside [0,1]");
  const int p = order_ - 1;
  // Knot span: i with knots[i] <= t < knots[i+1], clamped to the last span at t=1.
  int i;
  if (t >= 1.0) {
    i = m_ - 1;
  } else {
    const double* lo = knots_.data() + p;
    const double* hi = knots_.data() + m_ + 1;
    i = static_cast<int>(std::upper_bound(lo, hi, t) - knots_.data()) - 1;
  }

  // Cox-de Boor triangle (The NURBS Book A2.3), then the derivative sweep.
  std::vector<double> left(order_), right(order_);
  Mat ndu(order_, order_);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots_[i + 1 - j];
    right[j] = knots_[i + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }
  if (deriv == 0) {
    for (int j = 0; j <= p; ++j) out[j] = ndu(j, p);
    return i - p;
  }

  std::vector<double> ders(order_);
  std::vector<double> a0(order_), a1(order_);
  for (int r = 0; r <= p; ++r) {
    a0[0] = 1.0;
    double d = 0.0;
    for (int k = 1; k <= deriv; ++k) {
      d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        const double den = ndu(pk + 1, rk);
        a1[0] = den == 0.0 ? 0.0 : a0[0] / den;
        d = a1[0] * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = r - 1 <= pk ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        const double den = ndu(pk + 1, rk + j);
        a1[j] = den == 0.0 ? 0.0 : (a0[j] - a0[j - 1]) / den;
        d += a1[j] * ndu(rk + j, pk);
      }
      if (r <= pk) {
        const double den = ndu(pk + 1, r);
        a1[k] = den == 0.0 ? 0.0 : -a0[k - 1] / den;
        d += a1[k] * ndu(r, pk);
      }
      std::swap(a0, a1);
    }
    ders[r] = d;
  }
  double factor = p;
  for (int k = 2; k <= deriv; ++k) factor *= (p - k + 1);
  for (int j = 0; j <= p; ++j) out[j] = ders[j] * factor;
  return i - p;
}

BasisSystem make_bspline_basis(int n_times, int order) {
  if (n_times < 2 * order)
    throw InvalidConfig("need at least 2*order time points to place knots");
  const int n_interior = n_times / 2;
  Vec interior(n_interior);
  for (int i = 0; i < n_interior; ++i) interior[i] = (i + 1) / static_cast<double>(n_interior + 1);
  return BasisSystem(order, std::move(interior));
}

Vec eval_basis(const BasisSystem& basis, double t, int deriv) {
  Vec out = Vec::Zero(basis.size());
  std::vector<double> loc(basis.order());
  const int first = basis.eval_local(t, deriv, loc.data());
  for (int j = 0; j < basis.order(); ++j) out[first + j] = loc[j];
  return out;
}

double integrate(const BasisSystem& basis, const std::function<double(double)>& f) {
  const QuadratureRule& q = basis.quadrature();
  double acc = 0.0;
  for (int i = 0; i < q.nodes.size(); ++i) {
    const double v = f(q.nodes[i]);
    if (!std::isfinite(v)) throw NumericError("non-finite integrand", q.nodes[i]);
    acc += q.weights[i] * v;
  }
  return acc;
}

Vec BasisRows::apply(const Vec& coef) const {
  Vec out(rows());
  for (int i = 0; i < rows(); ++i)
    out[i] = vals.row(i).dot(coef.segment(first[i], order).transpose());
  return out;
}

Mat BasisRows::apply(const Mat& coef) const {
  Mat out(rows(), coef.cols());
  for (int i = 0; i < rows(); ++i)
    out.row(i) = vals.row(i) * coef.middleRows(first[i], order);
  return out;
}

Vec BasisRows::apply_transpose(const Vec& v) const {
  Vec out = Vec::Zero(cols);
  for (int i = 0; i < rows(); ++i) out.segment(first[i], order) += v[i] * vals.row(i).transpose();
  return out;
}

void BasisRows::add_weighted_gram(const Vec& w, Mat& band) const {
  for (int i = 0; i < rows(); ++i) {
    const int f = first[i];
    const double wi = w[i];
    for (int r = 0; r < order; ++r) {
      const double wr = wi * vals(i, r);
      for (int c = 0; c <= r; ++c) band(r - c, f + c) += wr * vals(i, c);
    }
  }
}

BasisRows axpy(const BasisRows& a, double alpha, const BasisRows& b) {
  BasisRows out = a;
  out.vals += alpha * b.vals;
  return out;
}

BasisRows tabulate(const BasisSystem& basis, const Vec& ts, int deriv) {
  BasisRows rows;
  rows.order = basis.order();
  rows.cols = basis.size();
  rows.vals.resize(ts.size(), basis.order());
  rows.first.resize(ts.size());
  std::vector<double> loc(basis.order());
  for (int i = 0; i < ts.size(); ++i) {
    rows.first[i] = basis.eval_local(ts[i], deriv, loc.data());
    for (int j = 0; j < basis.order(); ++j) rows.vals(i, j) = loc[j];
  }
  return rows;
}

BasisTables make_tables(const BasisSystem& basis, const Vec& times) {
  BasisTables t;
  t.at_times = tabulate(basis, times, 0);
  t.deriv_at_times = tabulate(basis, times, 1);
  t.at_nodes = tabulate(basis, basis.quadrature().nodes, 0);
  t.deriv_at_nodes = tabulate(basis, basis.quadrature().nodes, 1);
  t.node_weights = basis.quadrature().weights;
  return t;
}

}  // namespace odenet
