#pragma once

#include <functional>

#include "odenet/types.hpp"

namespace odenet {

/// Composite Gauss-Legendre rule over [0,1], built per inter-knot interval.
struct QuadratureRule {
  Vec nodes;    // sorted, inside [0,1]
  Vec weights;  // positive, sum to the interval length (= 1)
};

/// Clamped B-spline basis on [0,1] with its quadrature rule.
///
/// Immutable after construction; safe for concurrent reads.  The number of
/// basis functions is m = #interior knots + order, and at any t at most
/// `order` of them are nonzero (indices eval_local reports).
class BasisSystem {
 public:
  /// `interior` must be strictly increasing and inside (0,1).
  BasisSystem(int order, Vec interior);

  int order() const { return order_; }
  int size() const { return m_; }
  const Vec& interior_knots() const { return interior_; }
  const Vec& knot_vector() const { return knots_; }
  const QuadratureRule& quadrature() const { return quad_; }

  /// Values (or derivatives) of the `order` basis functions that are nonzero
  /// at t, written to out[0..order).  Returns the index of the first one.
  /// deriv in {0,1,2}; t must lie in [0,1].
  int eval_local(double t, int deriv, double* out) const;

 private:
  int order_;
  int m_;
  Vec interior_;
  Vec knots_;  // clamped: order copies of 0, interior, order copies of 1
  QuadratureRule quad_;
};

/// Basis for n_times equally spaced observations: floor(n_times/2) equally
/// spaced interior knots, so m = floor(n_times/2) + order.
BasisSystem make_bspline_basis(int n_times, int order = 6);

/// q-point Gauss-Legendre nodes and weights on [-1,1].
void gauss_legendre_rule(int q, Vec& nodes, Vec& weights);

/// Full m-vector of basis values or first derivatives at t (deriv in {0,1}).
Vec eval_basis(const BasisSystem& basis, double t, int deriv = 0);

/// Quadrature of f over [0,1]; throws NumericError if f is non-finite at a node.
double integrate(const BasisSystem& basis, const std::function<double(double)>& f);

/// Basis rows tabulated at a set of points, kept in compact-support form:
/// row i holds the `order` consecutive nonzero values starting at first[i].
struct BasisRows {
  Mat vals;    // n x order
  IVec first;  // n
  int cols = 0;
  int order = 0;

  int rows() const { return static_cast<int>(vals.rows()); }

  /// (B c)_i
  Vec apply(const Vec& coef) const;
  /// B C for an m x p coefficient matrix.
  Mat apply(const Mat& coef) const;
  /// B^T v
  Vec apply_transpose(const Vec& v) const;
  /// band += sum_i w_i h(t_i) h(t_i)^T, lower band storage with kd = order-1.
  void add_weighted_gram(const Vec& w, Mat& band) const;
};

BasisRows tabulate(const BasisSystem& basis, const Vec& ts, int deriv);

/// Rows of a + alpha*b for two tables sharing evaluation points.
BasisRows axpy(const BasisRows& a, double alpha, const BasisRows& b);

/// Everything the fitting criteria evaluate repeatedly for one data set:
/// basis rows at the observation times and at the quadrature nodes.
struct BasisTables {
  BasisRows at_times;        // h(t_i)
  BasisRows deriv_at_times;  // h'(t_i)
  BasisRows at_nodes;        // h(s_q)
  BasisRows deriv_at_nodes;  // h'(s_q)
  Vec node_weights;          // quadrature weights w_q
};

BasisTables make_tables(const BasisSystem& basis, const Vec& times);

}  // namespace odenet
