#include <doctest.h>

#include "odenet/rng.hpp"
#include "testutil.hpp"

using namespace odenet;
using namespace odenet::testutil;

TEST_CASE("make_bspline_basis sizes follow the half-the-time-points rule") {
  const BasisSystem b100 = make_bspline_basis(100, 6);
  CHECK(b100.interior_knots().size() == 50);
  CHECK(b100.size() == 56);

  const BasisSystem b12 = make_bspline_basis(12, 6);
  CHECK(b12.interior_knots().size() == 6);
  CHECK(b12.size() == 12);

  CHECK_THROWS_AS(make_bspline_basis(11, 6), InvalidConfig);
}

TEST_CASE("partition of unity and derivative sum") {
  const BasisSystem basis = make_bspline_basis(40, 6);
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const double t = rng.uniform() * (trial % 7 == 0 ? 0.0 : 1.0);  // hit t=0 too
    const Vec h = eval_basis(basis, t, 0);
    const Vec hd = eval_basis(basis, t, 1);
    CHECK(std::abs(h.sum() - 1.0) < 1e-10);
    CHECK(std::abs(hd.sum()) < 1e-10);
    CHECK(h.minCoeff() >= 0.0);
    CHECK((h.array() != 0.0).count() <= basis.order());
  }
  CHECK(std::abs(eval_basis(basis, 1.0, 0).sum() - 1.0) < 1e-12);
  CHECK_THROWS_AS(eval_basis(basis, 1.0 + 1e-9, 0), DomainError);
  CHECK_THROWS_AS(eval_basis(basis, -0.1, 0), DomainError);
}

TEST_CASE("order-2 basis reproduces hat functions") {
  BasisSystem basis(2, (Vec(1) << 0.5).finished());
  const Vec h = eval_basis(basis, 0.25, 0);
  CHECK(h[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(h[1] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(h[2] == doctest::Approx(0.0));
  const Vec hd = eval_basis(basis, 0.25, 1);
  CHECK(hd[0] == doctest::Approx(-2.0));
  CHECK(hd[1] == doctest::Approx(2.0));
  CHECK(hd[2] == doctest::Approx(0.0));
}

TEST_CASE("quadrature integrates polynomials and basis products") {
  const BasisSystem basis = make_bspline_basis(20, 6);
  CHECK(integrate(basis, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(integrate(basis, [](double t) { return t * t; }) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(integrate(basis, [](double t) { return t < 0.5 ? 1.0 : 1.0 / 0.0; }),
                  NumericError);

  // Quadrature vs a dense trapezoid oracle on products of basis functions.
  // The oracle itself carries ~1e-9 boundary error at 1e5 points, so the
  // comparison is pinned at 1e-8.
  const int m = basis.size();
  for (int a : {0, 1, m / 2, m - 1}) {
    for (int b : {0, a, m / 2, m - 1}) {
      auto f = [&](double t) {
        std::vector<double> loc(basis.order());
        const int first = basis.eval_local(t, 0, loc.data());
        double va = 0.0, vb = 0.0;
        if (a >= first && a < first + basis.order()) va = loc[a - first];
        if (b >= first && b < first + basis.order()) vb = loc[b - first];
        return va * vb;
      };
      const double got = integrate(basis, f);
      const double want = trapezoid(f);
      CHECK(std::abs(got - want) < 1e-8);
    }
  }
}

TEST_CASE("weights are positive and nodes sorted") {
  const BasisSystem basis = make_bspline_basis(30, 6);
  const QuadratureRule& q = basis.quadrature();
  CHECK(q.weights.minCoeff() > 0.0);
  for (int i = 1; i < q.nodes.size(); ++i) CHECK(q.nodes[i] > q.nodes[i - 1]);
  CHECK(q.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("tabulated rows reproduce full evaluation") {
  const BasisSystem basis = make_bspline_basis(16, 4);
  Vec ts(5);
  ts << 0.0, 0.21, 0.5, 0.77, 1.0;
  const BasisRows rows = tabulate(basis, ts, 1);
  Rng rng(3);
  Vec c(basis.size());
  for (int i = 0; i < c.size(); ++i) c[i] = rng.normal();
  const Vec via_rows = rows.apply(c);
  for (int i = 0; i < ts.size(); ++i)
    CHECK(via_rows[i] == doctest::Approx(eval_basis(basis, ts[i], 1).dot(c)).epsilon(1e-13));

  // Gram assembly against the dense definition.
  Mat band = Mat::Zero(basis.order(), basis.size());
  Vec w = Vec::LinSpaced(ts.size(), 0.3, 1.1);
  rows.add_weighted_gram(w, band);
  Mat dense = Mat::Zero(basis.size(), basis.size());
  for (int i = 0; i < ts.size(); ++i) {
    const Vec h = eval_basis(basis, ts[i], 1);
    dense += w[i] * h * h.transpose();
  }
  CHECK((band_to_dense(band) - dense).lpNorm<Eigen::Infinity>() < 1e-12);
}
