#include "blab/catalog.hpp"
#include "blab/tensor_core.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace blab;

namespace {

MetricField polar_metric() {
  return MetricField{2, [](const ChartPoint& x) -> Mat {
                       Mat g = Mat::Identity(2, 2);
                       g(1, 1) = x[0] * x[0];
                       return g;
                     },
                     {}};
}

// Area of [a0, a1] x [b0, b1] under 4 / (1 + |x|²)², by tensor Gauss-Legendre.
double sphere_chart_area(double a0, double a1, double b0, double b1) {
  const double nodes[] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                          -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                          0.7966664774136267,  0.9602898564975363};
  const double weights[] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                            0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                            0.2223810344533745, 0.1012285362903763};
  const int panels = 16;
  double total = 0.0;
  const double ha = (a1 - a0) / panels, hb = (b1 - b0) / panels;
  for (int pa = 0; pa < panels; ++pa)
    for (int pb = 0; pb < panels; ++pb)
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          const double x = a0 + ha * (pa + 0.5 + 0.5 * nodes[i]);
          const double y = b0 + hb * (pb + 0.5 + 0.5 * nodes[j]);
          const double s = 1.0 + x * x + y * y;
          total += 0.25 * ha * hb * weights[i] * weights[j] * 4.0 / (s * s);
        }
  return total;
}

}  // namespace

TEST_CASE("polar Christoffel symbols match the closed form") {
  const ChartPoint x = (Vec(2) << 1.7, 0.3).finished();
  const Tensor3 gamma = christoffel_of_metric(polar_metric(), x);
  CHECK(gamma(0, 1, 1) == doctest::Approx(-1.7).epsilon(1e-8));
  CHECK(gamma(1, 0, 1) == doctest::Approx(1.0 / 1.7).epsilon(1e-8));
  CHECK(gamma(1, 1, 0) == doctest::Approx(1.0 / 1.7).epsilon(1e-8));
  CHECK(std::abs(gamma(0, 0, 0)) < 1e-9);
  CHECK(std::abs(gamma(1, 1, 1)) < 1e-9);
}

TEST_CASE("Christoffel symbols are symmetric in the lower indices") {
  CatalogEntry e;
  e.kind = MetricKind::conformal;
  e.dim = 3;
  const CatalogInstance inst = catalog_instantiate(normalize_entry(e));
  MetricField no_derivatives = *inst.metric;
  no_derivatives.derivatives = nullptr;
  const ChartPoint x = (Vec(3) << 0.2, -0.4, 0.3).finished();
  const Tensor3 fd = christoffel_of_metric(no_derivatives, x);
  const Tensor3 exact = (*inst.connection)(x);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(fd(i, j, k) - fd(i, k, j)) < 1e-12);
        CHECK(std::abs(fd(i, j, k) - exact(i, j, k)) < 1e-8);
      }
}

TEST_CASE("degenerate metric is reported") {
  const MetricField g{2, [](const ChartPoint&) -> Mat { return Mat::Zero(2, 2); }, {}};
  try {
    christoffel_of_metric(g, Vec::Zero(2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_metric);
  }
}

TEST_CASE("flat metric has zero curvature, the round sphere has K = 1 / R²") {
  CHECK(riemann_curvature(levi_civita(polar_metric()), (Vec(2) << 1.3, 0.2).finished()).max_abs() < 1e-6);

  const double R = 2.0;
  const MetricField g{2, [R](const ChartPoint& x) -> Mat {
                        const double s = 1.0 + x.squaredNorm();
                        return 4.0 * R * R / (s * s) * Mat::Identity(2, 2);
                      },
                      {}};
  const ChartPoint x = (Vec(2) << 0.3, -0.2).finished();
  const Mat gx = g(x);
  const Tensor4 r = lower_first_index(riemann_curvature(levi_civita(g), x), gx);
  // K = R_0101 / (g00 g11 − g01²)
  const double K = r(0, 1, 0, 1) / (gx(0, 0) * gx(1, 1) - gx(0, 1) * gx(0, 1));
  CHECK(K == doctest::Approx(1.0 / (R * R)).epsilon(1e-5));
}

TEST_CASE("transport around a loop on the unit sphere rotates by the enclosed area") {
  CatalogEntry e;
  e.kind = MetricKind::sphere_round;
  e.dim = 2;
  const CatalogInstance inst = catalog_instantiate(normalize_entry(e));
  const ChartPoint base = Vec::Zero(2);
  const double a = 0.4, b = 0.3;
  const Mat T = transport_matrix(*inst.connection, rectangle_loop(base, 0, 1, a, b));
  // Conformal at the base, so T is a rotation in coordinates.
  const double angle = std::atan2(T(1, 0), T(0, 0));
  CHECK(std::abs(angle) == doctest::Approx(sphere_chart_area(0, a, 0, b)).epsilon(1e-8));
  CHECK((T.transpose() * T - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("transport with the flat connection is the identity") {
  const Curve c({Vec::Zero(3), (Vec(3) << 1, 2, 0).finished(), (Vec(3) << -1, 0, 1).finished()},
                Interpolation::cubic);
  const Vec v = (Vec(3) << 0.3, -1.0, 2.0).finished();
  CHECK((parallel_transport(ConnectionField::flat(3), c, v) - v).norm() < 1e-14);
}

TEST_CASE("geodesics of the flat connection are straight lines") {
  const ChartPoint x0 = (Vec(2) << 0.1, -0.2).finished();
  const Vec xi = (Vec(2) << 0.6, 0.8).finished();
  const GeodesicResult r = connection_geodesic(ConnectionField::flat(2), x0, xi, 1.5);
  CHECK_FALSE(r.truncated);
  CHECK((r.curve.nodes().back() - (x0 + 1.5 * xi)).norm() < 1e-12);
}

TEST_CASE("polar geodesics are Cartesian straight lines") {
  const ConnectionField gamma = levi_civita(polar_metric());
  const ChartPoint x0 = (Vec(2) << 1.0, 0.0).finished();
  const Vec xi = (Vec(2) << 0.0, 1.0).finished();  // unit speed, tangent to the circle r = 1
  const GeodesicResult r = connection_geodesic(gamma, x0, xi, 0.8);
  const ChartPoint end = r.curve.nodes().back();
  // Straight line (1, t) in Cartesian coordinates.
  CHECK(end[0] * std::cos(end[1]) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(end[0] * std::sin(end[1]) == doctest::Approx(0.8).epsilon(1e-8));
}

TEST_CASE("leaving the box truncates the geodesic") {
  const GeodesicResult r = connection_geodesic(ConnectionField::flat(2), Vec::Zero(2),
                                               (Vec(2) << 1.0, 0.0).finished(), 5.0, {}, Box::cube(2, 1.0));
  CHECK(r.truncated);
  CHECK(r.reached_parameter < 1.01);
}

TEST_CASE("integrator rejects a step count below one") {
  IntegratorSettings s;
  s.steps_per_unit = 0;
  try {
    parallel_transport(ConnectionField::flat(2), Curve::segment(Vec::Zero(2), Vec::Ones(2)), Vec::Ones(2), s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::integration_failure);
  }
}

TEST_CASE("curves: closedness, reversal and endpoints") {
  const Curve loop = rectangle_loop(Vec::Zero(2), 0, 1, 0.5, 0.25);
  CHECK(loop.closed());
  CHECK(loop.segments() == 4);
  const Curve open({Vec::Zero(2), Vec::Ones(2)});
  CHECK_FALSE(open.closed());
  CHECK((open.reversed().position(0.0) - Vec::Ones(2)).norm() == 0.0);
  std::mt19937_64 rng(3);
  const Box box = Box::cube(3, 1.0);
  for (const Curve& c : standard_loop_family(Vec::Zero(3), box, {}, 7)) {
    CHECK(c.closed());
    for (double t = 0.0; t <= 1.0; t += 0.05) CHECK(box.contains(c.position(t)));
  }
}

TEST_CASE("Tensor3 contraction") {
  Tensor3 t(2);
  t(0, 1, 0) = 2.0;
  t(1, 0, 1) = 3.0;
  const Mat m = t.contract_first_lower((Vec(2) << 1.0, 10.0).finished());
  // M^i_k = Γ^i_jk v^j
  CHECK(m(0, 0) == 20.0);
  CHECK(m(1, 1) == 3.0);
}
