#include "blab/berwald.hpp"
#include "blab/catalog.hpp"

#include <doctest.h>

#include <cmath>

using namespace blab;

namespace {

CatalogInstance make(MetricKind kind, int dim) {
  CatalogEntry e;
  e.kind = kind;
  e.dim = dim;
  return catalog_instantiate(normalize_entry(e));
}

}  // namespace

TEST_CASE("transport check: Berwald pairs pass, the Randers control fails") {
  const IntegratorSettings settings{400};
  for (auto kind : {MetricKind::euclidean, MetricKind::conformal, MetricKind::lp_smooth,
                    MetricKind::sphere_round}) {
    const CatalogInstance inst = make(kind, 2);
    const TransportCheck t = berwald_transport_check(inst.norm, *inst.connection, inst.box, 10, 3, settings);
    CAPTURE(to_string(kind));
    CHECK(t.trials == 10);
    CHECK(t.violations.size() + static_cast<std::size_t>(t.skipped) == 10);
    CHECK(t.max_violation < 1e-6);
  }
  const CatalogInstance randers = make(MetricKind::randers_control, 2);
  const TransportCheck t = berwald_transport_check(randers.norm, randers.candidate, randers.box, 10, 3, settings);
  CHECK(t.max_violation > 1e-2);
  CHECK(berwald_report(t, 0.0, 1e-6).verdict == Verdict::fail);
}

TEST_CASE("spray of a Riemannian norm is quadratic with the Levi-Civita coefficients") {
  const CatalogInstance inst = make(MetricKind::sphere_round, 2);
  const ChartPoint x = (Vec(2) << 0.3, -0.2).finished();
  const SprayCheck s = spray_quadraticity_check(inst.norm, x, random_directions(2, 24, 1));
  CHECK(s.accepted == 24);
  CHECK(s.rejected == 0);
  CHECK(s.residual < 1e-6);
  const Tensor3 lc = christoffel_of_metric(*inst.metric, x);
  CHECK((s.fitted_connection - lc).max_abs() < 1e-6);
}

TEST_CASE("spray of a Minkowski norm vanishes, the Randers spray is not quadratic") {
  const CatalogInstance quartic = make(MetricKind::lp_smooth, 2);
  const SprayCheck flat = spray_quadraticity_check(quartic.norm, quartic.base, random_directions(2, 24, 2));
  CHECK(flat.max_magnitude < 1e-6);
  CHECK(flat.residual < 1e-6);

  const CatalogInstance randers = make(MetricKind::randers_control, 2);
  const ChartPoint x = (Vec(2) << 0.5, 0.0).finished();
  const SprayCheck r = spray_quadraticity_check(randers.norm, x, random_directions(2, 24, 2));
  CHECK(r.residual > 1e-2);
}

TEST_CASE("random directions are unit vectors and seeded") {
  const auto a = random_directions(3, 5, 11);
  const auto b = random_directions(3, 5, 11);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].norm() == doctest::Approx(1.0));
    CHECK(a[i] == b[i]);
  }
}

TEST_CASE("holonomy of the round sphere is SO(2), of the plane trivial") {
  LoopFamilyOptions loops;
  loops.random_loops = 4;
  const IntegratorSettings settings{600};

  const CatalogInstance sphere = make(MetricKind::sphere_round, 2);
  const HolonomyProbe hs = holonomy_probe(*sphere.connection, *sphere.metric, sphere.base,
                                          standard_loop_family(sphere.base, sphere.box, loops, 4), 4, settings);
  CHECK(hs.metric_preserved);
  CHECK(hs.algebra_dim == 1);
  CHECK(hs.transitive());

  const CatalogInstance plane = make(MetricKind::euclidean, 2);
  const HolonomyProbe hp = holonomy_probe(*plane.connection, *plane.metric, plane.base,
                                          standard_loop_family(plane.base, plane.box, loops, 4), 4, settings);
  CHECK(hp.metric_preserved);
  CHECK(hp.algebra_dim == 0);
  CHECK_FALSE(hp.transitive());
}

TEST_CASE("holonomy of the 2+2 product is reducible") {
  LoopFamilyOptions loops;
  loops.random_loops = 4;
  const CatalogInstance product = make(MetricKind::berwald_product, 4);
  // The averaged metric is not needed to read off the algebra; the sphere
  // factor plus a flat factor is preserved by Γ.
  MetricField g{4, [](const ChartPoint& x) {
                  Mat m = Mat::Identity(4, 4);
                  const double s = 1.0 + x.head(2).squaredNorm();
                  m.topLeftCorner(2, 2) *= 4.0 / (s * s);
                  return m;
                }, {}};
  const HolonomyProbe h = holonomy_probe(*product.connection, g, product.base,
                                         standard_loop_family(product.base, product.box, loops, 5), 5,
                                         IntegratorSettings{600});
  CHECK(h.metric_preserved);
  CHECK(h.algebra_dim == 1);
  CHECK_FALSE(h.transitive());
}

TEST_CASE("ratio test separates Riemannian from non-Riemannian norms") {
  const CatalogInstance sphere = make(MetricKind::sphere_round, 2);
  const RatioReport r = riemannian_ratio_test(sphere.norm, *sphere.metric, sphere.base, 64, 1);
  CHECK(r.spread < 1e-12);
  CHECK(r.riemannian_compatible);

  const CatalogInstance quartic = make(MetricKind::lp_smooth, 2);
  MetricField id{2, [](const ChartPoint&) -> Mat { return Mat::Identity(2, 2); }, {}};
  const RatioReport q = riemannian_ratio_test(quartic.norm, id, quartic.base, 64, 1);
  CHECK_FALSE(q.riemannian_compatible);
  // F²/|ξ|² ranges over [2^{-1/2}, 1] for the planar quartic norm.
  CHECK(q.max_ratio <= 1.0 + 1e-12);
  CHECK(q.min_ratio >= std::sqrt(0.5) - 1e-12);
}

TEST_CASE("berwald verdict combines transport and spray") {
  TransportCheck t;
  t.trials = 3;
  t.max_violation = 1e-9;
  t.violations = {1e-9, 0.0, 0.0};
  CHECK(berwald_report(t, 1e-9, 1e-6).verdict == Verdict::pass);
  CHECK(berwald_report(t, 1e-3, 1e-6).verdict == Verdict::fail);
}
