#include "blab/averaging.hpp"
#include "blab/catalog.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace blab;

namespace {

NormField constant_norm(LocalNorm p) {
  return NormField{p.dim, false, [p](const ChartPoint&) { return p; }};
}

LocalNorm euclidean_local(int n) {
  LocalNorm p;
  p.dim = n;
  p.value = [](const Vec& xi) { return xi.norm(); };
  return p;
}

// Quadratic form norm sqrt(ξᵀAξ) without derivative callbacks.
LocalNorm quadratic_local(const Mat& A) {
  LocalNorm p;
  p.dim = static_cast<int>(A.rows());
  p.value = [A](const Vec& xi) { return std::sqrt(xi.dot(A * xi)); };
  return p;
}

LocalNorm quartic_local(int n) {
  LocalNorm p;
  p.dim = n;
  p.value = [](const Vec& xi) { return std::pow(xi.array().pow(4).sum(), 0.25); };
  return p;
}

SphereRule gl_rule(int n, std::vector<int> resolution) {
  IndicatrixQuadrature q;
  q.dim = n;
  q.resolution = std::move(resolution);
  return SphereRule(q);
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates polynomials up to degree 2m - 1 exactly") {
  std::vector<double> x, w;
  gauss_legendre(6, x, w);
  for (int d = 0; d <= 11; ++d) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * std::pow(x[i], d);
    const double exact = (d % 2 == 1) ? 0.0 : 2.0 / (d + 1);
    CHECK(sum == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("sphere rules carry the sphere area") {
  CHECK(sphere_area(2) == doctest::Approx(2 * std::numbers::pi));
  CHECK(sphere_area(3) == doctest::Approx(4 * std::numbers::pi));
  CHECK(sphere_area(4) == doctest::Approx(2 * std::numbers::pi * std::numbers::pi));
  for (int n = 2; n <= 4; ++n) {
    const SphereRule rule(IndicatrixQuadrature::defaults(n));
    CAPTURE(n);
    CHECK(rule.total_weight() == doctest::Approx(sphere_area(n)).epsilon(1e-12));
    for (const Vec& u : rule.nodes()) CHECK(u.norm() == doctest::Approx(1.0));
  }
  IndicatrixQuadrature mc;
  mc.dim = 3;
  mc.scheme = QuadratureScheme::monte_carlo;
  mc.resolution = {1000};
  CHECK(SphereRule(mc).total_weight() == doctest::Approx(sphere_area(3)));
}

TEST_CASE("ball volumes of the Euclidean and quartic unit balls") {
  const SphereRule r2 = gl_rule(2, {512});
  const SphereRule r3 = gl_rule(3, {64, 128});
  const ChartPoint o2 = Vec::Zero(2), o3 = Vec::Zero(3);
  CHECK(ball_volume(constant_norm(euclidean_local(2)), o2, r2) == doctest::Approx(std::numbers::pi));
  CHECK(ball_volume(constant_norm(euclidean_local(3)), o3, r3) ==
        doctest::Approx(4.0 * std::numbers::pi / 3.0));
  // |ξ|_4 ≤ 1 in the plane: 4 Γ(5/4)² / Γ(3/2).
  const double quartic = 4.0 * std::pow(std::tgamma(1.25), 2) / std::tgamma(1.5);
  CHECK(ball_volume(constant_norm(quartic_local(2)), o2, r2) == doctest::Approx(quartic).epsilon(1e-9));
}

TEST_CASE("indicatrix measure has total mass n") {
  const ChartPoint o = Vec::Zero(3);
  const SphereRule rule = gl_rule(3, {48, 96});
  Mat A(3, 3);
  A << 2, 0.3, 0, 0.3, 1, 0.1, 0, 0.1, 0.5;
  for (const LocalNorm& p : {euclidean_local(3), quadratic_local(A), quartic_local(3)}) {
    const double mass = indicatrix_integrate(constant_norm(p), o, [](const Vec&) { return 1.0; }, rule);
    CHECK(mass == doctest::Approx(3.0).epsilon(1e-6));
  }
}

TEST_CASE("averaged metric of a Euclidean norm is 2n I") {
  for (int n = 2; n <= 3; ++n) {
    const SphereRule rule(IndicatrixQuadrature::defaults(n));
    const AveragedMetric g = averaged_metric(constant_norm(euclidean_local(n)), Vec::Zero(n), rule);
    CHECK((g.value - 2.0 * n * Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("averaged metric of a quadratic norm is 2n A") {
  Mat A(2, 2);
  A << 3, -0.7, -0.7, 0.8;
  const SphereRule rule = gl_rule(2, {256});
  const AveragedMetric g = averaged_metric(constant_norm(quadratic_local(A)), Vec::Zero(2), rule);
  CHECK((g.value - 4.0 * A).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("averaged metric scales quadratically and is natural under linear maps") {
  const SphereRule rule = gl_rule(2, {512});
  const LocalNorm q = quartic_local(2);
  const ChartPoint o = Vec::Zero(2);
  const Mat g = averaged_metric(constant_norm(q), o, rule).value;

  LocalNorm scaled = q;
  scaled.value = [q](const Vec& xi) { return 2.5 * q(xi); };
  const Mat g_scaled = averaged_metric(constant_norm(scaled), o, rule).value;
  CHECK((g_scaled - 6.25 * g).cwiseAbs().maxCoeff() < 1e-6 * g_scaled.norm());

  // p_L(ξ) = p(Lξ) has g_{F_L} = Lᵀ g_F L.
  Mat L(2, 2);
  L << 1.2, 0.4, -0.3, 0.9;
  LocalNorm pulled = q;
  pulled.value = [q, L](const Vec& xi) { return q(L * xi); };
  const Mat g_pulled = averaged_metric(constant_norm(pulled), o, rule).value;
  CHECK((g_pulled - L.transpose() * g * L).cwiseAbs().maxCoeff() < 1e-5 * g.norm());
}

TEST_CASE("averaged metric of the quartic norm is a multiple of the identity") {
  const SphereRule rule = gl_rule(2, {512});
  const Mat g = averaged_metric(constant_norm(quartic_local(2)), Vec::Zero(2), rule).value;
  CHECK(std::abs(g(0, 1)) < 1e-8);
  CHECK(g(0, 0) == doctest::Approx(g(1, 1)).epsilon(1e-9));
  CHECK(g(0, 0) > 0.0);
}

TEST_CASE("averaged metric field of a catalog Riemannian entry is 2n g") {
  CatalogEntry e;
  e.kind = MetricKind::sphere_round;
  e.dim = 2;
  const CatalogInstance inst = catalog_instantiate(normalize_entry(e));
  auto rule = std::make_shared<const SphereRule>(IndicatrixQuadrature::defaults(2));
  const MetricField gF = averaged_metric_field(inst.norm, rule);
  const ChartPoint x = (Vec(2) << 0.2, -0.5).finished();
  CHECK((gF(x) - 4.0 * (*inst.metric)(x)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("affine-equivalence check on a Riemannian norm") {
  CatalogEntry e;
  e.kind = MetricKind::conformal;
  e.dim = 2;
  const CatalogInstance inst = catalog_instantiate(normalize_entry(e));
  const SphereRule rule(IndicatrixQuadrature::defaults(2));
  const std::vector<ChartPoint> probes{inst.base, (Vec(2) << 0.3, -0.4).finished()};
  const Theorem1Report good = verify_theorem1(inst.norm, *inst.connection, probes, rule);
  CHECK(good.connection_residual < 1e-5);
  CHECK(good.parallel_residual < 1e-4);
  CHECK(good.min_eigenvalue > 0.0);
  const Theorem1Report bad = verify_theorem1(inst.norm, ConnectionField::flat(2), probes, rule);
  CHECK(bad.connection_residual > 1e-2);
}
