#include "blab/catalog.hpp"
#include "blab/equivalence.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace blab;

namespace {

CatalogInstance make(MetricKind kind, int dim) {
  CatalogEntry e;
  e.kind = kind;
  e.dim = dim;
  return catalog_instantiate(normalize_entry(e));
}

SinjukovState random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  SinjukovState s;
  s.a = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) s.a(i, j) = s.a(j, i) = normal(rng);
  s.lam = Vec(n);
  for (int i = 0; i < n; ++i) s.lam[i] = normal(rng);
  s.mu = normal(rng);
  return s;
}

Mat spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
  return m * m.transpose() + n * Mat::Identity(n, n);
}

}  // namespace

TEST_CASE("state flattening round trip") {
  std::mt19937_64 rng(1);
  for (int n = 2; n <= 4; ++n) {
    const SinjukovState s = random_state(n, rng);
    const Vec flat = s.flatten();
    CHECK(flat.size() == SinjukovState::state_dim(n));
    const SinjukovState back = SinjukovState::unflatten(flat, n);
    CHECK((back.a - s.a).norm() == 0.0);
    CHECK((back.lam - s.lam).norm() == 0.0);
    CHECK(back.mu == s.mu);
  }
  CHECK(SinjukovState::state_dim(2) == 6);
  CHECK(SinjukovState::state_dim(3) == 10);
}

TEST_CASE("flat Frobenius system matches the closed form along a segment") {
  // Flat connection: μ constant, λ = λ0 + μΔ, a = a0 + λ0Δᵀ + Δλ0ᵀ + μΔΔᵀ.
  std::mt19937_64 rng(2);
  const FrobeniusSystem sys{ConnectionField::flat(2), 0.0, std::nullopt, IntegratorSettings{200}};
  const ChartPoint x0 = (Vec(2) << 0.1, -0.3).finished();
  const ChartPoint x1 = (Vec(2) << 0.7, 0.4).finished();
  const Vec d = x1 - x0;
  for (int t = 0; t < 5; ++t) {
    const SinjukovState s0 = random_state(2, rng);
    const SinjukovState s1 = frobenius_integrate(sys, Curve::segment(x0, x1), s0);
    CHECK(s1.mu == doctest::Approx(s0.mu));
    CHECK((s1.lam - (s0.lam + s0.mu * d)).norm() < 1e-12);
    const Mat a = s0.a + s0.lam * d.transpose() + d * s0.lam.transpose() + s0.mu * d * d.transpose();
    CHECK((s1.a - a).norm() < 1e-12);
  }
}

TEST_CASE("degree of mobility: plane 6, conformal 1") {
  LoopFamilyOptions opts;
  opts.random_loops = 3;
  const CatalogInstance plane = make(MetricKind::euclidean, 2);
  const FrobeniusSystem flat{*plane.connection, 0.0, std::nullopt, IntegratorSettings{300}};
  const MobilityResult m = degree_of_mobility(flat, standard_loop_family(plane.base, plane.box, opts, 1));
  CHECK(m.degree == 6);
  CHECK(m.certified);
  CHECK(m.basis.cols() == 6);

  const CatalogInstance conf = make(MetricKind::conformal, 2);
  const FrobeniusSystem sys{*conf.connection, 0.0, std::nullopt, IntegratorSettings{300}};
  const MobilityResult mc = degree_of_mobility(sys, standard_loop_family(conf.base, conf.box, opts, 1));
  CHECK(mc.degree == 1);
  CHECK(mc.gap > 1e3);
  // The surviving state is the trivial solution a = g^{-1} up to scale, λ = 0.
  const SinjukovState s = SinjukovState::unflatten(mc.basis.col(0), 2);
  const Mat ginv = (*conf.metric)(conf.base).inverse();
  CHECK(s.lam.norm() < 1e-6 * s.a.norm());
  CHECK((s.a / s.a(0, 0) - ginv / ginv(0, 0)).norm() < 1e-6);
}

TEST_CASE("too few loops is a configuration error") {
  const FrobeniusSystem sys{ConnectionField::flat(2), 0.0, std::nullopt, {}};
  const ChartPoint o = Vec::Zero(2);
  const std::vector<Curve> loops{rectangle_loop(o, 0, 1, 0.1, 0.1)};
  CHECK_THROWS_AS(degree_of_mobility(sys, loops), Error);
}

TEST_CASE("metric and solution maps are inverse and scale as expected") {
  std::mt19937_64 rng(3);
  for (int n = 2; n <= 4; ++n) {
    const Mat g = spd(n, rng);
    const Mat gbar = spd(n, rng);
    const Mat a_low = solution_from_metric(g, gbar);
    const Mat a_up = g.inverse() * a_low * g.inverse();
    const ReconstructedMetric back = metric_from_solution(g, a_up);
    CHECK(back.riemannian());
    CHECK((back.value - gbar).norm() < 1e-10 * gbar.norm());
    // The trivial solution a = g^{-1} gives ḡ = g.
    CHECK((metric_from_solution(g, g.inverse()).value - g).norm() < 1e-10 * g.norm());
    // a ↦ c a gives ḡ ↦ c^{-(n+1)} ḡ.
    const double c = 2.0;
    const Mat scaled = metric_from_solution(g, c * a_up).value;
    CHECK((scaled - std::pow(c, -(n + 1)) * gbar).norm() < 1e-10 * gbar.norm());
  }
}

TEST_CASE("projective difference vanishes exactly for projective changes") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  const int n = 3;
  Tensor3 gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) gamma(i, j, k) = gamma(i, k, j) = normal(rng);
  Vec psi(n);
  for (int i = 0; i < n; ++i) psi[i] = normal(rng);
  Tensor3 bar = gamma;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bar(i, i, j) += psi[j];
      bar(i, j, i) += psi[j];
    }
  CHECK(projective_difference(gamma, bar).max_abs() < 1e-14);
  Tensor3 other = gamma;
  other(0, 1, 2) += 0.1;
  other(0, 2, 1) += 0.1;
  CHECK(projective_difference(gamma, other).max_abs() > 0.05);
}

TEST_CASE("Sinjukov residual of known solutions on the plane") {
  MetricField g{2, [](const ChartPoint&) -> Mat { return Mat::Identity(2, 2); }, {}};
  const ChartPoint x = (Vec(2) << 0.4, -0.3).finished();
  // a_ij = x_i x_j with λ_i = x_i solves the equation on flat space.
  const LoweredSolutionField good = [](const ChartPoint& p) {
    return LoweredSolution{p * p.transpose(), p};
  };
  CHECK(sinjukov_residual(g, good, x) < 1e-8);
  const LoweredSolutionField bad = [](const ChartPoint& p) {
    return LoweredSolution{p * p.transpose(), Vec(0.5 * p)};
  };
  CHECK(sinjukov_residual(g, bad, x) > 0.1);
}

TEST_CASE("sectional curvature of the round sphere of radius 2") {
  CatalogEntry e;
  e.kind = MetricKind::sphere_round;
  e.dim = 3;
  e.params = {{"radius", 2.0}};
  const CatalogInstance inst = catalog_instantiate(normalize_entry(e));
  const std::vector<ChartPoint> probes{inst.base, (Vec(3) << 0.3, -0.2, 0.5).finished()};
  const CurvatureReport r = constant_curvature_check(*inst.metric, probes, 1, 1e-5, 6, inst.connection);
  CHECK(r.constant);
  CHECK_FALSE(r.flat);
  CHECK(r.mean_curvature == doctest::Approx(0.25).epsilon(1e-6));
  const CurvatureReport fd = constant_curvature_check(*inst.metric, probes, 1, 1e-4);
  CHECK(fd.mean_curvature == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("flat chart of polar coordinates is the normalised Cartesian map") {
  const CatalogInstance polar = make(MetricKind::diag_poly, 2);
  const ChartPoint x0 = polar.base;
  const FlatChart chart = flat_chart(*polar.connection, x0, polar.box, {}, 3);
  auto cart = [](const ChartPoint& x) {
    return Vec((Vec(2) << x[0] * std::cos(x[1]), x[0] * std::sin(x[1])).finished());
  };
  Mat J0(2, 2);
  J0 << std::cos(x0[1]), -x0[0] * std::sin(x0[1]), std::sin(x0[1]), x0[0] * std::cos(x0[1]);
  for (const ChartPoint& x : {ChartPoint((Vec(2) << 0.8, 0.5).finished()),
                              ChartPoint((Vec(2) << 1.9, -0.7).finished())}) {
    const Vec expected = J0.inverse() * (cart(x) - cart(x0));
    CHECK((chart.map(x) - expected).norm() < 1e-7);
    CHECK(chart.pushed_christoffel(x).max_abs() < 1e-6);
    CHECK(chart.integrability_defect(x) < 1e-6);
  }
}

TEST_CASE("flat chart refuses a curved connection") {
  const CatalogInstance sphere = make(MetricKind::sphere_round, 2);
  try {
    flat_chart(*sphere.connection, sphere.base, sphere.box);
    FAIL("expected not_flat");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_flat);
  }
}

TEST_CASE("projective flatness verdicts") {
  auto run = [](MetricKind kind, int dim) {
    const CatalogInstance inst = make(kind, dim);
    auto rule = std::make_shared<const SphereRule>(inst.quadrature);
    const MetricField gF = averaged_metric_field(inst.norm, rule);
    const std::vector<ChartPoint> probes{inst.base, inst.base + 0.3 * inst.box.half_width()};
    return hilbert4_pipeline(inst.norm, *inst.connection, gF, inst.base, inst.box, probes, 1).verdict;
  };
  CHECK(run(MetricKind::lp_smooth, 2) == ProjectiveVerdict::minkowski);
  CHECK(run(MetricKind::sphere_round, 2) == ProjectiveVerdict::constant_curvature);
  CHECK(run(MetricKind::conformal, 2) == ProjectiveVerdict::not_projectively_flat);
}
