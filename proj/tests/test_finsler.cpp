#include "blab/catalog.hpp"
#include "blab/finsler.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace blab;

namespace {

CatalogInstance make(MetricKind kind, int dim, nlohmann::json params = nlohmann::json::object()) {
  CatalogEntry e;
  e.kind = kind;
  e.dim = dim;
  e.params = std::move(params);
  return catalog_instantiate(normalize_entry(e));
}

// Hessian of p² by plain second differences of the value (independent of the
// library's analytic formula).
Mat fd_hessian(const LocalNorm& p, const Vec& xi, double h) {
  const int n = static_cast<int>(xi.size());
  auto sq = [&](const Vec& v) { return p(v) * p(v); };
  Mat H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec a = xi, b = xi, c = xi, d = xi;
      a[i] += h; a[j] += h;
      b[i] += h; b[j] -= h;
      c[i] -= h; c[j] += h;
      d[i] -= h; d[j] -= h;
      H(i, j) = (sq(a) - sq(b) - sq(c) + sq(d)) / (4 * h * h);
    }
  return H;
}

}  // namespace

TEST_CASE("analytic Hessians of the catalog norms agree with finite differences") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (const CatalogEntry& e : builtin_catalog()) {
    const CatalogInstance inst = catalog_instantiate(e);
    const LocalNorm p = inst.norm.at(inst.box.center());
    for (int t = 0; t < 5; ++t) {
      Vec xi(e.dim);
      for (int i = 0; i < e.dim; ++i) xi[i] = normal(rng);
      const Mat h = hessian_of_square(p, xi);
      const Mat ref = fd_hessian(p, xi, 1e-4);
      CAPTURE(e.name);
      CHECK((h - ref).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("fundamental form satisfies b(xi, xi) = 2 p(xi)^2 and is 0-homogeneous") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  for (const CatalogEntry& e : builtin_catalog()) {
    const CatalogInstance inst = catalog_instantiate(e);
    for (int t = 0; t < 5; ++t) {
      Vec xi(e.dim);
      for (int i = 0; i < e.dim; ++i) xi[i] = normal(rng);
      const FundamentalForm b = fundamental_form(inst.norm, TangentVector{inst.base, xi});
      const double p = inst.norm(inst.base, xi);
      CAPTURE(e.name);
      CHECK(xi.dot(b.matrix * xi) == doctest::Approx(2.0 * p * p).epsilon(1e-6));
      const FundamentalForm b3 = fundamental_form(inst.norm, TangentVector{inst.base, 3.0 * xi});
      CHECK((b3.matrix - b.matrix).cwiseAbs().maxCoeff() < 1e-6 * b.matrix.cwiseAbs().maxCoeff());
      CHECK(b.min_eigenvalue() > -1e-8);
    }
  }
}

TEST_CASE("evaluation at the cone vertex is an error") {
  const CatalogInstance inst = make(MetricKind::lp_smooth, 2);
  try {
    hessian_of_square(inst.norm.at(inst.base), Vec::Zero(2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::cone_vertex);
  }
}

TEST_CASE("every catalog norm passes the axiom probe") {
  for (const CatalogEntry& e : builtin_catalog()) {
    const CatalogInstance inst = catalog_instantiate(e);
    const AxiomReport r = norm_axiom_probe(inst.norm, inst.base, 200, 9);
    CAPTURE(e.name);
    CHECK(r.passed);
  }
}

TEST_CASE("axiom probe catches a non-convex function") {
  // (|ξ1|^{1/2} + |ξ2|^{1/2})², homogeneous but not subadditive.
  LocalNorm p;
  p.dim = 2;
  p.value = [](const Vec& xi) {
    const double s = std::sqrt(std::abs(xi[0])) + std::sqrt(std::abs(xi[1]));
    return s * s;
  };
  const NormField F{2, false, [p](const ChartPoint&) { return p; }};
  const AxiomReport r = norm_axiom_probe(F, Vec::Zero(2), 200, 1);
  CHECK_FALSE(r.passed);
  CHECK(r.triangle_violation > 0.1);
}

TEST_CASE("quartic norm: axis directions degenerate, diagonals not") {
  const CatalogInstance inst = make(MetricKind::lp_smooth, 2, {{"m", 2}});
  const NondegeneracyReport r = nondegeneracy_probe(inst.norm, inst.base, 8);
  REQUIRE(r.samples.size() == 8);
  for (std::size_t s = 0; s < 8; ++s) {
    // Angles k·π/4: even k are axes.
    CHECK(r.samples[s].degenerate == (s % 2 == 0));
    CHECK(inst.norm(inst.base, r.samples[s].direction) == doctest::Approx(1.0));
  }
  CHECK(r.any_nondegenerate);
  // Diagonal: b has eigenvalues sqrt(2) and 3 sqrt(2), relative minimum 1/2.
  CHECK(r.best_relative == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("Riemannian norm has constant fundamental form 2g") {
  const CatalogInstance inst = make(MetricKind::sphere_round, 2);
  const ChartPoint x = (Vec(2) << 0.3, 0.4).finished();
  const FundamentalForm b = fundamental_form(inst.norm, TangentVector{x, (Vec(2) << 1.0, -2.0).finished()});
  CHECK((b.matrix - 2.0 * (*inst.metric)(x)).cwiseAbs().maxCoeff() < 1e-12);
}
