#include "blab/finsler.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

namespace blab {

NormField riemannian_norm(MetricField g) {
  const int n = g.dim;
  return NormField{n, true, [g = std::move(g), n](const ChartPoint& x) {
                     const Mat gx = g(x);
                     LocalNorm p;
                     p.dim = n;
                     p.value = [gx](const Vec& xi) {
                       return std::sqrt(std::max(0.0, xi.dot(gx * xi)));
                     };
                     p.grad_sq = [gx](const Vec& xi) -> Vec { return 2.0 * gx * xi; };
                     p.hess_sq = [gx](const Vec&) -> Mat { return 2.0 * gx; };
                     return p;
                   }};
}

double FundamentalForm::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(matrix, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Vec gradient_of_square(const LocalNorm& p, const Vec& xi, double h) {
  if (xi.norm() == 0.0) {
    throw Error(ErrorKind::cone_vertex, "evaluation at the vertex of the cone (xi = 0)");
  }
  if (p.grad_sq) return p.grad_sq(xi);
  const int n = p.dim;
  const double step = h * xi.norm();
  Vec g(n);
  for (int i = 0; i < n; ++i) {
    Vec a = xi, b = xi;
    a[i] += step;
    b[i] -= step;
    const double pa = p(a), pb = p(b);
    g[i] = (pa * pa - pb * pb) / (2.0 * step);
  }
  return g;
}

Mat hessian_of_square(const LocalNorm& p, const Vec& xi, double h) {
  if (xi.norm() == 0.0) {
    throw Error(ErrorKind::cone_vertex, "evaluation at the vertex of the cone (xi = 0)");
  }
  if (p.hess_sq) return p.hess_sq(xi);
  const int n = p.dim;
  const double step = h * xi.norm();
  auto sq = [&p](const Vec& v) {
    const double val = p(v);
    return val * val;
  };
  Mat hess(n, n);
  const double f0 = sq(xi);
  for (int i = 0; i < n; ++i) {
    Vec a = xi, b = xi;
    a[i] += step;
    b[i] -= step;
    hess(i, i) = (sq(a) - 2.0 * f0 + sq(b)) / (step * step);
    for (int j = i + 1; j < n; ++j) {
      Vec pp = xi, pm = xi, mp = xi, mm = xi;
      pp[i] += step; pp[j] += step;
      pm[i] += step; pm[j] -= step;
      mp[i] -= step; mp[j] += step;
      mm[i] -= step; mm[j] -= step;
      hess(i, j) = (sq(pp) - sq(pm) - sq(mp) + sq(mm)) / (4.0 * step * step);
      hess(j, i) = hess(i, j);
    }
  }
  if (!hess.allFinite()) throw Error(ErrorKind::evaluation_failure, "non-finite Hessian of p^2");
  return 0.5 * (hess + hess.transpose());
}

FundamentalForm fundamental_form(const NormField& p, const TangentVector& at, double h) {
  const LocalNorm local = p.at(at.base);
  return FundamentalForm{at, hessian_of_square(local, at.components, h)};
}

AxiomReport norm_axiom_probe(const NormField& p, const ChartPoint& x, int trials,
                             std::uint64_t seed, double tolerance) {
  if (trials < 1) throw Error(ErrorKind::configuration, "trials must be at least 1");
  const int n = p.dim;
  const LocalNorm local = p.at(x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> lambda_dist(0.0, 10.0);
  auto random_vec = [&] {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };

  AxiomReport report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const Vec xi = random_vec();
    const Vec eta = random_vec();
    const double lambda = lambda_dist(rng);
    const double pxi = local(xi);
    const double peta = local(eta);
    const double scale = xi.norm();

    const double hom = std::abs(local(lambda * xi) - lambda * pxi) / std::max(lambda * scale, 1e-300);
    report.homogeneity_violation = std::max(report.homogeneity_violation, hom);

    const double tri = (local(xi + eta) - pxi - peta) / std::max(xi.norm() + eta.norm(), 1e-300);
    report.triangle_violation = std::max(report.triangle_violation, tri);

    // p must be positive off the origin; negative or vanishing values violate (c).
    double def = 0.0;
    if (pxi <= 0.0) def = 1.0 + std::abs(pxi) / scale;
    report.definiteness_violation = std::max(report.definiteness_violation, def);
  }
  report.passed = report.homogeneity_violation <= tolerance &&
                  report.triangle_violation <= tolerance &&
                  report.definiteness_violation <= tolerance;
  return report;
}

NondegeneracyReport nondegeneracy_probe(const NormField& p, const ChartPoint& x, int samples,
                                        std::uint64_t seed, double threshold) {
  if (samples < 1) throw Error(ErrorKind::configuration, "samples must be at least 1");
  const int n = p.dim;
  const LocalNorm local = p.at(x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  NondegeneracyReport report;
  report.samples.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    Vec u(n);
    if (n == 2) {
      const double angle = 2.0 * std::numbers::pi * s / samples;
      u << std::cos(angle), std::sin(angle);
    } else {
      for (int i = 0; i < n; ++i) u[i] = normal(rng);
      u.normalize();
    }
    const Mat b = hessian_of_square(local, u);
    Eigen::SelfAdjointEigenSolver<Mat> es(b, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    const double mean_eig = b.trace() / n;
    DirectionSample sample;
    sample.direction = u / local(u);
    sample.min_eigenvalue = min_eig;
    sample.relative_min_eigenvalue = mean_eig > 0.0 ? min_eig / mean_eig : 0.0;
    sample.degenerate = min_eig < threshold * mean_eig;
    if (sample.degenerate) ++report.degenerate_count;
    report.best_relative = std::max(report.best_relative, sample.relative_min_eigenvalue);
    report.samples.push_back(std::move(sample));
  }
  report.any_nondegenerate = report.degenerate_count < report.samples.size();
  return report;
}

}  // namespace blab
