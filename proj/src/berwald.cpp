#include "blab/berwald.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace blab {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

TransportCheck berwald_transport_check(const NormField& F, const ConnectionField& gamma,
                                       const Box& box, int trials, std::uint64_t seed,
                                       const IntegratorSettings& settings) {
  if (trials < 1) throw Error(ErrorKind::configuration, "trials must be at least 1");
  const int n = F.dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;

  TransportCheck check;
  check.trials = trials;
  for (int t = 0; t < trials; ++t) {
    std::vector<ChartPoint> nodes;
    for (int p = 0; p < 4; ++p) {
      ChartPoint q(n);
      for (int k = 0; k < n; ++k) q[k] = box.lower[k] + unit(rng) * (box.upper[k] - box.lower[k]);
      nodes.push_back(std::move(q));
    }
    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = normal(rng);
    try {
      const Curve curve(nodes, Interpolation::cubic);
      const Vec tv = parallel_transport(gamma, curve, v, settings);
      const double before = F(nodes.front(), v);
      const double after = F(nodes.back(), tv);
      const double violation = std::abs(after - before) / before;
      if (!std::isfinite(violation)) throw Error(ErrorKind::evaluation_failure, "non-finite F");
      check.violations.push_back(violation);
      check.max_violation = std::max(check.max_violation, violation);
    } catch (const Error&) {
      ++check.skipped;
    }
  }
  if (2 * check.skipped > trials) {
    throw Error(ErrorKind::inconclusive, "inconclusive: more than half of the transport trials failed");
  }
  return check;
}

std::vector<Vec> random_directions(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vec> out;
  for (int c = 0; c < count; ++c) {
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = normal(rng);
    out.push_back(u.normalized());
  }
  return out;
}

namespace {

double square_at(const NormField& F, const ChartPoint& x, const Vec& xi) {
  const double v = F(x, xi);
  return v * v;
}

struct SprayParts {
  Mat b;
  Vec bracket;
};

SprayParts spray_parts(const NormField& F, const ChartPoint& x, const Vec& xi, double h) {
  const int n = F.dim;
  const LocalNorm local = F.at(x);
  SprayParts parts;
  parts.b = hessian_of_square(local, xi);
  Mat mixed(n, n);  // mixed(k, l) = ∂_{x^k} ∂_{ξ^l} F²
  Vec dx(n);        // ∂_{x^l} F²
  for (int k = 0; k < n; ++k) {
    const double hk = relative_step(h, x[k]);
    ChartPoint xp = x, xm = x;
    xp[k] += hk;
    xm[k] -= hk;
    const LocalNorm lp = F.at(xp);
    const LocalNorm lm = F.at(xm);
    mixed.row(k) = ((gradient_of_square(lp, xi) - gradient_of_square(lm, xi)) / (2.0 * hk)).transpose();
    dx[k] = (square_at(F, xp, xi) - square_at(F, xm, xi)) / (2.0 * hk);
  }
  parts.bracket = mixed.transpose() * xi - dx;
  return parts;
}

}  // namespace

Vec spray_coefficients(const NormField& F, const ChartPoint& x, const Vec& xi, double h) {
  const SprayParts parts = spray_parts(F, x, xi, h);
  return 0.5 * parts.b.ldlt().solve(parts.bracket);
}

SprayCheck spray_quadraticity_check(const NormField& F, const ChartPoint& x,
                                    const std::vector<Vec>& directions, double h,
                                    double reject_threshold) {
  const int n = F.dim;
  const int monomials = n * (n + 1) / 2;
  SprayCheck check;
  check.fitted_connection = Tensor3(n);

  std::vector<Vec> accepted_dirs;
  std::vector<Vec> sprays;
  for (const auto& xi : directions) {
    const SprayParts parts = spray_parts(F, x, xi, h);
    Eigen::SelfAdjointEigenSolver<Mat> es(parts.b, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < reject_threshold * parts.b.trace() / n) {
      ++check.rejected;
      std::ostringstream msg;
      msg << "direction rejected: fundamental form degenerate (min-eig " << min_eig << ")";
      check.diagnostics.push_back(msg.str());
      continue;
    }
    Vec G = 0.5 * parts.b.ldlt().solve(parts.bracket);
    check.max_magnitude = std::max(check.max_magnitude, G.lpNorm<Eigen::Infinity>());
    accepted_dirs.push_back(xi);
    sprays.push_back(std::move(G));
  }
  check.accepted = static_cast<int>(accepted_dirs.size());
  if (check.accepted < monomials) {
    throw Error(ErrorKind::inconclusive,
                "inconclusive: too few nondegenerate directions for a quadratic fit");
  }

  Mat design(check.accepted, monomials);
  for (int r = 0; r < check.accepted; ++r) {
    int c = 0;
    const Vec& xi = accepted_dirs[static_cast<std::size_t>(r)];
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) design(r, c++) = xi[j] * xi[k];
  }
  const Eigen::ColPivHouseholderQR<Mat> qr(design);
  for (int i = 0; i < n; ++i) {
    Vec rhs(check.accepted);
    for (int r = 0; r < check.accepted; ++r) rhs[r] = sprays[static_cast<std::size_t>(r)][i];
    const Vec coef = qr.solve(rhs);
    check.residual = std::max(check.residual, (design * coef - rhs).lpNorm<Eigen::Infinity>());
    int c = 0;
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        const double gamma = (j == k) ? 2.0 * coef[c] : coef[c];
        check.fitted_connection(i, j, k) = gamma;
        check.fitted_connection(i, k, j) = gamma;
        ++c;
      }
  }
  return check;
}

BerwaldReport berwald_report(const TransportCheck& transport, double spray_residual,
                             double tolerance) {
  BerwaldReport r;
  r.max_transport_violation = transport.max_violation;
  r.quadraticity_residual = spray_residual;
  r.verdict = (transport.max_violation <= tolerance && spray_residual <= tolerance) ? Verdict::pass
                                                                                     : Verdict::fail;
  return r;
}

namespace {

int rank_above(const Eigen::VectorXd& sv, double relative, double absolute_floor) {
  if (sv.size() == 0) return 0;
  const double thr = std::max(relative * sv.maxCoeff(), absolute_floor);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > thr) ++r;
  return r;
}

}  // namespace

HolonomyProbe holonomy_probe(const ConnectionField& gamma, const MetricField& g,
                             const ChartPoint& base, const std::vector<Curve>& loops,
                             std::uint64_t seed, const IntegratorSettings& settings,
                             double orthogonality_tolerance, double svd_relative) {
  const int n = gamma.dim;
  const Mat g0 = g(base);
  HolonomyProbe probe;
  probe.base = base;

  Mat logs(static_cast<Eigen::Index>(loops.size()), n * n);
  for (std::size_t l = 0; l < loops.size(); ++l) {
    const Curve& loop = loops[l];
    if (!loop.closed() || (loop.nodes().front() - base).norm() > 1e-12) {
      throw Error(ErrorKind::configuration, "holonomy loops must be closed and based at the base point");
    }
    const Mat T = transport_matrix(gamma, loop, settings);
    const double defect = (T.transpose() * g0 * T - g0).cwiseAbs().maxCoeff() / g0.cwiseAbs().maxCoeff();
    probe.max_orthogonality_defect = std::max(probe.max_orthogonality_defect, defect);
    const Mat A = T.log();
    logs.row(static_cast<Eigen::Index>(l)) = Eigen::Map<const Eigen::RowVectorXd>(A.data(), n * n);
    probe.transports.push_back(T);
  }
  if (probe.max_orthogonality_defect > orthogonality_tolerance) {
    probe.metric_preserved = false;
    std::ostringstream msg;
    msg << "connection does not preserve g (orthogonality defect "
        << probe.max_orthogonality_defect << ")";
    probe.diagnostics.push_back(msg.str());
  }

  // Roughly the accuracy of the fixed-step transport.
  constexpr double kAbsoluteFloor = 1e-8;
  Eigen::JacobiSVD<Mat> svd(logs, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  probe.singular_values.assign(sv.data(), sv.data() + sv.size());
  probe.algebra_dim = rank_above(sv, svd_relative, kAbsoluteFloor);
  if (probe.algebra_dim == 0) return probe;

  // Generic g-unit vector and the tangent span of its orbit.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  v /= std::sqrt(v.dot(g0 * v));
  Mat span(n, probe.algebra_dim);
  for (int a = 0; a < probe.algebra_dim; ++a) {
    const Vec col = svd.matrixV().col(a);
    const Mat A = Eigen::Map<const Mat>(col.data(), n, n);
    span.col(a) = A * v;
  }
  Eigen::JacobiSVD<Mat> orbit(span);
  probe.estimated_orbit_dim = rank_above(orbit.singularValues(), svd_relative, kAbsoluteFloor);
  return probe;
}

RatioReport riemannian_ratio_test(const NormField& F, const MetricField& g, const ChartPoint& x,
                                  int samples, std::uint64_t seed, double tolerance) {
  if (samples < 1) throw Error(ErrorKind::configuration, "samples must be at least 1");
  const int n = F.dim;
  const Mat gx = g(x);
  const Eigen::LLT<Mat> llt(gx);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::degenerate_metric, "ratio test needs a positive definite metric");
  }
  const LocalNorm local = F.at(x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RatioReport r;
  r.min_ratio = std::numeric_limits<double>::infinity();
  r.max_ratio = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = normal(rng);
    u.normalize();
    // ξ = L^{-T} u has g(ξ, ξ) = 1.
    const Vec xi = llt.matrixU().solve(u);
    const double f = local(xi);
    const double ratio = f * f / xi.dot(gx * xi);
    r.min_ratio = std::min(r.min_ratio, ratio);
    r.max_ratio = std::max(r.max_ratio, ratio);
  }
  r.spread = (r.max_ratio - r.min_ratio) / r.max_ratio;
  r.riemannian_compatible = r.spread <= tolerance;
  return r;
}

}  // namespace blab
