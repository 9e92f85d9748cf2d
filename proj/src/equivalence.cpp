#include "blab/equivalence.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace blab {

Vec SinjukovState::flatten() const {
  const int n = dim();
  Vec s(state_dim(n));
  int c = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s[c++] = a(i, j);
  for (int i = 0; i < n; ++i) s[c++] = lam[i];
  s[c] = mu;
  return s;
}

SinjukovState SinjukovState::unflatten(const Vec& s, int n, double B) {
  if (s.size() != state_dim(n)) {
    throw Error(ErrorKind::configuration, "flattened state has the wrong length");
  }
  SinjukovState st;
  st.a = Mat::Zero(n, n);
  st.lam = Vec::Zero(n);
  int c = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      st.a(i, j) = s[c];
      st.a(j, i) = s[c];
      ++c;
    }
  for (int i = 0; i < n; ++i) st.lam[i] = s[c++];
  st.mu = s[c];
  st.B = B;
  return st;
}

double sinjukov_residual(const MetricField& g, const LoweredSolutionField& sol,
                         const ChartPoint& x, double h) {
  const int n = g.dim;
  const Tensor3 gamma = christoffel_of_metric(g, x, h);
  const Mat gx = g(x);
  const LoweredSolution s0 = sol(x);
  std::vector<Mat> da;
  for (int k = 0; k < n; ++k) {
    const double hk = relative_step(h, x[k]);
    ChartPoint xp = x, xm = x;
    xp[k] += hk;
    xm[k] -= hk;
    da.push_back((sol(xp).a_low - sol(xm).a_low) / (2.0 * hk));
  }
  const Tensor3 nabla_a = covariant_derivative_of_metric(s0.a_low, da, gamma);
  double residual = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double rhs = s0.lam_low[i] * gx(j, k) + s0.lam_low[j] * gx(i, k);
        residual = std::max(residual, std::abs(nabla_a(i, j, k) - rhs));
      }
  return residual;
}

Mat frobenius_generator(const FrobeniusSystem& system, const ChartPoint& x, const Vec& xdot) {
  const int n = system.connection.dim;
  const int D = SinjukovState::state_dim(n);
  if (system.B != 0.0 && !system.metric) {
    throw Error(ErrorKind::configuration, "B != 0 requires a metric to lower indices");
  }
  // C^i_l = Γ^i_kl ẋ^k
  const Mat C = system.connection(x).contract_first_lower(xdot);
  Mat gx;
  if (system.B != 0.0) gx = (*system.metric)(x);

  Mat A(D, D);
  for (int col = 0; col < D; ++col) {
    const SinjukovState s = SinjukovState::unflatten(Vec::Unit(D, col), n);
    SinjukovState d;
    const Mat Ca = C * s.a;
    d.a = s.lam * xdot.transpose() + xdot * s.lam.transpose() - Ca - Ca.transpose();
    d.lam = s.mu * xdot - C * s.lam;
    d.mu = 0.0;
    if (system.B != 0.0) {
      d.lam += system.B * s.a * (gx * xdot);
      d.mu = 2.0 * system.B * (gx * s.lam).dot(xdot);
    }
    A.col(col) = d.flatten();
  }
  return A;
}

SinjukovState frobenius_integrate(const FrobeniusSystem& system, const Curve& path,
                                  const SinjukovState& s0) {
  const int n = system.connection.dim;
  if (s0.dim() != n || s0.a.rows() != n || s0.a.cols() != n) {
    throw Error(ErrorKind::configuration, "initial state dimension does not match the connection");
  }
  if (!s0.a.allFinite() || !s0.lam.allFinite() || !std::isfinite(s0.mu)) {
    throw Error(ErrorKind::configuration, "initial state must be finite");
  }
  const Mat out = integrate_along_curve(
      path, Mat(s0.flatten()), system.integrator,
      [&system](const ChartPoint& x, const Vec& xdot, const Mat& s) -> Mat {
        return frobenius_generator(system, x, xdot) * s;
      });
  return SinjukovState::unflatten(out.col(0), n, system.B);
}

Mat monodromy(const FrobeniusSystem& system, const Curve& loop) {
  if (!loop.closed()) throw Error(ErrorKind::configuration, "monodromy needs a closed loop");
  const int D = SinjukovState::state_dim(system.connection.dim);
  return integrate_along_curve(
      loop, Mat::Identity(D, D), system.integrator,
      [&system](const ChartPoint& x, const Vec& xdot, const Mat& s) -> Mat {
        return frobenius_generator(system, x, xdot) * s;
      });
}

MobilityResult degree_of_mobility(const FrobeniusSystem& system, const std::vector<Curve>& loops,
                                  double svd_relative) {
  if (loops.size() < 3) {
    throw Error(ErrorKind::configuration, "degree of mobility needs at least 3 loops");
  }
  const int D = SinjukovState::state_dim(system.connection.dim);
  Mat stacked(static_cast<Eigen::Index>(loops.size()) * D, D);
  for (std::size_t l = 0; l < loops.size(); ++l) {
    stacked.middleRows(static_cast<Eigen::Index>(l) * D, D) =
        monodromy(system, loops[l]) - Mat::Identity(D, D);
  }
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();

  MobilityResult r;
  r.loops = static_cast<int>(loops.size());
  r.certified = system.B == 0.0;
  r.singular_values.assign(sv.data(), sv.data() + sv.size());
  // Monodromies are O(1) operators, so the scale never drops below 1.
  const double scale = std::max(sv.maxCoeff(), 1.0);
  r.threshold = svd_relative * scale;
  double above_min = scale;
  double below_max = 0.0;
  std::vector<int> fixed;
  for (int i = 0; i < D; ++i) {
    if (sv[i] <= r.threshold) {
      fixed.push_back(i);
      below_max = std::max(below_max, sv[i]);
    } else {
      above_min = std::min(above_min, sv[i]);
    }
    if (sv[i] > r.threshold / 10.0 && sv[i] < r.threshold * 10.0) r.indeterminate = true;
  }
  r.degree = static_cast<int>(fixed.size());
  r.gap = above_min / std::max(below_max, std::numeric_limits<double>::min());
  r.basis = Mat(D, r.degree);
  for (int c = 0; c < r.degree; ++c) {
    r.basis.col(c) = svd.matrixV().col(fixed[static_cast<std::size_t>(c)]);
  }
  return r;
}

namespace {

void count_signature(const Mat& m, int& positive, int& negative) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  positive = negative = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()[i] > 0.0) ++positive;
    else ++negative;
  }
}

}  // namespace

ReconstructedMetric metric_from_solution(const Mat& g, const Mat& a_up) {
  const Mat a_low = g * a_up * g;
  const double det_a = a_low.determinant();
  const double det_g = g.determinant();
  const double scale_a = std::pow(a_low.cwiseAbs().maxCoeff(), static_cast<double>(a_low.rows()));
  if (!std::isfinite(det_a) || std::abs(det_a) <= 1e-12 * scale_a) {
    throw Error(ErrorKind::degenerate_solution, "degenerate solution (det a = 0)");
  }
  if (det_g == 0.0) throw Error(ErrorKind::degenerate_metric, "degenerate metric (det g = 0)");
  ReconstructedMetric r;
  const Mat gbar = std::abs(det_g / det_a) * g * a_low.inverse() * g;
  r.value = 0.5 * (gbar + gbar.transpose());
  count_signature(r.value, r.positive, r.negative);
  return r;
}

Mat solution_from_metric(const Mat& g, const Mat& g_bar) {
  const double n = static_cast<double>(g.rows());
  const double factor = std::pow(std::abs(g_bar.determinant() / g.determinant()), 1.0 / (n + 1.0));
  const Mat a = factor * g * g_bar.inverse() * g;
  return 0.5 * (a + a.transpose());
}

Tensor3 projective_difference(const Tensor3& gamma, const Tensor3& gamma_bar) {
  const int n = gamma.dim();
  const Tensor3 d = gamma - gamma_bar;
  Vec trace = Vec::Zero(n);
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a) trace[j] += d(a, j, a);
  Tensor3 p = d;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double correction = ((i == k ? trace[j] : 0.0) + (i == j ? trace[k] : 0.0)) / (n + 1.0);
        p(i, j, k) -= correction;
      }
  return p;
}

double projective_residual(const ConnectionField& gamma, const ConnectionField& gamma_bar,
                           const ChartPoint& x) {
  return projective_difference(gamma(x), gamma_bar(x)).max_abs();
}

CurvatureReport constant_curvature_check(const MetricField& g,
                                         const std::vector<ChartPoint>& probes,
                                         std::uint64_t seed, double tolerance,
                                         int planes_per_probe,
                                         const std::optional<ConnectionField>& gamma) {
  const int n = g.dim;
  const ConnectionField connection = gamma ? *gamma : levi_civita(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> ks;
  for (const auto& x : probes) {
    const Mat gx = g(x);
    const Tensor4 r = lower_first_index(riemann_curvature(connection, x), gx);
    for (int p = 0; p < planes_per_probe; ++p) {
      Vec u(n), v(n);
      for (int i = 0; i < n; ++i) {
        u[i] = normal(rng);
        v[i] = normal(rng);
      }
      double num = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) num += r(i, j, k, l) * u[i] * v[j] * u[k] * v[l];
      const double uu = u.dot(gx * u), vv = v.dot(gx * v), uv = u.dot(gx * v);
      ks.push_back(num / (uu * vv - uv * uv));
    }
  }
  CurvatureReport report;
  report.samples = ks.size();
  if (ks.empty()) return report;
  double sum = 0.0;
  for (double k : ks) sum += k;
  report.mean_curvature = sum / static_cast<double>(ks.size());
  for (double k : ks) {
    report.max_deviation = std::max(report.max_deviation, std::abs(k - report.mean_curvature));
    report.max_abs_curvature = std::max(report.max_abs_curvature, std::abs(k));
  }
  report.constant = report.max_deviation <= tolerance * std::max(1.0, std::abs(report.mean_curvature));
  report.flat = report.max_abs_curvature <= tolerance;
  return report;
}

FlatChart::FlatChart(ConnectionField gamma, ChartPoint base, FlatChartOptions options)
    : gamma_(std::move(gamma)), base_(std::move(base)), options_(options) {}

std::pair<Mat, Vec> FlatChart::coframe_and_map(const ChartPoint& x) const {
  const int n = gamma_.dim;
  Mat state(n, n + 1);
  state.leftCols(n) = Mat::Identity(n, n);
  state.col(n).setZero();
  if ((x - base_).norm() == 0.0) return {state.leftCols(n), state.col(n)};
  const Curve path = Curve::segment(base_, x);
  const Mat out = integrate_along_curve(
      path, state, options_.integrator,
      [this, n](const ChartPoint& p, const Vec& pdot, const Mat& s) -> Mat {
        Mat d(n, n + 1);
        const Mat theta = s.leftCols(n);
        d.leftCols(n) = theta * gamma_(p).contract_first_lower(pdot);
        d.col(n) = theta * pdot;
        return d;
      });
  return {out.leftCols(n), out.col(n)};
}

Vec FlatChart::map(const ChartPoint& x) const { return coframe_and_map(x).second; }

Mat FlatChart::jacobian(const ChartPoint& x) const { return coframe_and_map(x).first; }

Tensor3 FlatChart::pushed_christoffel(const ChartPoint& x) const {
  const int n = gamma_.dim;
  const Mat theta = jacobian(x);
  const Tensor3 g = gamma_(x);
  // X^a_jk = θ^a_i Γ^i_jk − ∂_j θ^a_k
  Tensor3 X(n);
  for (int j = 0; j < n; ++j) {
    const double hj = relative_step(options_.derivative_step, x[j]);
    ChartPoint xp = x, xm = x;
    xp[j] += hj;
    xm[j] -= hj;
    const Mat dtheta = (jacobian(xp) - jacobian(xm)) / (2.0 * hj);
    for (int a = 0; a < n; ++a)
      for (int k = 0; k < n; ++k) {
        double v = -dtheta(a, k);
        for (int i = 0; i < n; ++i) v += theta(a, i) * g(i, j, k);
        X(a, j, k) = v;
      }
  }
  const Mat E = theta.inverse();
  Tensor3 out(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double v = 0.0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) v += X(a, j, k) * E(j, b) * E(k, c);
        out(a, b, c) = v;
      }
  return out;
}

double FlatChart::integrability_defect(const ChartPoint& x) const {
  const int n = gamma_.dim;
  const Mat theta = jacobian(x);
  Mat fd(n, n);
  for (int j = 0; j < n; ++j) {
    const double hj = relative_step(options_.derivative_step, x[j]);
    ChartPoint xp = x, xm = x;
    xp[j] += hj;
    xm[j] -= hj;
    fd.col(j) = (map(xp) - map(xm)) / (2.0 * hj);
  }
  return (fd - theta).cwiseAbs().maxCoeff();
}

FlatChart flat_chart(const ConnectionField& gamma, const ChartPoint& base, const Box& box,
                     const FlatChartOptions& options, std::uint64_t seed) {
  const int n = gamma.dim;
  std::vector<ChartPoint> probes{base};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.1, 0.9);
  for (int p = 0; p < 8; ++p) {
    ChartPoint q(n);
    for (int k = 0; k < n; ++k) q[k] = box.lower[k] + unit(rng) * (box.upper[k] - box.lower[k]);
    probes.push_back(std::move(q));
  }
  double curvature = 0.0;
  for (const auto& q : probes) curvature = std::max(curvature, riemann_curvature(gamma, q).max_abs());
  if (curvature > options.curvature_tolerance) {
    std::ostringstream msg;
    msg << "not flat: max |R| = " << curvature;
    throw Error(ErrorKind::not_flat, msg.str());
  }
  LoopFamilyOptions loops_opt;
  loops_opt.rectangle_scales = {0.3, 0.6};
  loops_opt.random_loops = 2;
  for (const auto& loop : standard_loop_family(base, box, loops_opt, seed)) {
    const Mat T = transport_matrix(gamma, loop, options.integrator);
    const double defect = (T - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (defect > options.holonomy_tolerance) {
      std::ostringstream msg;
      msg << "holonomy obstruction: transport around a test loop differs from identity by " << defect;
      throw Error(ErrorKind::holonomy_obstruction, msg.str());
    }
  }
  return FlatChart(gamma, base, options);
}

double max_pushed_christoffel(const FlatChart& chart, const std::vector<ChartPoint>& probes) {
  double m = 0.0;
  for (const auto& x : probes) m = std::max(m, chart.pushed_christoffel(x).max_abs());
  return m;
}

MinkowskiReport minkowski_report(const NormField& F, const FlatChart& chart,
                                 const std::vector<ChartPoint>& probes, std::uint64_t seed,
                                 double tolerance, int directions) {
  const int n = F.dim;
  const auto etas = [&] {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<Vec> out;
    for (int d = 0; d < directions; ++d) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v[i] = normal(rng);
      out.push_back(v.normalized());
    }
    return out;
  }();
  std::vector<Mat> frames;
  for (const auto& x : probes) frames.push_back(chart.jacobian(x).inverse());

  MinkowskiReport report;
  for (const auto& eta : etas) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double v = F(probes[p], frames[p] * eta);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    report.max_variation = std::max(report.max_variation, (hi - lo) / hi);
  }
  report.minkowski = report.max_variation <= tolerance;
  return report;
}

const char* to_string(ProjectiveVerdict v) {
  switch (v) {
    case ProjectiveVerdict::minkowski: return "Minkowski";
    case ProjectiveVerdict::not_minkowski: return "not Minkowski";
    case ProjectiveVerdict::not_projectively_flat: return "not projectively flat";
    case ProjectiveVerdict::constant_curvature: return "constant curvature";
  }
  return "unknown";
}

Hilbert4Result hilbert4_pipeline(const NormField& F, const ConnectionField& gamma,
                                 const MetricField& g, const ChartPoint& base, const Box& box,
                                 const std::vector<ChartPoint>& probes, std::uint64_t seed,
                                 const Hilbert4Options& options) {
  Hilbert4Result result;
  result.curvature =
      constant_curvature_check(g, probes, seed, options.curvature_tolerance, 6, gamma);
  if (!result.curvature.constant) {
    result.verdict = ProjectiveVerdict::not_projectively_flat;
    result.detail = "averaged metric has non-constant sectional curvature";
    return result;
  }
  if (!result.curvature.flat) {
    result.verdict = ProjectiveVerdict::constant_curvature;
    result.detail = "averaged metric has constant nonzero curvature";
    return result;
  }
  try {
    const FlatChart chart = flat_chart(gamma, base, box, options.chart, seed);
    result.pushed_christoffel = max_pushed_christoffel(chart, probes);
    result.minkowski = minkowski_report(F, chart, probes, seed, options.minkowski_tolerance);
    result.verdict = result.minkowski->minkowski ? ProjectiveVerdict::minkowski
                                                 : ProjectiveVerdict::not_minkowski;
    result.detail = result.minkowski->minkowski ? "F is translation invariant in the flat chart"
                                                : "F varies in the flat chart";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::not_flat && e.kind() != ErrorKind::holonomy_obstruction) throw;
    result.verdict = ProjectiveVerdict::not_projectively_flat;
    result.detail = e.what();
  }
  return result;
}

}  // namespace blab
