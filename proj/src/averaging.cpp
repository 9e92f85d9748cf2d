#include "blab/averaging.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace blab {

namespace {

constexpr int kPanelOrder = 8;

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

Rule1D composite_gauss(double a, double b, int resolution) {
  const int order = std::min(resolution, kPanelOrder);
  const int panels = (resolution + order - 1) / order;
  std::vector<double> gx, gw;
  gauss_legendre(order, gx, gw);
  Rule1D rule;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    for (int i = 0; i < order; ++i) {
      rule.nodes.push_back(lo + 0.5 * width * (gx[static_cast<std::size_t>(i)] + 1.0));
      rule.weights.push_back(0.5 * width * gw[static_cast<std::size_t>(i)]);
    }
  }
  return rule;
}

Rule1D midpoint(double a, double b, int resolution) {
  Rule1D rule;
  const double width = (b - a) / resolution;
  for (int i = 0; i < resolution; ++i) {
    rule.nodes.push_back(a + (i + 0.5) * width);
    rule.weights.push_back(width);
  }
  return rule;
}

// Neumaier-compensated accumulation in a fixed order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double radial_factor(const LocalNorm& p, const Vec& u, int n) {
  const double pu = p(u);
  if (!(pu > 0.0) || !std::isfinite(pu)) {
    throw Error(ErrorKind::definiteness_violation,
                "definiteness violation: norm vanishes or is invalid on a sphere node");
  }
  return std::pow(pu, -static_cast<double>(n));
}

}  // namespace

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(m), 0.0);
  weights.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= m; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = m * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    nodes[static_cast<std::size_t>(i)] = -z;
    nodes[static_cast<std::size_t>(m - 1 - i)] = z;
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(m - 1 - i)] = w;
  }
}

double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

IndicatrixQuadrature IndicatrixQuadrature::defaults(int n) {
  IndicatrixQuadrature q;
  q.dim = n;
  if (n == 2) {
    q.scheme = QuadratureScheme::gauss_legendre_product;
    q.resolution = {256};
  } else if (n == 3) {
    q.scheme = QuadratureScheme::gauss_legendre_product;
    q.resolution = {64, 128};
  } else if (n == 4) {
    q.scheme = QuadratureScheme::gauss_legendre_product;
    q.resolution = {48, 48, 96};
  } else {
    q.scheme = QuadratureScheme::monte_carlo;
    q.resolution = {100000};
  }
  return q;
}

SphereRule::SphereRule(const IndicatrixQuadrature& q) : dim_(q.dim) {
  const int n = q.dim;
  if (n < 2) throw Error(ErrorKind::configuration, "quadrature dimension must be at least 2");

  if (q.scheme == QuadratureScheme::monte_carlo) {
    if (q.resolution.size() != 1 || q.resolution[0] < 1) {
      throw Error(ErrorKind::configuration, "monte_carlo quadrature needs one positive sample count");
    }
    const int samples = q.resolution[0];
    std::mt19937_64 rng(q.seed);
    std::normal_distribution<double> normal;
    const double w = sphere_area(n) / samples;
    for (int s = 0; s < samples; ++s) {
      Vec u(n);
      for (int i = 0; i < n; ++i) u[i] = normal(rng);
      nodes_.push_back(u.normalized());
      weights_.push_back(w);
    }
    return;
  }

  if (static_cast<int>(q.resolution.size()) != n - 1) {
    throw Error(ErrorKind::configuration,
                "quadrature resolution needs one entry per angular dimension (n - 1)");
  }
  for (int r : q.resolution) {
    if (r < 4) throw Error(ErrorKind::configuration, "quadrature resolution must be at least 4");
  }
  const bool gauss = q.scheme == QuadratureScheme::gauss_legendre_product;
  std::vector<Rule1D> rules;
  for (int k = 0; k < n - 2; ++k) {
    const int m = q.resolution[static_cast<std::size_t>(k)];
    rules.push_back(gauss ? composite_gauss(0.0, std::numbers::pi, m)
                          : midpoint(0.0, std::numbers::pi, m));
  }
  const int m_phi = q.resolution.back();
  rules.push_back(gauss ? composite_gauss(0.0, 2.0 * std::numbers::pi, m_phi)
                        : midpoint(0.0, 2.0 * std::numbers::pi, m_phi));

  // Odometer over the tensor-product index.
  std::vector<std::size_t> idx(rules.size(), 0);
  while (true) {
    Vec u(n);
    double weight = 1.0;
    double sin_prod = 1.0;
    for (int k = 0; k < n - 2; ++k) {
      const double th = rules[static_cast<std::size_t>(k)].nodes[idx[static_cast<std::size_t>(k)]];
      u[k] = sin_prod * std::cos(th);
      weight *= rules[static_cast<std::size_t>(k)].weights[idx[static_cast<std::size_t>(k)]] *
                std::pow(std::sin(th), n - 2 - k);
      sin_prod *= std::sin(th);
    }
    const std::size_t last = rules.size() - 1;
    const double phi = rules[last].nodes[idx[last]];
    u[n - 2] = sin_prod * std::cos(phi);
    u[n - 1] = sin_prod * std::sin(phi);
    weight *= rules[last].weights[idx[last]];
    nodes_.push_back(std::move(u));
    weights_.push_back(weight);

    std::size_t d = rules.size();
    while (d > 0) {
      --d;
      if (++idx[d] < rules[d].nodes.size()) break;
      idx[d] = 0;
      if (d == 0) return;
    }
  }
}

double SphereRule::total_weight() const {
  CompensatedSum s;
  for (double w : weights_) s.add(w);
  return s.value();
}

double ball_volume(const NormField& p, const ChartPoint& x, const SphereRule& rule) {
  const LocalNorm local = p.at(x);
  const int n = rule.dim();
  CompensatedSum s;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    s.add(rule.weights()[q] * radial_factor(local, rule.nodes()[q], n));
  }
  return s.value() / n;
}

double indicatrix_integrate(const NormField& p, const ChartPoint& x,
                            const std::function<double(const Vec&)>& f, const SphereRule& rule) {
  const LocalNorm local = p.at(x);
  const int n = rule.dim();
  CompensatedSum vol, integral;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec& u = rule.nodes()[q];
    const double rn = radial_factor(local, u, n);
    const double w = rule.weights()[q] * rn;
    vol.add(w / n);
    integral.add(w * f(u / local(u)));
  }
  return integral.value() / vol.value();
}

AveragedMetric averaged_metric(const NormField& p, const ChartPoint& x, const SphereRule& rule,
                               double hessian_step) {
  const LocalNorm local = p.at(x);
  const int n = rule.dim();
  if (p.dim != n) throw Error(ErrorKind::configuration, "quadrature and norm dimensions differ");
  CompensatedSum vol;
  std::vector<CompensatedSum> entries(static_cast<std::size_t>(n * (n + 1) / 2));
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec& u = rule.nodes()[q];
    const double w = rule.weights()[q] * radial_factor(local, u, n);
    vol.add(w / n);
    // b is 0-homogeneous, so b at u/p(u) equals b at u.
    const Mat b = hessian_of_square(local, u, hessian_step);
    std::size_t e = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) entries[e++].add(w * b(i, j));
  }
  const double volume = vol.value();
  Mat g(n, n);
  std::size_t e = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      g(i, j) = entries[e++].value() / volume;
      g(j, i) = g(i, j);
    }
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  if (!g.allFinite() || es.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorKind::averaging_failed,
                "averaging failed: result is not positive definite");
  }
  return AveragedMetric{g, volume};
}

MetricField averaged_metric_field(NormField p, std::shared_ptr<const SphereRule> rule) {
  const int n = p.dim;
  return MetricField{n,
                     [p = std::move(p), rule = std::move(rule)](const ChartPoint& x) {
                       return averaged_metric(p, x, *rule).value;
                     },
                     {},
                     Signature::riemannian};
}

Tensor3 covariant_derivative_of_metric(const Mat& g, const std::vector<Mat>& dg,
                                       const Tensor3& gamma) {
  const int n = static_cast<int>(g.rows());
  Tensor3 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = dg[static_cast<std::size_t>(k)](i, j);
        for (int m = 0; m < n; ++m) {
          v -= gamma(m, k, i) * g(m, j) + gamma(m, k, j) * g(i, m);
        }
        out(i, j, k) = v;
      }
  return out;
}

Theorem1Report verify_theorem1(const NormField& p, const ConnectionField& gamma,
                               const std::vector<ChartPoint>& probes, const SphereRule& rule,
                               double h) {
  auto shared = std::make_shared<const SphereRule>(rule);
  const MetricField gF = averaged_metric_field(p, shared);
  Theorem1Report report;
  report.probes = probes.size();
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& x : probes) {
    const Mat g = gF(x);
    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = std::min(report.min_eigenvalue, es.eigenvalues().minCoeff());
    const auto dg = metric_derivatives(gF, x, h);
    const Tensor3 target = gamma(x);

    // Levi-Civita coefficients of g_F from the same derivative samples.
    const int n = p.dim;
    const Mat ginv = g.inverse();
    Tensor3 lc(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) {
            s += ginv(i, l) * 0.5 *
                 (dg[static_cast<std::size_t>(j)](l, k) + dg[static_cast<std::size_t>(k)](l, j) -
                  dg[static_cast<std::size_t>(l)](j, k));
          }
          lc(i, j, k) = s;
        }
    report.connection_residual = std::max(report.connection_residual, (lc - target).max_abs());
    report.parallel_residual = std::max(
        report.parallel_residual, covariant_derivative_of_metric(g, dg, target).max_abs());
  }
  return report;
}

}  // namespace blab
