#include "blab/tensor_core.hpp"

#include <random>
#include <sstream>

namespace blab {

ConnectionField ConnectionField::flat(int n) {
  return ConnectionField{n, [n](const ChartPoint&) { return Tensor3(n); }};
}

Curve::Curve(std::vector<ChartPoint> nodes, Interpolation interpolation)
    : nodes_(std::move(nodes)), interpolation_(interpolation) {
  if (nodes_.size() < 2) {
    throw Error(ErrorKind::configuration, "curve needs at least two nodes");
  }
  for (const auto& p : nodes_) {
    if (p.size() != nodes_.front().size() || !p.allFinite()) {
      throw Error(ErrorKind::configuration, "curve nodes must be finite and of equal dimension");
    }
  }
}

Curve Curve::segment(const ChartPoint& a, const ChartPoint& b) {
  return Curve({a, b}, Interpolation::polyline);
}

bool Curve::closed() const {
  return (nodes_.front() - nodes_.back()).lpNorm<Eigen::Infinity>() <= 1e-14;
}

Vec Curve::tangent(std::size_t i) const {
  const std::size_t last = nodes_.size() - 1;
  if (i > 0 && i < last) return 0.5 * (nodes_[i + 1] - nodes_[i - 1]);
  if (closed() && last >= 2) return 0.5 * (nodes_[1] - nodes_[last - 1]);
  if (i == 0) return nodes_[1] - nodes_[0];
  return nodes_[last] - nodes_[last - 1];
}

std::pair<ChartPoint, Vec> Curve::segment_point(std::size_t s, double u) const {
  const double scale = static_cast<double>(segments());
  const Vec& p0 = nodes_[s];
  const Vec& p1 = nodes_[s + 1];
  if (interpolation_ == Interpolation::polyline || nodes_.size() == 2) {
    return {p0 + u * (p1 - p0), scale * (p1 - p0)};
  }
  const Vec m0 = tangent(s);
  const Vec m1 = tangent(s + 1);
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  const double d00 = 6 * u2 - 6 * u, d10 = 3 * u2 - 4 * u + 1;
  const double d01 = -6 * u2 + 6 * u, d11 = 3 * u2 - 2 * u;
  ChartPoint x = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1;
  Vec v = scale * (d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1);
  return {std::move(x), std::move(v)};
}

ChartPoint Curve::position(double t) const {
  const double scaled = std::clamp(t, 0.0, 1.0) * segments();
  const std::size_t s = std::min(static_cast<std::size_t>(scaled), segments() - 1);
  return segment_point(s, scaled - static_cast<double>(s)).first;
}

Vec Curve::velocity(double t) const {
  const double scaled = std::clamp(t, 0.0, 1.0) * segments();
  const std::size_t s = std::min(static_cast<std::size_t>(scaled), segments() - 1);
  return segment_point(s, scaled - static_cast<double>(s)).second;
}

Curve Curve::reversed() const {
  std::vector<ChartPoint> rev(nodes_.rbegin(), nodes_.rend());
  return Curve(std::move(rev), interpolation_);
}

double relative_step(double h, double coordinate) {
  return h * std::max(1.0, std::abs(coordinate));
}

std::vector<Mat> metric_derivatives(const MetricField& g, const ChartPoint& x, double h) {
  if (g.derivatives) return g.derivatives(x);
  std::vector<Mat> d;
  d.reserve(static_cast<std::size_t>(g.dim));
  for (int k = 0; k < g.dim; ++k) {
    const double hk = relative_step(h, x[k]);
    ChartPoint xp = x, xm = x;
    xp[k] += hk;
    xm[k] -= hk;
    Mat dk = (g(xp) - g(xm)) / (2.0 * hk);
    if (!dk.allFinite()) {
      throw Error(ErrorKind::evaluation_failure, "non-finite metric derivative");
    }
    d.push_back(std::move(dk));
  }
  return d;
}

namespace {

void require_nondegenerate(const Mat& g) {
  const double scale = std::pow(g.cwiseAbs().maxCoeff(), static_cast<double>(g.rows()));
  const double det = g.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12 * std::max(scale, 1e-300)) {
    throw Error(ErrorKind::degenerate_metric, "degenerate metric (|det g| below threshold)");
  }
}

}  // namespace

Tensor3 christoffel_of_metric(const MetricField& g, const ChartPoint& x, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::configuration, "step size must be positive");
  const int n = g.dim;
  const Mat gx = g(x);
  if (!gx.allFinite()) throw Error(ErrorKind::evaluation_failure, "non-finite metric value");
  require_nondegenerate(gx);
  const Mat ginv = gx.inverse();
  const auto d = metric_derivatives(g, x, h);

  // Γ_ljk = ½ (∂_j g_lk + ∂_k g_lj − ∂_l g_jk), then raise l.
  Tensor3 lowered(n);
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        const double v = 0.5 * (d[j](l, k) + d[k](l, j) - d[l](j, k));
        lowered(l, j, k) = v;
        lowered(l, k, j) = v;
      }
  Tensor3 gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(i, l) * lowered(l, j, k);
        gamma(i, j, k) = s;
        gamma(i, k, j) = s;
      }
  return gamma;
}

ConnectionField levi_civita(MetricField g, double h) {
  const int n = g.dim;
  return ConnectionField{n, [g = std::move(g), h](const ChartPoint& x) {
                           return christoffel_of_metric(g, x, h);
                         }};
}

Tensor4 riemann_curvature(const ConnectionField& gamma, const ChartPoint& x, double h) {
  const int n = gamma.dim;
  const Tensor3 g0 = gamma(x);
  // dG[k](i, l, j) = ∂_k Γ^i_lj
  std::vector<Tensor3> dG;
  dG.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double hk = relative_step(h, x[k]);
    ChartPoint xp = x, xm = x;
    xp[k] += hk;
    xm[k] -= hk;
    Tensor3 diff = gamma(xp) - gamma(xm);
    diff *= 1.0 / (2.0 * hk);
    if (!std::isfinite(diff.max_abs())) {
      throw Error(ErrorKind::evaluation_failure, "non-finite connection derivative");
    }
    dG.push_back(std::move(diff));
  }
  Tensor4 r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
          double v = dG[k](i, l, j) - dG[l](i, k, j);
          for (int m = 0; m < n; ++m) {
            v += g0(i, k, m) * g0(m, l, j) - g0(i, l, m) * g0(m, k, j);
          }
          r(i, j, k, l) = v;
          r(i, j, l, k) = -v;
        }
  return r;
}

Tensor4 lower_first_index(const Tensor4& r, const Mat& g) {
  const int n = r.dim();
  Tensor4 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += g(i, m) * r(m, j, k, l);
          out(i, j, k, l) = s;
        }
  return out;
}

Mat transport_matrix(const ConnectionField& gamma, const Curve& curve,
                     const IntegratorSettings& settings) {
  const int n = gamma.dim;
  return integrate_along_curve(
      curve, Mat::Identity(n, n), settings,
      [&gamma](const ChartPoint& x, const Vec& xdot, const Mat& v) -> Mat {
        return -gamma(x).contract_first_lower(xdot) * v;
      });
}

Vec parallel_transport(const ConnectionField& gamma, const Curve& curve, const Vec& v0,
                       const IntegratorSettings& settings) {
  Mat out = integrate_along_curve(
      curve, Mat(v0), settings,
      [&gamma](const ChartPoint& x, const Vec& xdot, const Mat& v) -> Mat {
        return -gamma(x).contract_first_lower(xdot) * v;
      });
  return out.col(0);
}

GeodesicResult connection_geodesic(const ConnectionField& gamma, const ChartPoint& x0,
                                   const Vec& xi0, double T, const IntegratorSettings& settings,
                                   const std::optional<Box>& bounds) {
  if (!(T > 0.0)) throw Error(ErrorKind::configuration, "geodesic length T must be positive");
  if (settings.steps_per_unit < 1) {
    throw Error(ErrorKind::integration_failure, "step count below 1 (step-size underflow)");
  }
  const int n = gamma.dim;
  const int steps = std::max(1, static_cast<int>(std::ceil(settings.steps_per_unit * T)));
  const double dt = T / steps;

  auto rhs = [&](const Vec& s) {
    Vec out(2 * n);
    const Vec x = s.head(n);
    const Vec v = s.tail(n);
    out.head(n) = v;
    out.tail(n) = -gamma(x).contract_first_lower(v) * v;
    return out;
  };

  Vec state(2 * n);
  state << x0, xi0;
  std::vector<ChartPoint> samples{x0};
  samples.reserve(static_cast<std::size_t>(steps) + 1);
  bool truncated = false;
  double reached = 0.0;
  for (int step = 0; step < steps; ++step) {
    const Vec k1 = rhs(state);
    const Vec k2 = rhs(state + 0.5 * dt * k1);
    const Vec k3 = rhs(state + 0.5 * dt * k2);
    const Vec k4 = rhs(state + dt * k3);
    const Vec next = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
      throw Error(ErrorKind::integration_failure, "non-finite geodesic state");
    }
    if (bounds && !bounds->contains(next.head(n))) {
      truncated = true;
      break;
    }
    state = next;
    samples.push_back(state.head(n));
    reached = (step + 1) * dt;
  }
  if (samples.size() < 2) samples.push_back(samples.front());
  return GeodesicResult{Curve(std::move(samples)), truncated, reached};
}

Curve rectangle_loop(const ChartPoint& base, int i, int j, double a, double b) {
  ChartPoint p1 = base, p2 = base, p3 = base;
  p1[i] += a;
  p2[i] += a;
  p2[j] += b;
  p3[j] += b;
  return Curve({base, p1, p2, p3, base}, Interpolation::polyline);
}

Curve spline_loop(const ChartPoint& base, const std::vector<ChartPoint>& via) {
  std::vector<ChartPoint> nodes{base};
  nodes.insert(nodes.end(), via.begin(), via.end());
  nodes.push_back(base);
  return Curve(std::move(nodes), Interpolation::cubic);
}

std::vector<Curve> standard_loop_family(const ChartPoint& base, const Box& box,
                                        const LoopFamilyOptions& options, std::uint64_t seed) {
  const int n = box.dim();
  const Vec hw = box.half_width();
  std::vector<Curve> loops;
  for (double scale : options.rectangle_scales) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double a = scale * hw[i];
        double b = scale * hw[j];
        if (base[i] + a > box.upper[i]) a = -a;
        if (base[j] + b > box.upper[j]) b = -b;
        loops.push_back(rectangle_loop(base, i, j, a, b));
      }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int r = 0; r < options.random_loops; ++r) {
    std::vector<ChartPoint> via;
    for (int p = 0; p < 3; ++p) {
      ChartPoint q(n);
      for (int k = 0; k < n; ++k) {
        q[k] = std::clamp(base[k] + options.random_scale * hw[k] * unit(rng),
                          box.lower[k], box.upper[k]);
      }
      via.push_back(std::move(q));
    }
    loops.push_back(spline_loop(base, via));
  }
  return loops;
}

}  // namespace blab
