#pragma once

// Chart-level tensor calculus: metrics, connections, curvature, parallel
// transport and connection geodesics. Everything else builds on this.

#include "blab/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace blab {

enum class Signature { riemannian, pseudo };

struct MetricField {
  int dim = 0;
  std::function<Mat(const ChartPoint&)> eval;
  // Optional analytic first derivatives: element k holds ∂_k g.
  std::function<std::vector<Mat>(const ChartPoint&)> derivatives;
  Signature signature = Signature::riemannian;

  Mat operator()(const ChartPoint& x) const { return eval(x); }
};

struct ConnectionField {
  int dim = 0;
  std::function<Tensor3(const ChartPoint&)> eval;

  Tensor3 operator()(const ChartPoint& x) const { return eval(x); }

  static ConnectionField flat(int n);
};

struct IntegratorSettings {
  // Fixed RK4 steps per unit curve parameter.
  int steps_per_unit = 1000;
};

enum class Interpolation { polyline, cubic };

/// Path through chart nodes with uniform parametrisation on [0, 1]. Cubic
/// curves use Catmull-Rom tangents (periodic when the curve is closed).
class Curve {
 public:
  Curve(std::vector<ChartPoint> nodes, Interpolation interpolation = Interpolation::polyline);

  static Curve segment(const ChartPoint& a, const ChartPoint& b);

  int dim() const { return static_cast<int>(nodes_.front().size()); }
  std::size_t segments() const { return nodes_.size() - 1; }
  bool closed() const;
  Interpolation interpolation() const { return interpolation_; }
  const std::vector<ChartPoint>& nodes() const { return nodes_; }

  ChartPoint position(double t) const;
  Vec velocity(double t) const;

  // Position and d/dt velocity at local parameter u ∈ [0, 1] of segment s.
  std::pair<ChartPoint, Vec> segment_point(std::size_t s, double u) const;

  Curve reversed() const;

 private:
  Vec tangent(std::size_t i) const;

  std::vector<ChartPoint> nodes_;
  Interpolation interpolation_;
};

/// Integrates dS/dt = rhs(x(t), x'(t), S) along the curve with fixed-step
/// RK4, segment by segment so polyline corners fall on step boundaries.
template <class Rhs>
Mat integrate_along_curve(const Curve& curve, Mat state, const IntegratorSettings& settings,
                          Rhs&& rhs) {
  if (settings.steps_per_unit < 1) {
    throw Error(ErrorKind::integration_failure, "step count below 1 (step-size underflow)");
  }
  const std::size_t segs = curve.segments();
  const int per_segment = std::max<int>(
      1, static_cast<int>(std::ceil(static_cast<double>(settings.steps_per_unit) / segs)));
  const double du = 1.0 / per_segment;
  const double dt = du / static_cast<double>(segs);
  for (std::size_t s = 0; s < segs; ++s) {
    for (int step = 0; step < per_segment; ++step) {
      const double u0 = step * du;
      const auto [x0, v0] = curve.segment_point(s, u0);
      const auto [xm, vm] = curve.segment_point(s, u0 + 0.5 * du);
      const auto [x1, v1] = curve.segment_point(s, u0 + du);
      const Mat k1 = rhs(x0, v0, state);
      const Mat k2 = rhs(xm, vm, Mat(state + 0.5 * dt * k1));
      const Mat k3 = rhs(xm, vm, Mat(state + 0.5 * dt * k2));
      const Mat k4 = rhs(x1, v1, Mat(state + dt * k3));
      state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!state.allFinite()) {
      throw Error(ErrorKind::integration_failure, "non-finite state during curve integration");
    }
  }
  return state;
}

// Central-difference step for coordinate k: h scaled by max(1, |x_k|).
double relative_step(double h, double coordinate);

/// ∂_k g for k = 0..n-1, analytic when the field supplies derivatives.
std::vector<Mat> metric_derivatives(const MetricField& g, const ChartPoint& x, double h = 1e-5);

/// Levi-Civita coefficients Γ^i_jk = ½ g^il (∂_j g_lk + ∂_k g_lj − ∂_l g_jk).
Tensor3 christoffel_of_metric(const MetricField& g, const ChartPoint& x, double h = 1e-5);

ConnectionField levi_civita(MetricField g, double h = 1e-5);

/// R^i_jkl = ∂_k Γ^i_lj − ∂_l Γ^i_kj + Γ^i_km Γ^m_lj − Γ^i_lm Γ^m_kj.
Tensor4 riemann_curvature(const ConnectionField& gamma, const ChartPoint& x, double h = 1e-4);

/// Lowers the first index with g: R_ijkl = g_im R^m_jkl.
Tensor4 lower_first_index(const Tensor4& r, const Mat& g);

Vec parallel_transport(const ConnectionField& gamma, const Curve& curve, const Vec& v0,
                       const IntegratorSettings& settings = {});

// Transport of the coordinate frame; column j is the image of e_j.
Mat transport_matrix(const ConnectionField& gamma, const Curve& curve,
                     const IntegratorSettings& settings = {});

struct GeodesicResult {
  Curve curve;
  bool truncated = false;
  double reached_parameter = 0.0;
};

/// RK4 solution of x'' + Γ(x)(x', x') = 0 on [0, T], sampled at every step.
/// Leaving `bounds` truncates the curve and sets the flag.
GeodesicResult connection_geodesic(const ConnectionField& gamma, const ChartPoint& x0,
                                   const Vec& xi0, double T,
                                   const IntegratorSettings& settings = {},
                                   const std::optional<Box>& bounds = std::nullopt);

// Closed loops based at a point, used for holonomy and monodromy sampling.
Curve rectangle_loop(const ChartPoint& base, int i, int j, double a, double b);
Curve spline_loop(const ChartPoint& base, const std::vector<ChartPoint>& via);

struct LoopFamilyOptions {
  std::vector<double> rectangle_scales{0.15, 0.3, 0.5};
  int random_loops = 8;
  double random_scale = 0.5;
};

/// Coordinate-plane rectangles at each scale (as a fraction of the box
/// half-width) plus seeded random spline loops, all inside the box.
std::vector<Curve> standard_loop_family(const ChartPoint& base, const Box& box,
                                        const LoopFamilyOptions& options, std::uint64_t seed);

}  // namespace blab
