#pragma once

// Averaged Riemannian metric of a norm field: integrate the fundamental form
// b_ξ = D²(p²) over the indicatrix S₁ = {p = 1} against the volume form
// induced by the volume form Ω that gives the unit ball volume 1.
//
// All integrals are pulled back from the Euclidean sphere S^{n-1} along
// u ↦ u / p(u). With r(u) = 1 / p(u) and σ the round measure,
//
//   vol(B₁)         = ∫ r(u)^n / n dσ(u)
//   ∫_{S₁} f ω      = (1 / vol(B₁)) ∫ f(u / p(u)) r(u)^n dσ(u)
//
// so ∫_{S₁} ω = n for every norm.

#include "blab/finsler.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace blab {

enum class QuadratureScheme { gauss_legendre_product, uniform_angular, monte_carlo };

struct IndicatrixQuadrature {
  QuadratureScheme scheme = QuadratureScheme::gauss_legendre_product;
  // Nodes per angular dimension (polar angles first, azimuth last). For
  // monte_carlo the single entry is the sample count.
  std::vector<int> resolution{256};
  int dim = 2;
  std::uint64_t seed = 0;

  static IndicatrixQuadrature defaults(int n);
};

/// Nodes and positive weights on the Euclidean unit sphere S^{n-1}; the
/// weights sum to its area.
class SphereRule {
 public:
  explicit SphereRule(const IndicatrixQuadrature& quadrature);

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  const std::vector<Vec>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  double total_weight() const;

 private:
  int dim_;
  std::vector<Vec> nodes_;
  std::vector<double> weights_;
};

// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights);

double sphere_area(int n);

double ball_volume(const NormField& p, const ChartPoint& x, const SphereRule& rule);

double indicatrix_integrate(const NormField& p, const ChartPoint& x,
                            const std::function<double(const Vec&)>& f, const SphereRule& rule);

struct AveragedMetric {
  Mat value;
  double ball_volume = 0.0;  // Euclidean volume of B₁ used to normalise Ω
};

AveragedMetric averaged_metric(const NormField& p, const ChartPoint& x, const SphereRule& rule,
                               double hessian_step = 1e-4);

MetricField averaged_metric_field(NormField p, std::shared_ptr<const SphereRule> rule);

struct Theorem1Report {
  std::size_t probes = 0;
  double connection_residual = 0.0;  // max |Γ(g_F) − Γ|
  double parallel_residual = 0.0;    // max |∇_Γ g_F|
  double min_eigenvalue = 0.0;       // smallest eigenvalue of g_F over probes
};

/// Affine-equivalence check of the averaged metric against a claimed
/// associated connection.
Theorem1Report verify_theorem1(const NormField& p, const ConnectionField& gamma,
                               const std::vector<ChartPoint>& probes, const SphereRule& rule,
                               double h = 1e-5);

// (∇_Γ g)_ijk = ∂_k g_ij − Γ^m_ki g_mj − Γ^m_kj g_im
Tensor3 covariant_derivative_of_metric(const Mat& g, const std::vector<Mat>& dg,
                                       const Tensor3& gamma);

}  // namespace blab
