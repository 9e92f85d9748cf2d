#pragma once

// Norms and Finsler metric fields, the fundamental form D²(p²), and probes
// of the norm axioms and of the nondegeneracy set.

#include "blab/tensor_core.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace blab {

/// The restriction of a Finsler function to one tangent space.
struct LocalNorm {
  int dim = 0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad_sq;  // ∇_ξ p², optional
  std::function<Mat(const Vec&)> hess_sq;  // ∇²_ξ p², optional

  double operator()(const Vec& xi) const { return value(xi); }
};

struct NormField {
  int dim = 0;
  bool x_dependent = true;
  std::function<LocalNorm(const ChartPoint&)> at;

  double operator()(const ChartPoint& x, const Vec& xi) const { return at(x).value(xi); }
};

// F(x, ξ) = sqrt(g_x(ξ, ξ)), with analytic derivatives of F².
NormField riemannian_norm(MetricField g);

struct FundamentalForm {
  TangentVector at;
  Mat matrix;

  double min_eigenvalue() const;
};

/// Gradient of ξ ↦ p(ξ)², analytic when available, else central differences
/// with step h·|ξ|.
Vec gradient_of_square(const LocalNorm& p, const Vec& xi, double h = 1e-6);

/// Hessian of ξ ↦ p(ξ)², analytic when available, else symmetrised central
/// differences with step h·|ξ|. Throws at ξ = 0.
Mat hessian_of_square(const LocalNorm& p, const Vec& xi, double h = 1e-4);

FundamentalForm fundamental_form(const NormField& p, const TangentVector& at, double h = 1e-4);

struct AxiomReport {
  int trials = 0;
  double homogeneity_violation = 0.0;
  double triangle_violation = 0.0;
  double definiteness_violation = 0.0;
  bool passed = false;
};

AxiomReport norm_axiom_probe(const NormField& p, const ChartPoint& x, int trials,
                             std::uint64_t seed, double tolerance = 1e-9);

struct DirectionSample {
  Vec direction;  // point of the indicatrix p = 1
  double min_eigenvalue = 0.0;
  double relative_min_eigenvalue = 0.0;  // min-eig / (trace / n)
  bool degenerate = false;
};

struct NondegeneracyReport {
  std::vector<DirectionSample> samples;
  std::size_t degenerate_count = 0;
  double best_relative = 0.0;
  bool any_nondegenerate = false;
};

/// Scans indicatrix directions (equally spaced angles for n = 2, seeded
/// random directions otherwise) and flags min-eig < threshold·trace(b)/n.
NondegeneracyReport nondegeneracy_probe(const NormField& p, const ChartPoint& x, int samples,
                                        std::uint64_t seed = 0, double threshold = 1e-6);

}  // namespace blab
