#pragma once

// Berwald-property checks: transport invariance of F, quadraticity of the
// geodesic spray, holonomy sampling and the Riemannian ratio test.

#include "blab/finsler.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace blab {

enum class Verdict { pass, fail, inconclusive };

const char* to_string(Verdict v);

struct TransportCheck {
  int trials = 0;
  int skipped = 0;
  double max_violation = 0.0;  // max |F(end, τv) − F(start, v)| / F(start, v)
  std::vector<double> violations;
};

/// Random cubic curves through 4 uniform points of the box, random vectors,
/// transported with Γ. More than half the trials failing to integrate raises
/// an `inconclusive` error.
TransportCheck berwald_transport_check(const NormField& F, const ConnectionField& gamma,
                                       const Box& box, int trials, std::uint64_t seed,
                                       const IntegratorSettings& settings = {});

struct SprayCheck {
  double residual = 0.0;       // max deviation from the best quadratic fit
  double max_magnitude = 0.0;  // max |G| over accepted directions
  int accepted = 0;
  int rejected = 0;
  std::vector<std::string> diagnostics;
  Tensor3 fitted_connection;  // Γ^i_jk read off the quadratic fit (G = ½Γξξ)
};

/// Spray coefficients of F² at one point,
///   G^i = ½ b^{il} (∂_{x^k}∂_{ξ^l}F² ξ^k − ∂_{x^l}F²),
/// and their deviation from a quadratic form over the directions. Directions
/// with min-eig(b) < reject_threshold·trace(b)/n are rejected.
SprayCheck spray_quadraticity_check(const NormField& F, const ChartPoint& x,
                                    const std::vector<Vec>& directions, double h = 1e-5,
                                    double reject_threshold = 1e-3);

Vec spray_coefficients(const NormField& F, const ChartPoint& x, const Vec& xi, double h = 1e-5);

std::vector<Vec> random_directions(int n, int count, std::uint64_t seed);

struct BerwaldReport {
  double max_transport_violation = 0.0;
  double quadraticity_residual = 0.0;
  Verdict verdict = Verdict::fail;
};

BerwaldReport berwald_report(const TransportCheck& transport, double spray_residual,
                             double tolerance);

struct HolonomyProbe {
  ChartPoint base;
  std::vector<Mat> transports;
  std::vector<double> singular_values;  // of the stacked loop logarithms
  int algebra_dim = 0;
  int estimated_orbit_dim = 0;
  double max_orthogonality_defect = 0.0;
  bool metric_preserved = true;
  std::vector<std::string> diagnostics;

  // Heuristic: orbit of dimension n - 1 through a generic unit vector.
  bool transitive() const { return estimated_orbit_dim == static_cast<int>(base.size()) - 1; }
};

HolonomyProbe holonomy_probe(const ConnectionField& gamma, const MetricField& g,
                             const ChartPoint& base, const std::vector<Curve>& loops,
                             std::uint64_t seed, const IntegratorSettings& settings = {},
                             double orthogonality_tolerance = 1e-6, double svd_relative = 1e-7);

struct RatioReport {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread = 0.0;  // (max − min) / max
  bool riemannian_compatible = false;
};

/// Samples the g-unit sphere at x and compares F(ξ)² / g(ξ, ξ).
RatioReport riemannian_ratio_test(const NormField& F, const MetricField& g, const ChartPoint& x,
                                  int samples, std::uint64_t seed, double tolerance = 1e-6);

}  // namespace blab
