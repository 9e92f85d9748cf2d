#pragma once

// Geodesic equivalence machinery: the linear Cauchy-Frobenius system for
// (a^{ij}, λ^i, μ), its monodromy and degree of mobility, the map between
// solutions and metrics, the projective (trace-adjusted difference)
// condition, and the flatness → flat chart → Minkowski pipeline.

#include "blab/averaging.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace blab {

/// Unknowns of the Frobenius system: a^{ij} (indices up), λ^i, μ, and the
/// constant B of the extended system (0 in the Berwald regime).
struct SinjukovState {
  Mat a;
  Vec lam;
  double mu = 0.0;
  double B = 0.0;

  int dim() const { return static_cast<int>(lam.size()); }

  // Layout: upper triangle of a (row-major, i ≤ j), then λ, then μ.
  static int state_dim(int n) { return n * (n + 1) / 2 + n + 1; }
  Vec flatten() const;
  static SinjukovState unflatten(const Vec& s, int n, double B = 0.0);
};

// a_{ij} and λ_i with indices down.
struct LoweredSolution {
  Mat a_low;
  Vec lam_low;
};

using LoweredSolutionField = std::function<LoweredSolution(const ChartPoint&)>;

/// max |a_{ij,k} − λ_i g_{jk} − λ_j g_{ik}| with the covariant derivative of
/// the Levi-Civita connection of g.
double sinjukov_residual(const MetricField& g, const LoweredSolutionField& sol,
                         const ChartPoint& x, double h = 1e-5);

struct FrobeniusSystem {
  ConnectionField connection;
  double B = 0.0;
  // Needed to lower and raise indices when B ≠ 0.
  std::optional<MetricField> metric;
  IntegratorSettings integrator;
};

/// Generator A(x, ẋ) of ds/dt = A s for the flattened state along a curve.
Mat frobenius_generator(const FrobeniusSystem& system, const ChartPoint& x, const Vec& xdot);

SinjukovState frobenius_integrate(const FrobeniusSystem& system, const Curve& path,
                                  const SinjukovState& s0);

/// Monodromy of the flattened state around a closed loop (D × D).
Mat monodromy(const FrobeniusSystem& system, const Curve& loop);

struct MobilityResult {
  int degree = 0;
  Mat basis;  // columns span the joint fixed subspace (flattened states)
  std::vector<double> singular_values;
  double threshold = 0.0;
  double gap = 0.0;
  bool indeterminate = false;
  bool certified = false;  // only B = 0 is certified
  int loops = 0;
};

/// Dimension of the joint fixed subspace of the monodromies of the loops,
/// i.e. an upper bound for the degree of mobility from finitely many loops.
MobilityResult degree_of_mobility(const FrobeniusSystem& system, const std::vector<Curve>& loops,
                                  double svd_relative = 1e-7);

struct ReconstructedMetric {
  Mat value;
  int positive = 0;
  int negative = 0;
  bool riemannian() const { return negative == 0; }
};

/// ḡ = |det g / det a_low| · g a_low⁻¹ g with a_low = g a_up g.
ReconstructedMetric metric_from_solution(const Mat& g, const Mat& a_up);

/// a_ij = |det ḡ / det g|^{1/(n+1)} ḡ^{αβ} g_{αi} g_{βj}.
Mat solution_from_metric(const Mat& g, const Mat& g_bar);

/// Γ − Γ̄ − 1/(n+1) (δ^i_k T_j + δ^i_j T_k) with T_j = (Γ − Γ̄)^α_{jα}.
Tensor3 projective_difference(const Tensor3& gamma, const Tensor3& gamma_bar);

double projective_residual(const ConnectionField& gamma, const ConnectionField& gamma_bar,
                           const ChartPoint& x);

struct CurvatureReport {
  std::size_t samples = 0;
  double mean_curvature = 0.0;
  double max_deviation = 0.0;
  double max_abs_curvature = 0.0;
  bool constant = false;
  bool flat = false;
};

/// Sectional curvatures of g over random 2-planes at the probes. The
/// curvature tensor comes from `gamma` when given (which must be the
/// Levi-Civita connection of g), else from finite differences of g.
CurvatureReport constant_curvature_check(const MetricField& g,
                                         const std::vector<ChartPoint>& probes,
                                         std::uint64_t seed, double tolerance = 1e-5,
                                         int planes_per_probe = 6,
                                         const std::optional<ConnectionField>& gamma = std::nullopt);

struct FlatChartOptions {
  double curvature_tolerance = 1e-5;
  double holonomy_tolerance = 1e-8;
  double derivative_step = 1e-5;
  IntegratorSettings integrator;
};

/// Affine coordinates for a flat connection: the coordinate frame at the base
/// is parallel transported along straight segments and its dual coframe θ
/// integrated, y(x) = ∫ θ(γ) γ̇ dt.
class FlatChart {
 public:
  FlatChart(ConnectionField gamma, ChartPoint base, FlatChartOptions options);

  const ChartPoint& base() const { return base_; }

  Vec map(const ChartPoint& x) const;
  Mat jacobian(const ChartPoint& x) const;  // ∂y/∂x = θ(x)

  // Connection coefficients in the y coordinates at the image of x.
  Tensor3 pushed_christoffel(const ChartPoint& x) const;

  // max |∂y/∂x (finite differences of the map) − θ(x)|
  double integrability_defect(const ChartPoint& x) const;

 private:
  std::pair<Mat, Vec> coframe_and_map(const ChartPoint& x) const;

  ConnectionField gamma_;
  ChartPoint base_;
  FlatChartOptions options_;
};

/// Checks curvature on probes (`not_flat` error above tolerance) and
/// transport around test loops (`holonomy_obstruction` error), then builds the
/// chart.
FlatChart flat_chart(const ConnectionField& gamma, const ChartPoint& base, const Box& box,
                     const FlatChartOptions& options = {}, std::uint64_t seed = 0);

double max_pushed_christoffel(const FlatChart& chart, const std::vector<ChartPoint>& probes);

struct MinkowskiReport {
  double max_variation = 0.0;  // over probe points, relative, worst direction
  bool minkowski = false;
};

/// Pushes F to the flat chart, F̃(y, η) = F(x, θ(x)⁻¹ η), and measures its
/// variation in y over the probes for seeded directions η.
MinkowskiReport minkowski_report(const NormField& F, const FlatChart& chart,
                                 const std::vector<ChartPoint>& probes, std::uint64_t seed,
                                 double tolerance = 1e-6, int directions = 16);

enum class ProjectiveVerdict {
  minkowski,
  not_minkowski,
  not_projectively_flat,
  constant_curvature,
};

const char* to_string(ProjectiveVerdict v);

struct Hilbert4Result {
  ProjectiveVerdict verdict = ProjectiveVerdict::not_projectively_flat;
  CurvatureReport curvature;
  std::optional<MinkowskiReport> minkowski;
  double pushed_christoffel = 0.0;
  std::string detail;
};

struct Hilbert4Options {
  double curvature_tolerance = 1e-5;
  double minkowski_tolerance = 1e-6;
  FlatChartOptions chart;
};

/// Constant-curvature test of the averaged metric g (with curvature computed
/// from its associated connection Γ), then the flat chart of Γ and the
/// translation-invariance test of F.
Hilbert4Result hilbert4_pipeline(const NormField& F, const ConnectionField& gamma,
                                 const MetricField& g, const ChartPoint& base, const Box& box,
                                 const std::vector<ChartPoint>& probes, std::uint64_t seed,
                                 const Hilbert4Options& options = {});

}  // namespace blab
