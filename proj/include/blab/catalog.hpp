#pragma once

// Built-in families of metrics and norms with their associated connections
// and declared properties.

#include "blab/averaging.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace blab {

enum class MetricKind {
  euclidean,
  conformal,
  diag_poly,
  sphere_round,
  lp_smooth,
  segment_norm,
  berwald_product,
  randers_control,
};

const char* to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& name, const std::string& path = "metric.kind");

struct CatalogFlags {
  bool is_berwald = false;
  bool is_riemannian = false;
  bool expected_flat = false;

  bool operator==(const CatalogFlags&) const = default;
};

/// Kind-specific parameters live in `params` as JSON. Parameters missing from
/// the config are filled with defaults by `normalize_entry`.
///
///   euclidean        {}
///   conformal        {linear: [n], quadratic: [[n x n]], sine: s}
///                    g = exp(2f) I, f = linear·x + ½ xᵀ quadratic x + s sin(x¹)
///   diag_poly        {coefficients: [[c0, c1, ...] per diagonal entry]}
///                    g_ii = Σ_p c_p (x¹)^p
///   sphere_round     {radius: R}   stereographic chart, g = 4R²/(1+|x|²)² I
///   lp_smooth        {m: m, scales: [n]}   F = (Σ (ξ_i / s_i)^{2m})^{1/2m}
///   segment_norm     {vertices: [[x, y], ...], epsilon: ε}   smoothed polygon gauge (n = 2)
///   berwald_product  {factor_dim: k, radius: R, m: m}
///                    F^{2m} = g₁(ξ_A, ξ_A)^m + Σ ξ_B^{2m}, g₁ round sphere on the first k coordinates
///   randers_control  {epsilon: ε, slope: c}   F = |ξ| + ε c x¹ ξ²
struct CatalogEntry {
  MetricKind kind = MetricKind::euclidean;
  int dim = 2;
  nlohmann::json params = nlohmann::json::object();
  CatalogFlags flags;
  std::string name;  // label used in reports

  bool operator==(const CatalogEntry&) const = default;
};

/// Fills defaults, validates parameters (errors carry the field path) and
/// computes the declared flags unless `keep_flags` is set.
CatalogEntry normalize_entry(CatalogEntry entry, bool keep_flags = false);

CatalogFlags default_flags(const CatalogEntry& entry);
Box default_box(MetricKind kind, int dim);

// Degree of mobility of the associated connection with B = 0: the full
// (n+1)(n+2)/2 when flat, the holonomy-invariant symmetric forms of the
// product for berwald_product, 1 otherwise.
int default_expected_mobility(const CatalogEntry& entry);

// Constant nonzero sectional curvature (sphere_round only).
bool expected_constant_curvature(const CatalogEntry& entry);

struct CatalogInstance {
  CatalogEntry entry;
  NormField norm;
  // Associated connection, present iff the entry is flagged Berwald.
  std::optional<ConnectionField> connection;
  // Connection used for negative controls when there is no associated one.
  ConnectionField candidate;
  // The underlying Riemannian metric for Riemannian kinds.
  std::optional<MetricField> metric;
  Box box;
  ChartPoint base;
  IndicatrixQuadrature quadrature;
};

/// Evaluators for a validated entry. `box` overrides the default chart box;
/// range-dependent parameters (diag_poly positivity, randers |β| < 1) are
/// checked against it.
CatalogInstance catalog_instantiate(const CatalogEntry& entry,
                                    const std::optional<Box>& box = std::nullopt);

/// The entries exercised by the selftest.
std::vector<CatalogEntry> builtin_catalog();

// Catalog-entry JSON ({kind, dim, params, flags?, name?}); unknown keys are
// rejected with their path.
CatalogEntry entry_from_json(const nlohmann::json& j, const std::string& path = "metric");
nlohmann::json entry_to_json(const CatalogEntry& entry);

}  // namespace blab
