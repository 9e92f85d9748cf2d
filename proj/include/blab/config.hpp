#pragma once

// Run configuration: a single strict JSON document. Unknown keys anywhere are
// rejected with their path; omitted keys take the defaults below.
//
// {
//   "metric":      {"kind": "lp_smooth", "dim": 2, "params": {"m": 2}, "flags": {...}, "name": "..."},
//   "box":         {"lower": [...], "upper": [...]},
//   "quadrature":  {"scheme": "gauss_legendre_product", "resolution": [256], "seed": 0},
//   "integrator":  {"steps_per_unit": 1000},
//   "seed":        0,
//   "tolerances":  {"berwald": 1e-6, "affine": 1e-4, ...},
//   "options":     {"trials": 100, "probes": 5, ...}
// }

#include "blab/catalog.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace blab {

struct Tolerances {
  double berwald = 1e-6;     // transport violation and spray residual
  double affine = 1e-4;      // |Γ(g_F) − Γ| and |∇g_F|
  double ratio = 1e-6;       // spread of F²/g_F
  double projective = 1e-5;  // projective residual of reconstructed pairs
  double curvature = 1e-5;   // constant-curvature and flatness tests
  double minkowski = 1e-6;   // variation of F in the flat chart
  double mobility_svd = 1e-7;
  double nondegeneracy = 1e-6;
  double orthogonality = 1e-6;  // holonomy preserving g

  bool operator==(const Tolerances&) const = default;
};

struct CommandOptions {
  int trials = 100;  // transport trials
  int probes = 5;    // probe points
  int grid = 3;      // averaged-metric grid points per axis
  int spray_directions = 24;
  int random_loops = 8;
  int ratio_samples = 64;
  int nondegeneracy_samples = 64;
  double B = 0.0;  // constant of the extended Frobenius system
  std::optional<int> expected_mobility;
  bool csv = true;

  bool operator==(const CommandOptions&) const = default;
};

struct RunConfig {
  CatalogEntry metric;
  std::optional<Box> box;
  std::optional<IndicatrixQuadrature> quadrature;
  IntegratorSettings integrator;
  std::uint64_t seed = 0;
  Tolerances tolerances;
  CommandOptions options;
};

bool operator==(const RunConfig& a, const RunConfig& b);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& config);

const char* to_string(QuadratureScheme scheme);

}  // namespace blab
