#include "blab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace blab {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::configuration, path + ": " + what);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) bad(path + "." + it.key(), "unknown key");
  }
}

double positive(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "must be a number");
  const double v = j.get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) bad(path, "must be positive and finite");
  return v;
}

int integer(const json& j, const std::string& path, int min) {
  if (!j.is_number_integer()) bad(path, "must be an integer");
  const long long v = j.get<long long>();
  if (v < min || v > 100000000) bad(path, "must be an integer >= " + std::to_string(min));
  return static_cast<int>(v);
}

std::uint64_t unsigned_integer(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  bad(path, "must be a non-negative integer");
}

Vec numbers(const json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    bad(path, "must be an array of " + std::to_string(n) + " numbers");
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    const json& x = j[static_cast<std::size_t>(i)];
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      bad(path + "[" + std::to_string(i) + "]", "must be a finite number");
    }
    v[i] = x.get<double>();
  }
  return v;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

QuadratureScheme scheme_from_string(const std::string& s, const std::string& path) {
  for (QuadratureScheme q : {QuadratureScheme::gauss_legendre_product,
                             QuadratureScheme::uniform_angular, QuadratureScheme::monte_carlo}) {
    if (s == to_string(q)) return q;
  }
  bad(path, "unknown quadrature scheme '" + s + "'");
}

Box parse_box(const json& j, int n) {
  reject_unknown(j, {"lower", "upper"}, "box");
  if (!j.contains("lower") || !j.contains("upper")) bad("box", "needs lower and upper");
  Box b{numbers(j["lower"], n, "box.lower"), numbers(j["upper"], n, "box.upper")};
  for (int k = 0; k < n; ++k) {
    if (!(b.lower[k] < b.upper[k])) bad("box", "must be nonempty (lower < upper) in every coordinate");
  }
  return b;
}

IndicatrixQuadrature parse_quadrature(const json& j, int n) {
  reject_unknown(j, {"scheme", "resolution", "seed"}, "quadrature");
  IndicatrixQuadrature q = IndicatrixQuadrature::defaults(n);
  if (j.contains("scheme")) {
    if (!j["scheme"].is_string()) bad("quadrature.scheme", "must be a string");
    q.scheme = scheme_from_string(j["scheme"].get<std::string>(), "quadrature.scheme");
  }
  if (j.contains("resolution")) {
    const json& r = j["resolution"];
    if (!r.is_array()) bad("quadrature.resolution", "must be an array of integers");
    q.resolution.clear();
    for (std::size_t i = 0; i < r.size(); ++i) {
      q.resolution.push_back(integer(r[i], "quadrature.resolution[" + std::to_string(i) + "]", 1));
    }
  }
  if (j.contains("seed")) q.seed = unsigned_integer(j["seed"], "quadrature.seed");
  if (q.scheme == QuadratureScheme::monte_carlo) {
    if (q.resolution.size() != 1) bad("quadrature.resolution", "monte_carlo takes one sample count");
  } else {
    if (static_cast<int>(q.resolution.size()) != n - 1) {
      bad("quadrature.resolution", "needs n - 1 = " + std::to_string(n - 1) + " entries");
    }
    for (std::size_t i = 0; i < q.resolution.size(); ++i) {
      if (q.resolution[i] < 4) bad("quadrature.resolution[" + std::to_string(i) + "]", "must be at least 4");
    }
  }
  return q;
}

Tolerances parse_tolerances(const json& j) {
  Tolerances t;
  const std::pair<const char*, double*> fields[] = {
      {"berwald", &t.berwald},       {"affine", &t.affine},
      {"ratio", &t.ratio},           {"projective", &t.projective},
      {"curvature", &t.curvature},   {"minkowski", &t.minkowski},
      {"mobility_svd", &t.mobility_svd}, {"nondegeneracy", &t.nondegeneracy},
      {"orthogonality", &t.orthogonality},
  };
  std::set<std::string> allowed;
  for (const auto& f : fields) allowed.insert(f.first);
  reject_unknown(j, allowed, "tolerances");
  for (const auto& f : fields) {
    if (j.contains(f.first)) *f.second = positive(j[f.first], std::string("tolerances.") + f.first);
  }
  return t;
}

CommandOptions parse_options(const json& j) {
  reject_unknown(j,
                 {"trials", "probes", "grid", "spray_directions", "random_loops", "ratio_samples",
                  "nondegeneracy_samples", "B", "expected_mobility", "csv"},
                 "options");
  CommandOptions o;
  if (j.contains("trials")) o.trials = integer(j["trials"], "options.trials", 1);
  if (j.contains("probes")) o.probes = integer(j["probes"], "options.probes", 1);
  if (j.contains("grid")) o.grid = integer(j["grid"], "options.grid", 1);
  if (j.contains("spray_directions")) {
    o.spray_directions = integer(j["spray_directions"], "options.spray_directions", 3);
  }
  if (j.contains("random_loops")) o.random_loops = integer(j["random_loops"], "options.random_loops", 0);
  if (j.contains("ratio_samples")) o.ratio_samples = integer(j["ratio_samples"], "options.ratio_samples", 1);
  if (j.contains("nondegeneracy_samples")) {
    o.nondegeneracy_samples = integer(j["nondegeneracy_samples"], "options.nondegeneracy_samples", 1);
  }
  if (j.contains("B")) {
    if (!j["B"].is_number() || !std::isfinite(j["B"].get<double>())) bad("options.B", "must be a finite number");
    o.B = j["B"].get<double>();
  }
  if (j.contains("expected_mobility") && !j["expected_mobility"].is_null()) {
    o.expected_mobility = integer(j["expected_mobility"], "options.expected_mobility", 0);
  }
  if (j.contains("csv")) {
    if (!j["csv"].is_boolean()) bad("options.csv", "must be a boolean");
    o.csv = j["csv"].get<bool>();
  }
  return o;
}

bool same(const Vec& a, const Vec& b) { return a.size() == b.size() && a == b; }

}  // namespace

const char* to_string(QuadratureScheme scheme) {
  switch (scheme) {
    case QuadratureScheme::gauss_legendre_product: return "gauss_legendre_product";
    case QuadratureScheme::uniform_angular: return "uniform_angular";
    case QuadratureScheme::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::configuration, std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(j, {"metric", "box", "quadrature", "integrator", "seed", "tolerances", "options"},
                 "config");
  if (!j.contains("metric")) bad("metric", "required");
  RunConfig c;
  c.metric = entry_from_json(j["metric"], "metric");
  const int n = c.metric.dim;
  if (j.contains("box")) c.box = parse_box(j["box"], n);
  if (j.contains("quadrature")) c.quadrature = parse_quadrature(j["quadrature"], n);
  if (j.contains("integrator")) {
    reject_unknown(j["integrator"], {"steps_per_unit"}, "integrator");
    if (j["integrator"].contains("steps_per_unit")) {
      c.integrator.steps_per_unit = integer(j["integrator"]["steps_per_unit"], "integrator.steps_per_unit", 1);
    }
  }
  if (j.contains("seed")) c.seed = unsigned_integer(j["seed"], "seed");
  if (j.contains("tolerances")) c.tolerances = parse_tolerances(j["tolerances"]);
  if (j.contains("options")) c.options = parse_options(j["options"]);
  // Range-dependent parameter checks need the box.
  catalog_instantiate(c.metric, c.box);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::configuration, "config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const RunConfig& c) {
  json j;
  j["metric"] = entry_to_json(c.metric);
  if (c.box) j["box"] = json{{"lower", vec_json(c.box->lower)}, {"upper", vec_json(c.box->upper)}};
  if (c.quadrature) {
    j["quadrature"] = json{{"scheme", to_string(c.quadrature->scheme)},
                           {"resolution", c.quadrature->resolution},
                           {"seed", c.quadrature->seed}};
  }
  j["integrator"] = json{{"steps_per_unit", c.integrator.steps_per_unit}};
  j["seed"] = c.seed;
  const Tolerances& t = c.tolerances;
  j["tolerances"] = json{{"berwald", t.berwald},       {"affine", t.affine},
                         {"ratio", t.ratio},           {"projective", t.projective},
                         {"curvature", t.curvature},   {"minkowski", t.minkowski},
                         {"mobility_svd", t.mobility_svd}, {"nondegeneracy", t.nondegeneracy},
                         {"orthogonality", t.orthogonality}};
  const CommandOptions& o = c.options;
  j["options"] = json{{"trials", o.trials},
                      {"probes", o.probes},
                      {"grid", o.grid},
                      {"spray_directions", o.spray_directions},
                      {"random_loops", o.random_loops},
                      {"ratio_samples", o.ratio_samples},
                      {"nondegeneracy_samples", o.nondegeneracy_samples},
                      {"B", o.B},
                      {"csv", o.csv}};
  if (o.expected_mobility) j["options"]["expected_mobility"] = *o.expected_mobility;
  return j;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  auto same_box = [](const std::optional<Box>& x, const std::optional<Box>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (same(x->lower, y->lower) && same(x->upper, y->upper));
  };
  auto same_quadrature = [](const std::optional<IndicatrixQuadrature>& x,
                            const std::optional<IndicatrixQuadrature>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (x->scheme == y->scheme && x->resolution == y->resolution && x->dim == y->dim &&
                  x->seed == y->seed);
  };
  return a.metric == b.metric && same_box(a.box, b.box) && same_quadrature(a.quadrature, b.quadrature) &&
         a.integrator.steps_per_unit == b.integrator.steps_per_unit && a.seed == b.seed &&
         a.tolerances == b.tolerances && a.options == b.options;
}

}  // namespace blab
