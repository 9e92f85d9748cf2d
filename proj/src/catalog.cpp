#include "blab/catalog.hpp"

#include <cmath>
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

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(path, "must be finite");
  return v;
}

int integer_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "must be an integer");
  return j.get<int>();
}

Vec vector_at(const json& j, int n, const std::string& path) {
  if (!j.is_array()) bad(path, "must be an array");
  if (n >= 0 && static_cast<int>(j.size()) != n) {
    bad(path, "must have " + std::to_string(n) + " entries");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number_at(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Mat matrix_at(const json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) bad(path, "must be an n x n array");
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    m.row(i) = vector_at(j[static_cast<std::size_t>(i)], n, path + "[" + std::to_string(i) + "]")
                   .transpose();
  }
  return m;
}

json to_json_vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// ---- parameter sets -------------------------------------------------------

struct ConformalParams {
  Vec linear;
  Mat quadratic;
  double sine = 0.0;
};

struct DiagPolyParams {
  std::vector<Vec> coefficients;
};

struct LpParams {
  int m = 2;
  Vec scales;
};

struct SegmentParams {
  std::vector<Vec> vertices;
  double epsilon = 0.1;
};

struct ProductParams {
  int factor_dim = 2;
  double radius = 1.0;
  int m = 2;
};

struct RandersParams {
  double epsilon = 0.5;
  double slope = 1.0;
};

ConformalParams conformal_params(const CatalogEntry& e) {
  const int n = e.dim;
  const std::string p = "metric.params";
  reject_unknown(e.params, {"linear", "quadratic", "sine"}, p);
  ConformalParams c;
  c.linear = Vec(n);
  for (int i = 0; i < n; ++i) c.linear[i] = 0.3 * std::pow(-2.0 / 3.0, i);
  c.quadratic = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    c.quadratic(i, i) = 0.4 / (i + 1);
    if (i + 1 < n) c.quadratic(i, i + 1) = c.quadratic(i + 1, i) = 0.1;
  }
  c.sine = 0.2;
  if (e.params.contains("linear")) c.linear = vector_at(e.params["linear"], n, p + ".linear");
  if (e.params.contains("quadratic")) {
    c.quadratic = matrix_at(e.params["quadratic"], n, p + ".quadratic");
    if ((c.quadratic - c.quadratic.transpose()).cwiseAbs().maxCoeff() > 0.0) {
      bad(p + ".quadratic", "must be symmetric");
    }
  }
  if (e.params.contains("sine")) c.sine = number_at(e.params["sine"], p + ".sine");
  return c;
}

DiagPolyParams diag_poly_params(const CatalogEntry& e) {
  const int n = e.dim;
  const std::string p = "metric.params";
  reject_unknown(e.params, {"coefficients"}, p);
  DiagPolyParams d;
  if (e.params.contains("coefficients")) {
    const json& c = e.params["coefficients"];
    if (!c.is_array() || static_cast<int>(c.size()) != n) {
      bad(p + ".coefficients", "must hold one polynomial per diagonal entry");
    }
    for (int i = 0; i < n; ++i) {
      const std::string q = p + ".coefficients[" + std::to_string(i) + "]";
      Vec v = vector_at(c[static_cast<std::size_t>(i)], -1, q);
      if (v.size() == 0) bad(q, "must not be empty");
      d.coefficients.push_back(std::move(v));
    }
  } else {
    // Polar coordinates: diag(1, r²) and unit entries beyond.
    d.coefficients.push_back((Vec(1) << 1.0).finished());
    d.coefficients.push_back((Vec(3) << 0.0, 0.0, 1.0).finished());
    for (int i = 2; i < n; ++i) d.coefficients.push_back((Vec(1) << 1.0).finished());
  }
  return d;
}

double sphere_radius(const json& params, const std::string& path) {
  double r = 1.0;
  if (params.contains("radius")) r = number_at(params["radius"], path + ".radius");
  if (r <= 0.0) bad(path + ".radius", "must be positive");
  return r;
}

int power_m(const json& params, const std::string& path) {
  int m = 2;
  if (params.contains("m")) m = integer_at(params["m"], path + ".m");
  if (m < 1) bad(path + ".m", "must be an integer >= 1");
  return m;
}

LpParams lp_params(const CatalogEntry& e) {
  const std::string p = "metric.params";
  reject_unknown(e.params, {"m", "scales"}, p);
  LpParams l;
  l.m = power_m(e.params, p);
  l.scales = Vec::Ones(e.dim);
  if (e.params.contains("scales")) l.scales = vector_at(e.params["scales"], e.dim, p + ".scales");
  for (int i = 0; i < e.dim; ++i) {
    if (l.scales[i] <= 0.0) bad(p + ".scales[" + std::to_string(i) + "]", "must be positive");
  }
  return l;
}

double cross(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

SegmentParams segment_params(const CatalogEntry& e) {
  const std::string p = "metric.params";
  if (e.dim != 2) bad("metric.dim", "segment_norm is defined for n = 2 only");
  reject_unknown(e.params, {"vertices", "epsilon"}, p);
  SegmentParams s;
  if (e.params.contains("epsilon")) s.epsilon = number_at(e.params["epsilon"], p + ".epsilon");
  if (s.epsilon <= 0.0) bad(p + ".epsilon", "smoothing must be positive");
  if (e.params.contains("vertices")) {
    const json& v = e.params["vertices"];
    if (!v.is_array() || v.size() < 3) bad(p + ".vertices", "needs at least 3 vertices");
    for (std::size_t i = 0; i < v.size(); ++i) {
      s.vertices.push_back(vector_at(v[i], 2, p + ".vertices[" + std::to_string(i) + "]"));
    }
  } else {
    for (int k = 0; k < 6; ++k) {
      const double t = k * M_PI / 3.0;
      s.vertices.push_back((Vec(2) << std::cos(t), std::sin(t)).finished());
    }
  }
  const std::size_t K = s.vertices.size();
  for (std::size_t k = 0; k < K; ++k) {
    const Vec& a = s.vertices[k];
    const Vec& b = s.vertices[(k + 1) % K];
    const Vec& c = s.vertices[(k + 2) % K];
    if (cross(a, b) <= 0.0) {
      bad(p + ".vertices", "origin must lie strictly inside the counterclockwise polygon");
    }
    if (cross(b - a, c - b) <= 0.0) bad(p + ".vertices", "polygon must be strictly convex");
  }
  return s;
}

ProductParams product_params(const CatalogEntry& e) {
  const std::string p = "metric.params";
  reject_unknown(e.params, {"factor_dim", "radius", "m"}, p);
  ProductParams q;
  if (e.params.contains("factor_dim")) {
    q.factor_dim = integer_at(e.params["factor_dim"], p + ".factor_dim");
  }
  if (q.factor_dim < 2 || q.factor_dim >= e.dim) {
    bad(p + ".factor_dim", "must satisfy 2 <= factor_dim < dim");
  }
  q.radius = sphere_radius(e.params, p);
  q.m = power_m(e.params, p);
  return q;
}

RandersParams randers_params(const CatalogEntry& e) {
  const std::string p = "metric.params";
  if (e.dim < 2) bad("metric.dim", "randers_control needs n >= 2");
  reject_unknown(e.params, {"epsilon", "slope"}, p);
  RandersParams r;
  if (e.params.contains("epsilon")) r.epsilon = number_at(e.params["epsilon"], p + ".epsilon");
  if (e.params.contains("slope")) r.slope = number_at(e.params["slope"], p + ".slope");
  return r;
}

double poly(const Vec& c, double t) {
  double v = 0.0;
  for (Eigen::Index p = c.size() - 1; p >= 0; --p) v = v * t + c[p];
  return v;
}

double poly_derivative(const Vec& c, double t) {
  double v = 0.0;
  for (Eigen::Index p = c.size() - 1; p >= 1; --p) v = v * t + static_cast<double>(p) * c[p];
  return v;
}

Vec trimmed(const Vec& c) {
  Eigen::Index d = c.size();
  while (d > 1 && c[d - 1] == 0.0) --d;
  return c.head(d);
}

// ---- evaluators -----------------------------------------------------------

// Γ^i_jk = δ^i_j f_k + δ^i_k f_j − δ_jk f_i of exp(2f) δ on the coordinates
// [offset, offset + grad.size()).
void add_conformal_christoffel(Tensor3& gamma, const Vec& grad, int offset) {
  const int k = static_cast<int>(grad.size());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < k; ++l) {
        double v = 0.0;
        if (i == j) v += grad[l];
        if (i == l) v += grad[j];
        if (j == l) v -= grad[i];
        gamma(offset + i, offset + j, offset + l) += v;
      }
}

struct ConformalFactor {
  std::function<double(const ChartPoint&)> f;
  std::function<Vec(const ChartPoint&)> grad;
};

ConformalFactor sphere_factor(double radius) {
  return {[radius](const ChartPoint& x) { return std::log(2.0 * radius) - std::log(1.0 + x.squaredNorm()); },
          [](const ChartPoint& x) -> Vec { return -2.0 * x / (1.0 + x.squaredNorm()); }};
}

MetricField conformal_metric(int n, const ConformalFactor& c) {
  MetricField g;
  g.dim = n;
  g.eval = [n, c](const ChartPoint& x) -> Mat { return std::exp(2.0 * c.f(x)) * Mat::Identity(n, n); };
  g.derivatives = [n, c](const ChartPoint& x) {
    const double e = std::exp(2.0 * c.f(x));
    const Vec df = c.grad(x);
    std::vector<Mat> d;
    for (int k = 0; k < n; ++k) d.push_back(2.0 * df[k] * e * Mat::Identity(n, n));
    return d;
  };
  return g;
}

ConnectionField conformal_connection(int n, const ConformalFactor& c) {
  return ConnectionField{n, [n, c](const ChartPoint& x) {
                           Tensor3 gamma(n);
                           add_conformal_christoffel(gamma, c.grad(x), 0);
                           return gamma;
                         }};
}

// Norm with F^{2m} = P(ξ); derivatives of F² = P^{1/m} from those of P.
LocalNorm power_norm(int n, int m, std::function<double(const Vec&)> P,
                     std::function<Vec(const Vec&)> dP, std::function<Mat(const Vec&)> d2P) {
  const double inv = 1.0 / m;
  LocalNorm p;
  p.dim = n;
  p.value = [P, m](const Vec& xi) { return std::pow(P(xi), 0.5 / m); };
  p.grad_sq = [P, dP, inv](const Vec& xi) -> Vec {
    return inv * std::pow(P(xi), inv - 1.0) * dP(xi);
  };
  p.hess_sq = [P, dP, d2P, inv](const Vec& xi) -> Mat {
    const double v = P(xi);
    const Vec g = dP(xi);
    return inv * std::pow(v, inv - 1.0) * (d2P(xi) + (inv - 1.0) * g * g.transpose() / v);
  };
  return p;
}

NormField lp_norm(int n, const LpParams& l) {
  const int m = l.m;
  const Vec w = l.scales.cwiseInverse();
  auto P = [m, w](const Vec& xi) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) s += std::pow(xi[i] * w[i], 2 * m);
    return s;
  };
  auto dP = [m, w](const Vec& xi) -> Vec {
    Vec g(xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
      g[i] = 2.0 * m * std::pow(xi[i], 2 * m - 1) * std::pow(w[i], 2 * m);
    }
    return g;
  };
  auto d2P = [m, w](const Vec& xi) -> Mat {
    Mat h = Mat::Zero(xi.size(), xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
      h(i, i) = 2.0 * m * (2.0 * m - 1.0) * std::pow(xi[i], 2 * m - 2) * std::pow(w[i], 2 * m);
    }
    return h;
  };
  const LocalNorm local = power_norm(n, m, P, dP, d2P);
  return NormField{n, false, [local](const ChartPoint&) { return local; }};
}

NormField segment_norm(const SegmentParams& s) {
  // Facet functionals: ℓ_k · v_k = ℓ_k · v_{k+1} = 1.
  const std::size_t K = s.vertices.size();
  Mat L(static_cast<Eigen::Index>(K), 2);
  for (std::size_t k = 0; k < K; ++k) {
    Mat A(2, 2);
    A.row(0) = s.vertices[k].transpose();
    A.row(1) = s.vertices[(k + 1) % K].transpose();
    L.row(static_cast<Eigen::Index>(k)) = A.partialPivLu().solve(Vec::Ones(2)).transpose();
  }
  const double eps = s.epsilon;
  LocalNorm local;
  local.dim = 2;
  // ε|ξ| log Σ_k exp(ℓ_k·ξ / (ε|ξ|)), the smoothed max of the facet functionals.
  local.value = [L, eps](const Vec& xi) {
    const double r = xi.norm();
    if (r == 0.0) return 0.0;
    const Vec z = L * xi / (eps * r);
    const double top = z.maxCoeff();
    return eps * r * (top + std::log((z.array() - top).exp().sum()));
  };
  return NormField{2, false, [local](const ChartPoint&) { return local; }};
}

NormField product_norm(int n, const ProductParams& q) {
  const int k = q.factor_dim;
  const int m = q.m;
  const double R = q.radius;
  return NormField{n, true, [n, k, m, R](const ChartPoint& x) {
                     const double s = 1.0 + x.head(k).squaredNorm();
                     const double phi = 4.0 * R * R / (s * s);
                     auto P = [k, m, phi](const Vec& xi) {
                       double v = std::pow(phi * xi.head(k).squaredNorm(), m);
                       for (Eigen::Index b = k; b < xi.size(); ++b) v += std::pow(xi[b], 2 * m);
                       return v;
                     };
                     auto dP = [k, m, phi](const Vec& xi) -> Vec {
                       Vec g(xi.size());
                       const double q = phi * xi.head(k).squaredNorm();
                       g.head(k) = 2.0 * m * phi * std::pow(q, m - 1) * xi.head(k);
                       for (Eigen::Index b = k; b < xi.size(); ++b) {
                         g[b] = 2.0 * m * std::pow(xi[b], 2 * m - 1);
                       }
                       return g;
                     };
                     auto d2P = [k, m, phi](const Vec& xi) -> Mat {
                       const Eigen::Index dim = xi.size();
                       Mat h = Mat::Zero(dim, dim);
                       const double q = phi * xi.head(k).squaredNorm();
                       h.topLeftCorner(k, k) = 2.0 * m * phi * std::pow(q, m - 1) * Mat::Identity(k, k);
                       if (m > 1) {
                         h.topLeftCorner(k, k) += 4.0 * m * (m - 1) * phi * phi * std::pow(q, m - 2) *
                                                  xi.head(k) * xi.head(k).transpose();
                       }
                       for (Eigen::Index b = k; b < dim; ++b) {
                         h(b, b) = 2.0 * m * (2.0 * m - 1.0) * std::pow(xi[b], 2 * m - 2);
                       }
                       return h;
                     };
                     return power_norm(n, m, P, dP, d2P);
                   }};
}

NormField randers_norm(int n, const RandersParams& r) {
  const double c = r.epsilon * r.slope;
  return NormField{n, true, [n, c](const ChartPoint& x) {
                     Vec b = Vec::Zero(n);
                     b[1] = c * x[0];
                     LocalNorm p;
                     p.dim = n;
                     p.value = [b](const Vec& xi) { return xi.norm() + b.dot(xi); };
                     p.grad_sq = [b](const Vec& xi) -> Vec {
                       const double r = xi.norm();
                       return 2.0 * (r + b.dot(xi)) * (xi / r + b);
                     };
                     p.hess_sq = [b, n](const Vec& xi) -> Mat {
                       const double r = xi.norm();
                       const Vec u = xi / r + b;
                       const double F = r + b.dot(xi);
                       return 2.0 * u * u.transpose() +
                              2.0 * F * (Mat::Identity(n, n) / r - xi * xi.transpose() / (r * r * r));
                     };
                     return p;
                   }};
}

void check_box(const Box& box, int n) {
  if (box.dim() != n || box.upper.size() != n) bad("box", "dimension does not match metric.dim");
  for (int k = 0; k < n; ++k) {
    if (!(box.lower[k] < box.upper[k])) bad("box", "must be nonempty in every coordinate");
  }
}

}  // namespace

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::conformal: return "conformal";
    case MetricKind::diag_poly: return "diag_poly";
    case MetricKind::sphere_round: return "sphere_round";
    case MetricKind::lp_smooth: return "lp_smooth";
    case MetricKind::segment_norm: return "segment_norm";
    case MetricKind::berwald_product: return "berwald_product";
    case MetricKind::randers_control: return "randers_control";
  }
  return "unknown";
}

MetricKind metric_kind_from_string(const std::string& name, const std::string& path) {
  for (MetricKind k : {MetricKind::euclidean, MetricKind::conformal, MetricKind::diag_poly,
                       MetricKind::sphere_round, MetricKind::lp_smooth, MetricKind::segment_norm,
                       MetricKind::berwald_product, MetricKind::randers_control}) {
    if (name == to_string(k)) return k;
  }
  bad(path, "unknown metric kind '" + name + "'");
}

Box default_box(MetricKind kind, int dim) {
  Box box = Box::cube(dim, 1.0);
  if (kind == MetricKind::diag_poly) {
    box.lower[0] = 0.5;
    box.upper[0] = 2.0;
  }
  return box;
}

CatalogFlags default_flags(const CatalogEntry& e) {
  const int n = e.dim;
  switch (e.kind) {
    case MetricKind::euclidean: return {true, true, true};
    case MetricKind::conformal: {
      const ConformalParams c = conformal_params(e);
      const bool flat = c.sine == 0.0 &&
                        (n == 2 ? c.quadratic.trace() == 0.0
                                : c.quadratic.isZero(0.0) && c.linear.isZero(0.0));
      return {true, true, flat};
    }
    case MetricKind::diag_poly: {
      // Flat when g_11 is constant and at most one other entry varies, as
      // the square of a linear polynomial in x¹.
      const DiagPolyParams d = diag_poly_params(e);
      bool flat = trimmed(d.coefficients[0]).size() == 1;
      int varying = 0;
      for (int i = 1; i < n; ++i) {
        const Vec c = trimmed(d.coefficients[static_cast<std::size_t>(i)]);
        if (c.size() == 1) continue;
        ++varying;
        const bool square = c.size() == 3 &&
                            std::abs(c[1] * c[1] - 4.0 * c[0] * c[2]) <=
                                1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff() * c.cwiseAbs().maxCoeff());
        flat = flat && square;
      }
      return {true, true, flat && varying <= 1};
    }
    case MetricKind::sphere_round: return {true, true, false};
    case MetricKind::lp_smooth: return {true, lp_params(e).m == 1, true};
    case MetricKind::segment_norm: return {true, false, true};
    case MetricKind::berwald_product: return {true, product_params(e).m == 1, false};
    case MetricKind::randers_control: return {false, false, false};
  }
  return {};
}

int default_expected_mobility(const CatalogEntry& e) {
  const int n = e.dim;
  if (e.flags.expected_flat) return (n + 1) * (n + 2) / 2;
  if (e.kind == MetricKind::berwald_product) {
    // c·g₁ on the curved factor plus any symmetric form on the flat one.
    const int flat = n - product_params(e).factor_dim;
    return 1 + flat * (flat + 1) / 2;
  }
  return 1;
}

bool expected_constant_curvature(const CatalogEntry& e) { return e.kind == MetricKind::sphere_round; }

CatalogEntry normalize_entry(CatalogEntry e, bool keep_flags) {
  if (e.dim < 2) bad("metric.dim", "must be at least 2");
  if (!e.params.is_object()) bad("metric.params", "must be an object");
  json p = e.params;
  switch (e.kind) {
    case MetricKind::euclidean:
    case MetricKind::sphere_round: {
      if (e.kind == MetricKind::euclidean) {
        reject_unknown(p, {}, "metric.params");
      } else {
        reject_unknown(p, {"radius"}, "metric.params");
        p = json{{"radius", sphere_radius(p, "metric.params")}};
      }
      break;
    }
    case MetricKind::conformal: {
      const ConformalParams c = conformal_params(e);
      json q = json::array();
      for (int i = 0; i < e.dim; ++i) q.push_back(to_json_vec(c.quadratic.row(i).transpose()));
      p = json{{"linear", to_json_vec(c.linear)}, {"quadratic", q}, {"sine", c.sine}};
      break;
    }
    case MetricKind::diag_poly: {
      const DiagPolyParams d = diag_poly_params(e);
      json c = json::array();
      for (const auto& v : d.coefficients) c.push_back(to_json_vec(v));
      p = json{{"coefficients", c}};
      break;
    }
    case MetricKind::lp_smooth: {
      const LpParams l = lp_params(e);
      p = json{{"m", l.m}, {"scales", to_json_vec(l.scales)}};
      break;
    }
    case MetricKind::segment_norm: {
      const SegmentParams s = segment_params(e);
      json v = json::array();
      for (const auto& x : s.vertices) v.push_back(to_json_vec(x));
      p = json{{"vertices", v}, {"epsilon", s.epsilon}};
      break;
    }
    case MetricKind::berwald_product: {
      const ProductParams q = product_params(e);
      p = json{{"factor_dim", q.factor_dim}, {"radius", q.radius}, {"m", q.m}};
      break;
    }
    case MetricKind::randers_control: {
      const RandersParams r = randers_params(e);
      p = json{{"epsilon", r.epsilon}, {"slope", r.slope}};
      break;
    }
  }
  e.params = p;
  if (!keep_flags) e.flags = default_flags(e);
  if (e.name.empty()) e.name = std::string(to_string(e.kind)) + "-" + std::to_string(e.dim);
  return e;
}

CatalogInstance catalog_instantiate(const CatalogEntry& raw, const std::optional<Box>& box_override) {
  CatalogInstance inst;
  inst.entry = normalize_entry(raw, true);
  const CatalogEntry& e = inst.entry;
  const int n = e.dim;
  inst.box = box_override ? *box_override : default_box(e.kind, n);
  check_box(inst.box, n);
  inst.base = inst.box.center();
  inst.quadrature = IndicatrixQuadrature::defaults(n);
  inst.candidate = ConnectionField::flat(n);

  switch (e.kind) {
    case MetricKind::euclidean: {
      MetricField g{n, [n](const ChartPoint&) -> Mat { return Mat::Identity(n, n); },
                    [n](const ChartPoint&) { return std::vector<Mat>(static_cast<std::size_t>(n), Mat::Zero(n, n)); }};
      inst.metric = g;
      inst.norm = riemannian_norm(g);
      inst.norm.x_dependent = false;
      inst.connection = ConnectionField::flat(n);
      break;
    }
    case MetricKind::conformal: {
      const ConformalParams c = conformal_params(e);
      ConformalFactor f{[c](const ChartPoint& x) {
                          return c.linear.dot(x) + 0.5 * x.dot(c.quadratic * x) + c.sine * std::sin(x[0]);
                        },
                        [c](const ChartPoint& x) -> Vec {
                          Vec d = c.linear + c.quadratic * x;
                          d[0] += c.sine * std::cos(x[0]);
                          return d;
                        }};
      inst.metric = conformal_metric(n, f);
      inst.norm = riemannian_norm(*inst.metric);
      inst.connection = conformal_connection(n, f);
      break;
    }
    case MetricKind::sphere_round: {
      const ConformalFactor f = sphere_factor(sphere_radius(e.params, "metric.params"));
      inst.metric = conformal_metric(n, f);
      inst.norm = riemannian_norm(*inst.metric);
      inst.connection = conformal_connection(n, f);
      break;
    }
    case MetricKind::diag_poly: {
      const DiagPolyParams d = diag_poly_params(e);
      // Positivity over the x¹ range of the box.
      for (int s = 0; s <= 256; ++s) {
        const double t = inst.box.lower[0] + (inst.box.upper[0] - inst.box.lower[0]) * s / 256.0;
        for (int i = 0; i < n; ++i) {
          if (!(poly(d.coefficients[static_cast<std::size_t>(i)], t) > 0.0)) {
            bad("metric.params.coefficients[" + std::to_string(i) + "]",
                "diagonal entry must be positive on the box");
          }
        }
      }
      const auto coef = d.coefficients;
      MetricField g;
      g.dim = n;
      g.eval = [n, coef](const ChartPoint& x) -> Mat {
        Mat m = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = poly(coef[static_cast<std::size_t>(i)], x[0]);
        return m;
      };
      g.derivatives = [n, coef](const ChartPoint& x) {
        std::vector<Mat> dg(static_cast<std::size_t>(n), Mat::Zero(n, n));
        for (int i = 0; i < n; ++i) dg[0](i, i) = poly_derivative(coef[static_cast<std::size_t>(i)], x[0]);
        return dg;
      };
      inst.metric = g;
      inst.norm = riemannian_norm(g);
      inst.connection = levi_civita(g);
      break;
    }
    case MetricKind::lp_smooth: {
      inst.norm = lp_norm(n, lp_params(e));
      inst.connection = ConnectionField::flat(n);
      if (lp_params(e).m == 1) {
        const Vec w = lp_params(e).scales.cwiseInverse();
        const Mat d = w.cwiseProduct(w).asDiagonal();
        inst.metric = MetricField{n, [d](const ChartPoint&) -> Mat { return d; },
                                  [n](const ChartPoint&) { return std::vector<Mat>(static_cast<std::size_t>(n), Mat::Zero(n, n)); }};
      }
      break;
    }
    case MetricKind::segment_norm: {
      inst.norm = segment_norm(segment_params(e));
      inst.connection = ConnectionField::flat(n);
      break;
    }
    case MetricKind::berwald_product: {
      const ProductParams q = product_params(e);
      inst.norm = product_norm(n, q);
      const ConformalFactor f = sphere_factor(q.radius);
      const int k = q.factor_dim;
      inst.connection = ConnectionField{n, [n, k, f](const ChartPoint& x) {
                                          Tensor3 gamma(n);
                                          add_conformal_christoffel(gamma, f.grad(x.head(k)), 0);
                                          return gamma;
                                        }};
      if (q.m == 1) {
        inst.metric = MetricField{n, [n, k, f](const ChartPoint& x) -> Mat {
                                    Mat g = Mat::Identity(n, n);
                                    g.topLeftCorner(k, k) *= std::exp(2.0 * f.f(x.head(k)));
                                    return g;
                                  },
                                  {}};
      }
      break;
    }
    case MetricKind::randers_control: {
      const RandersParams r = randers_params(e);
      const double beta = std::abs(r.epsilon * r.slope) *
                          std::max(std::abs(inst.box.lower[0]), std::abs(inst.box.upper[0]));
      if (beta >= 1.0) bad("metric.params", "randers control needs |beta| < 1 on the box");
      inst.norm = randers_norm(n, r);
      break;
    }
  }
  if (!e.flags.is_berwald) inst.connection.reset();
  else if (inst.connection) inst.candidate = *inst.connection;
  return inst;
}

std::vector<CatalogEntry> builtin_catalog() {
  auto make = [](MetricKind kind, int dim, json params, const std::string& name) {
    CatalogEntry e;
    e.kind = kind;
    e.dim = dim;
    e.params = std::move(params);
    e.name = name;
    return normalize_entry(e);
  };
  return {
      make(MetricKind::euclidean, 2, json::object(), "euclidean-2"),
      make(MetricKind::euclidean, 3, json::object(), "euclidean-3"),
      make(MetricKind::conformal, 2, json::object(), "conformal-2"),
      make(MetricKind::conformal, 3, json::object(), "conformal-3"),
      make(MetricKind::diag_poly, 2, json::object(), "polar-2"),
      make(MetricKind::sphere_round, 2, json::object(), "sphere-2"),
      make(MetricKind::lp_smooth, 2, json{{"m", 2}}, "quartic-2"),
      make(MetricKind::lp_smooth, 3, json{{"m", 2}}, "quartic-3"),
      make(MetricKind::segment_norm, 2, json::object(), "hexagon-2"),
      make(MetricKind::berwald_product, 4, json::object(), "product-4"),
      make(MetricKind::randers_control, 2, json::object(), "randers-2"),
  };
}

CatalogEntry entry_from_json(const json& j, const std::string& path) {
  reject_unknown(j, {"kind", "dim", "params", "flags", "name"}, path);
  if (!j.contains("kind") || !j["kind"].is_string()) bad(path + ".kind", "required string");
  if (!j.contains("dim")) bad(path + ".dim", "required");
  CatalogEntry e;
  e.kind = metric_kind_from_string(j["kind"].get<std::string>(), path + ".kind");
  e.dim = integer_at(j["dim"], path + ".dim");
  if (j.contains("params")) e.params = j["params"];
  if (j.contains("name")) {
    if (!j["name"].is_string()) bad(path + ".name", "must be a string");
    e.name = j["name"].get<std::string>();
  }
  e = normalize_entry(e);
  if (j.contains("flags")) {
    const json& f = j["flags"];
    reject_unknown(f, {"is_berwald", "is_riemannian", "expected_flat"}, path + ".flags");
    auto flag = [&](const char* key, bool& out) {
      if (!f.contains(key)) return;
      if (!f[key].is_boolean()) bad(path + ".flags." + key, "must be a boolean");
      out = f[key].get<bool>();
    };
    flag("is_berwald", e.flags.is_berwald);
    flag("is_riemannian", e.flags.is_riemannian);
    flag("expected_flat", e.flags.expected_flat);
  }
  return e;
}

json entry_to_json(const CatalogEntry& e) {
  return json{{"kind", to_string(e.kind)},
              {"dim", e.dim},
              {"name", e.name},
              {"params", e.params},
              {"flags",
               {{"is_berwald", e.flags.is_berwald},
                {"is_riemannian", e.flags.is_riemannian},
                {"expected_flat", e.flags.expected_flat}}}};
}

}  // namespace blab
