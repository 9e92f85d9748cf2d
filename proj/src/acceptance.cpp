#include "blab/acceptance.hpp"

#include "blab/berwald.hpp"
#include "blab/catalog.hpp"
#include "blab/commands.hpp"
#include "blab/equivalence.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace blab {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel_error(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

std::vector<ChartPoint> random_points(const Box& box, int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.1, 0.9);
  std::vector<ChartPoint> out;
  for (int p = 0; p < count; ++p) {
    ChartPoint x(box.dim());
    for (int k = 0; k < box.dim(); ++k) x[k] = box.lower[k] + unit(rng) * (box.upper[k] - box.lower[k]);
    out.push_back(std::move(x));
  }
  return out;
}

CatalogEntry entry(MetricKind kind, int dim, nlohmann::json params = nlohmann::json::object()) {
  CatalogEntry e;
  e.kind = kind;
  e.dim = dim;
  e.params = std::move(params);
  return normalize_entry(e);
}

Mat random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
  return m * m.transpose() + n * Mat::Identity(n, n);
}

Mat random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
  return 0.5 * (m + m.transpose());
}

// ---- criteria ---------------------------------------------------------------

CriterionResult averaging_identity(std::uint64_t) {
  CriterionResult r{1, "averaging identity: euclidean g_F = 2n I", true, "", 0.0};
  std::ostringstream d;
  for (int n : {2, 3}) {
    const CatalogInstance inst = catalog_instantiate(entry(MetricKind::euclidean, n));
    const auto t0 = Clock::now();
    const SphereRule rule(IndicatrixQuadrature::defaults(n));
    const AveragedMetric g = averaged_metric(inst.norm, inst.base, rule);
    const double secs = since(t0);
    const double err = rel_error(g.value, 2.0 * n * Mat::Identity(n, n));
    const double tol = n == 2 ? 1e-6 : 1e-4;
    r.passed = r.passed && err <= tol && secs <= 5.0;
    d << "n=" << n << " rel err " << fmt(err) << " in " << fmt(secs) << " s; ";
  }
  r.detail = d.str();
  return r;
}

CriterionResult normalization(std::uint64_t) {
  CriterionResult r{2, "normalization: integral of omega over the indicatrix = n", true, "", 0.0};
  double worst2 = 0.0, worst3 = 0.0;
  for (const CatalogEntry& e : builtin_catalog()) {
    const CatalogInstance inst = catalog_instantiate(e);
    const int n = e.dim;
    IndicatrixQuadrature coarse = inst.quadrature;
    IndicatrixQuadrature fine = coarse;
    for (int& k : fine.resolution) k *= 2;
    const SphereRule a(coarse), b(fine);
    // ∫ω = (1 / vol) Σ w r^n with vol from an independent, finer rule.
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sum += a.weights()[i] * std::pow(1.0 / inst.norm(inst.base, a.nodes()[i]), n);
    }
    const double value = sum / ball_volume(inst.norm, inst.base, b);
    const double err = std::abs(value - n) / n;
    const double tol = n == 2 ? 1e-6 : 1e-4;
    if (err > tol) {
      r.passed = false;
      r.detail += e.name + " rel err " + fmt(err) + "; ";
    }
    (n == 2 ? worst2 : worst3) = std::max(n == 2 ? worst2 : worst3, err);
  }
  r.detail += "worst n=2 " + fmt(worst2) + ", n>=3 " + fmt(worst3);
  return r;
}

CriterionResult riemannian_reduction(std::uint64_t seed) {
  CriterionResult r{3, "Riemannian reduction: g_F = 2n g0 for conformal metrics", true, "", 0.0};
  std::mt19937_64 rng(seed + 3);
  double worst = 0.0;
  for (int n : {2, 3}) {
    const CatalogInstance inst = catalog_instantiate(entry(MetricKind::conformal, n));
    const SphereRule rule(inst.quadrature);
    for (const auto& x : random_points(inst.box, 10, rng)) {
      const Mat g = averaged_metric(inst.norm, x, rule).value;
      worst = std::max(worst, rel_error(g, 2.0 * n * (*inst.metric)(x)));
    }
  }
  r.passed = worst <= 1e-5;
  r.detail = "max rel err " + fmt(worst) + " over 10 probes each for n = 2, 3";
  return r;
}

CriterionResult affine_product(std::uint64_t seed) {
  CriterionResult r{4, "affine equivalence on the 2+2 product: LC(g_F) = product connection", true, "", 0.0};
  const auto t0 = Clock::now();
  const CatalogInstance inst = catalog_instantiate(entry(MetricKind::berwald_product, 4));
  std::mt19937_64 rng(seed + 4);
  const auto probes = random_points(inst.box, 5, rng);
  const Theorem1Report t = verify_theorem1(inst.norm, *inst.connection, probes, SphereRule(inst.quadrature));
  const double secs = since(t0);
  r.passed = t.connection_residual <= 1e-4 && t.parallel_residual <= 1e-4 && secs <= 120.0;
  r.detail = "|LC - Gamma| " + fmt(t.connection_residual) + ", |nabla g_F| " + fmt(t.parallel_residual) +
             " in " + fmt(secs) + " s";
  return r;
}

CriterionResult berwald_detection(std::uint64_t seed) {
  CriterionResult r{5, "Berwald detection: transport and spray checks", true, "", 0.0};
  std::ostringstream d;
  for (const CatalogEntry& e : builtin_catalog()) {
    const CatalogInstance inst = catalog_instantiate(e);
    const TransportCheck tc = berwald_transport_check(inst.norm, inst.candidate, inst.box, 100, seed + 5);
    std::mt19937_64 rng(seed + 6);
    double spray = 0.0;
    for (const auto& x : random_points(inst.box, 3, rng)) {
      spray = std::max(spray, spray_quadraticity_check(inst.norm, x, random_directions(e.dim, 24, seed + 7)).residual);
    }
    const bool ok = e.flags.is_berwald ? (tc.max_violation <= 1e-6 && spray <= 1e-6)
                                       : (tc.max_violation >= 1e-2 && spray >= 1e-2);
    if (!ok || !e.flags.is_berwald) {
      d << e.name << ": transport " << fmt(tc.max_violation) << ", spray " << fmt(spray) << "; ";
    }
    r.passed = r.passed && ok;
  }
  r.detail = d.str();
  return r;
}

// a(x) = a0 + λ0 dᵀ + d λ0ᵀ + μ d dᵀ, λ(x) = λ0 + μ d with d = x − x0.
SinjukovState flat_closed_form(const SinjukovState& s0, const Vec& d) {
  SinjukovState s = s0;
  s.a = s0.a + s0.lam * d.transpose() + d * s0.lam.transpose() + s0.mu * d * d.transpose();
  s.lam = s0.lam + s0.mu * d;
  return s;
}

SinjukovState random_state(int n, std::mt19937_64& rng, double spread) {
  std::normal_distribution<double> normal;
  SinjukovState s;
  s.a = Mat::Identity(n, n) + spread * random_symmetric(n, rng);
  s.lam = Vec(n);
  for (int i = 0; i < n; ++i) s.lam[i] = spread * normal(rng);
  s.mu = spread * normal(rng);
  return s;
}

CriterionResult frobenius_closed_form(std::uint64_t seed) {
  CriterionResult r{6, "Frobenius closed form on flat connection (n = 2)", true, "", 0.0};
  std::mt19937_64 rng(seed + 8);
  const Box box = Box::cube(2, 1.0);
  FrobeniusSystem sys;
  sys.connection = ConnectionField::flat(2);
  double worst = 0.0;
  for (int p = 0; p < 10; ++p) {
    const auto pts = random_points(box, 4, rng);
    const Curve path(pts, Interpolation::cubic);
    for (int s = 0; s < 20; ++s) {
      const SinjukovState s0 = random_state(2, rng, 1.0);
      const SinjukovState got = frobenius_integrate(sys, path, s0);
      const SinjukovState want = flat_closed_form(s0, pts.back() - pts.front());
      worst = std::max({worst, (got.a - want.a).cwiseAbs().maxCoeff(),
                        (got.lam - want.lam).cwiseAbs().maxCoeff(), std::abs(got.mu - want.mu)});
    }
  }
  r.passed = worst <= 1e-8;
  r.detail = "max error " + fmt(worst) + " over 10 paths x 20 states";
  return r;
}

CriterionResult mobility(std::uint64_t seed) {
  CriterionResult r{7, "degree of mobility: flat 6 / 10, generic conformal 1", true, "", 0.0};
  std::ostringstream d;
  auto run = [&](const CatalogEntry& e, int expected, bool need_gap) {
    const auto t0 = Clock::now();
    const CatalogInstance inst = catalog_instantiate(e);
    FrobeniusSystem sys;
    sys.connection = *inst.connection;
    const MobilityResult m =
        degree_of_mobility(sys, standard_loop_family(inst.base, inst.box, {}, seed + 9));
    const double secs = since(t0);
    const bool ok = m.degree == expected && (!need_gap || m.gap >= 1e3) && secs <= 30.0;
    r.passed = r.passed && ok;
    d << e.name << ": " << m.degree << " (gap " << fmt(m.gap) << ", " << fmt(secs) << " s); ";
  };
  run(entry(MetricKind::euclidean, 2), 6, true);
  run(entry(MetricKind::euclidean, 3), 10, true);
  run(entry(MetricKind::conformal, 2), 1, false);
  r.detail = d.str();
  return r;
}

CriterionResult sinjukov_round_trip(std::uint64_t seed) {
  CriterionResult r{8, "solution <-> metric round trip and scaling law", true, "", 0.0};
  std::mt19937_64 rng(seed + 10);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 3;
    const Mat g = random_spd(n, rng);
    Mat a_up = random_symmetric(n, rng);
    while (std::abs(a_up.determinant()) < 1e-3) a_up = random_symmetric(n, rng);
    const Mat a_low = g * a_up * g;
    const Mat gbar = metric_from_solution(g, a_up).value;
    worst = std::max(worst, rel_error(solution_from_metric(g, gbar), a_low));
  }
  double scaling = 0.0;
  for (int n : {2, 3, 4}) {
    const Mat g = random_spd(n, rng);
    for (double c : {0.5, 2.0, 3.0}) {
      // a_low = c g  <=>  a_up = c g⁻¹
      const Mat gbar = metric_from_solution(g, c * g.inverse()).value;
      scaling = std::max(scaling, rel_error(gbar, std::pow(c, -(n + 1)) * g));
    }
  }
  r.passed = worst <= 1e-10 && scaling <= 1e-10;
  r.detail = "round trip " + fmt(worst) + ", scaling law " + fmt(scaling);
  return r;
}

CriterionResult projective_condition(std::uint64_t seed) {
  CriterionResult r{9, "projective condition for projective changes and reconstructed pairs", true, "", 0.0};
  std::mt19937_64 rng(seed + 11);
  std::normal_distribution<double> normal;

  // Pure projective changes of a random symmetric connection.
  double pure = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 3;
    Tensor3 gamma(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) gamma(i, j, k) = gamma(i, k, j) = normal(rng);
    Vec phi(n);
    for (int i = 0; i < n; ++i) phi[i] = normal(rng);
    Tensor3 bar = gamma;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        bar(i, i, j) += phi[j];
        bar(i, j, i) += phi[j];
      }
    const ConnectionField a{n, [gamma](const ChartPoint&) { return gamma; }};
    const ConnectionField b{n, [bar](const ChartPoint&) { return bar; }};
    pure = std::max(pure, projective_residual(a, b, Vec::Zero(n)));
  }

  // Reconstructed pairs from the flat closed-form family.
  const int n = 2;
  const Box box = Box::cube(2, 0.5);
  const ConnectionField flat = ConnectionField::flat(n);
  double pairs = 0.0;
  double chord = 0.0;
  for (int s = 0; s < 4; ++s) {
    const SinjukovState s0 = random_state(n, rng, 0.2);
    MetricField gbar;
    gbar.dim = n;
    gbar.eval = [s0](const ChartPoint& x) -> Mat {
      return metric_from_solution(Mat::Identity(2, 2), flat_closed_form(s0, x).a).value;
    };
    const ConnectionField lc = levi_civita(gbar);
    for (const auto& x : random_points(box, 5, rng)) pairs = std::max(pairs, projective_residual(flat, lc, x));
    // Geodesics of ḡ are straight lines.
    for (int k = 0; k < 2; ++k) {
      Vec xi(n);
      for (int i = 0; i < n; ++i) xi[i] = normal(rng);
      xi.normalize();
      const ChartPoint x0 = -0.5 * xi;
      const GeodesicResult geo = connection_geodesic(lc, x0, xi, 1.0);
      const auto& nodes = geo.curve.nodes();
      const Vec dir = (nodes.back() - x0).normalized();
      for (const auto& p : nodes) {
        const Vec d = p - x0;
        chord = std::max(chord, (d - d.dot(dir) * dir).norm());
      }
    }
  }
  r.passed = pure <= 1e-8 && pairs <= 1e-5 && chord <= 1e-5;
  r.detail = "pure changes " + fmt(pure) + ", reconstructed pairs " + fmt(pairs) + ", chord deviation " +
             fmt(chord);
  return r;
}

std::string hilbert4_verdict(const CatalogEntry& e, std::uint64_t seed) {
  RunConfig cfg;
  cfg.metric = e;
  cfg.seed = seed;
  const CommandResult res = run_command("hilbert4", cfg);
  for (const auto& v : res.report["verdicts"]) {
    if (v["name"] == "projective_flatness") return v["observed"].get<std::string>();
  }
  if (!res.report["error"].is_null()) return "error: " + res.report["error"]["message"].get<std::string>();
  return "missing";
}

CriterionResult hilbert4_pipeline_criterion(std::uint64_t seed) {
  CriterionResult r{10, "projective flatness pipeline and flat chart of polar coordinates", true, "", 0.0};
  std::ostringstream d;
  const std::vector<std::pair<CatalogEntry, std::string>> cases{
      {entry(MetricKind::lp_smooth, 2, {{"m", 2}}), "Minkowski"},
      {entry(MetricKind::lp_smooth, 3, {{"m", 2}}), "Minkowski"},
      {entry(MetricKind::euclidean, 2), "Minkowski"},
      {entry(MetricKind::euclidean, 3), "Minkowski"},
      {entry(MetricKind::berwald_product, 4), "not projectively flat"},
  };
  for (const auto& [e, want] : cases) {
    const std::string got = hilbert4_verdict(e, seed);
    r.passed = r.passed && got == want;
    d << e.name << ": " << got << "; ";
  }
  const CatalogInstance polar = catalog_instantiate(entry(MetricKind::diag_poly, 2));
  const FlatChart chart = flat_chart(*polar.connection, polar.base, polar.box, {}, seed + 12);
  std::mt19937_64 rng(seed + 13);
  const double pushed = max_pushed_christoffel(chart, random_points(polar.box, 5, rng));
  r.passed = r.passed && pushed <= 1e-5;
  d << "polar chart pushed |Gamma| " << fmt(pushed);
  r.detail = d.str();
  return r;
}

CriterionResult nondegeneracy(std::uint64_t seed) {
  CriterionResult r{11, "nondegeneracy: some direction strongly convex, quartic axes degenerate", true, "", 0.0};
  std::ostringstream d;
  for (const CatalogEntry& e : builtin_catalog()) {
    const CatalogInstance inst = catalog_instantiate(e);
    const NondegeneracyReport rep = nondegeneracy_probe(inst.norm, inst.base, 64, seed + 14);
    if (rep.best_relative <= 0.1) {
      r.passed = false;
      d << e.name << " best " << fmt(rep.best_relative) << "; ";
    }
  }
  const CatalogInstance quartic = catalog_instantiate(entry(MetricKind::lp_smooth, 2, {{"m", 2}}));
  const NondegeneracyReport rep = nondegeneracy_probe(quartic.norm, quartic.base, 64, seed + 14);
  int axes = 0, flagged = 0;
  for (const auto& s : rep.samples) {
    const Vec u = s.direction.normalized();
    if (std::abs(u[0] * u[1]) < 1e-12) {
      ++axes;
      if (s.degenerate) ++flagged;
    }
  }
  r.passed = r.passed && axes == 4 && flagged == 4;
  d << "quartic axis directions flagged " << flagged << "/" << axes;
  r.detail = d.str();
  return r;
}

CriterionResult catalog_sweep(std::uint64_t seed) {
  CriterionResult r{12, "selftest: catalog self-consistency and time budget", true, "", 0.0};
  std::ostringstream d;
  int runs = 0;
  for (const CatalogEntry& e : builtin_catalog()) {
    RunConfig cfg;
    cfg.metric = e;
    cfg.seed = seed;
    for (const std::string& cmd : command_names()) {
      if (cmd == "selftest") continue;
      const CommandResult res = run_command(cmd, cfg);
      ++runs;
      if (res.exit_code != exit_ok) {
        r.passed = false;
        d << e.name << " " << cmd << " exit " << res.exit_code;
        if (!res.report["error"].is_null()) d << " (" << res.report["error"]["message"].get<std::string>() << ")";
        for (const auto& v : res.report["verdicts"]) {
          if (!v["match"].get<bool>()) d << " [" << v["name"].get<std::string>() << " observed " << v["observed"].dump() << "]";
        }
        d << "; ";
      }
    }
  }
  d << runs << " command runs";
  r.detail = d.str();
  return r;
}

}  // namespace

AcceptanceSummary run_acceptance(const AcceptanceOptions& options) {
  const auto start = Clock::now();
  AcceptanceSummary summary;
  using Fn = CriterionResult (*)(std::uint64_t);
  const Fn criteria[] = {averaging_identity,   normalization,         riemannian_reduction,
                         affine_product,     berwald_detection,     frobenius_closed_form,
                         mobility,             sinjukov_round_trip,   projective_condition,
                         hilbert4_pipeline_criterion, nondegeneracy};
  auto record = [&](CriterionResult c, Clock::time_point t0) {
    c.seconds = since(t0);
    if (options.on_result) options.on_result(c);
    summary.criteria.push_back(std::move(c));
  };
  for (Fn f : criteria) {
    const auto t0 = Clock::now();
    CriterionResult c;
    try {
      c = f(options.seed);
    } catch (const std::exception& e) {
      c.id = static_cast<int>(summary.criteria.size()) + 1;
      c.name = "criterion " + std::to_string(c.id);
      c.passed = false;
      c.detail = std::string("error: ") + e.what();
    }
    record(c, t0);
  }

  const auto t0 = Clock::now();
  CriterionResult last{12, "selftest: catalog self-consistency and time budget", true, "", 0.0};
  if (options.catalog_sweep) {
    try {
      last = catalog_sweep(options.seed);
    } catch (const std::exception& e) {
      last.passed = false;
      last.detail = std::string("error: ") + e.what();
    }
  }
  bool others = true;
  for (const auto& c : summary.criteria) others = others && c.passed;
  const double total = since(start);
  last.passed = last.passed && others && total <= 600.0;
  last.detail += "; total " + fmt(total) + " s" + (others ? "" : "; earlier criteria failed");
  record(last, t0);

  summary.all_passed = true;
  for (const auto& c : summary.criteria) summary.all_passed = summary.all_passed && c.passed;
  summary.seconds = since(start);
  return summary;
}

}  // namespace blab
