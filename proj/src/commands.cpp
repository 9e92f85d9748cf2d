#include "blab/commands.hpp"

#include "blab/acceptance.hpp"
#include "blab/berwald.hpp"
#include "blab/equivalence.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace blab {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

// Uniform points in the middle 80% of the box.
std::vector<ChartPoint> probe_points(const Box& box, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.1, 0.9);
  std::vector<ChartPoint> out;
  for (int p = 0; p < count; ++p) {
    ChartPoint x(box.dim());
    for (int k = 0; k < box.dim(); ++k) x[k] = box.lower[k] + unit(rng) * (box.upper[k] - box.lower[k]);
    out.push_back(std::move(x));
  }
  return out;
}

class Session {
 public:
  Session(std::string command, const RunConfig& config)
      : command_(std::move(command)),
        config_(config),
        inst_(catalog_instantiate(config.metric, config.box)),
        rule_(std::make_shared<const SphereRule>(quadrature())) {}

  IndicatrixQuadrature quadrature() const {
    IndicatrixQuadrature q = config_.quadrature ? *config_.quadrature : inst_.quadrature;
    q.dim = inst_.entry.dim;
    return q;
  }

  void run() {
    nondegeneracy_notes();
    if (command_ == "average") average();
    else if (command_ == "check-berwald") check_berwald();
    else if (command_ == "holonomy") holonomy();
    else if (command_ == "mobility") mobility();
    else if (command_ == "equivalence") equivalence();
    else if (command_ == "hilbert4") hilbert4();
    else throw Error(ErrorKind::configuration, "unknown command '" + command_ + "'");
  }

  json verdicts = json::array();
  json residuals = json::object();
  json warnings = json::array();
  std::map<std::string, std::string> csv;

 private:
  const CatalogFlags& flags() const { return inst_.entry.flags; }
  int dim() const { return inst_.entry.dim; }
  std::uint64_t seed(std::uint64_t offset) const { return config_.seed + offset; }

  void verdict(const std::string& name, const json& expected, const json& observed,
               const std::string& detail = "") {
    json v{{"name", name}, {"expected", expected}, {"observed", observed}, {"match", expected == observed}};
    if (!detail.empty()) v["detail"] = detail;
    verdicts.push_back(v);
  }

  void informational(const std::string& name, const std::string& detail) {
    verdicts.push_back(json{{"name", name}, {"expected", nullptr}, {"observed", "skipped"},
                            {"match", true}, {"detail", detail}});
  }

  MetricField averaged() const { return averaged_metric_field(inst_.norm, rule_); }

  // The Riemannian metric whose Levi-Civita connection is the associated one.
  MetricField working_metric() const { return inst_.metric ? *inst_.metric : averaged(); }

  void nondegeneracy_notes() {
    const NondegeneracyReport r = nondegeneracy_probe(inst_.norm, inst_.base, config_.options.nondegeneracy_samples,
                                                      seed(11), config_.tolerances.nondegeneracy);
    residuals["nondegeneracy"] = json{{"samples", r.samples.size()},
                                      {"degenerate", r.degenerate_count},
                                      {"best_relative_min_eigenvalue", r.best_relative}};
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& s : r.samples) {
      worst = std::min(worst, s.relative_min_eigenvalue);
      if (s.degenerate) {
        std::ostringstream msg;
        msg << "degenerate fundamental form at direction " << vec_json(s.direction).dump()
            << " (relative min-eig " << s.relative_min_eigenvalue << ")";
        warnings.push_back(msg.str());
      }
    }
    residuals["nondegeneracy"]["worst_relative_min_eigenvalue"] = worst;
    if (inst_.entry.kind == MetricKind::segment_norm) {
      std::ostringstream msg;
      msg << "smoothed polygon norm: fundamental form nearly degenerate along the flat sides"
          << " (worst relative min-eig " << worst << ")";
      warnings.push_back(msg.str());
    }
  }

  void average() {
    const int n = dim();
    const MetricField gF = averaged();
    const AveragedMetric at_base = averaged_metric(inst_.norm, inst_.base, *rule_);
    residuals["averaged_metric_at_base"] = mat_json(at_base.value);
    residuals["ball_volume_at_base"] = at_base.ball_volume;
    residuals["normalization"] = indicatrix_integrate(
        inst_.norm, inst_.base, [](const Vec&) { return 1.0; }, *rule_);
    residuals["quadrature_nodes"] = rule_->size();

    std::ostringstream table;
    for (int k = 0; k < n; ++k) table << "x" << k << ",";
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) table << "g" << i << j << (i == n - 1 && j == n - 1 ? "\n" : ",");
    const int G = config_.options.grid;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    const long total = static_cast<long>(std::pow(G, n));
    table.precision(17);
    for (long c = 0; c < total; ++c) {
      long r = c;
      ChartPoint x(n);
      for (int k = 0; k < n; ++k) {
        const int ik = static_cast<int>(r % G);
        r /= G;
        x[k] = inst_.box.lower[k] + (inst_.box.upper[k] - inst_.box.lower[k]) * (ik + 0.5) / G;
      }
      const Mat g = gF(x);
      for (int k = 0; k < n; ++k) table << x[k] << ",";
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) table << g(i, j) << (i == n - 1 && j == n - 1 ? "\n" : ",");
    }
    csv["averaged_metric.csv"] = table.str();

    const auto probes = probe_points(inst_.box, config_.options.probes, seed(1));
    const Theorem1Report t = verify_theorem1(inst_.norm, inst_.candidate, probes, *rule_);
    residuals["affine"] = json{{"probes", t.probes},
                                 {"connection_residual", t.connection_residual},
                                 {"parallel_residual", t.parallel_residual},
                                 {"min_eigenvalue", t.min_eigenvalue}};
    const bool ok = std::max(t.connection_residual, t.parallel_residual) <= config_.tolerances.affine;
    verdict("affine_equivalence", flags().is_berwald, ok,
            flags().is_berwald ? "associated connection" : "candidate flat connection");
  }

  void check_berwald() {
    const TransportCheck tc = berwald_transport_check(inst_.norm, inst_.candidate, inst_.box,
                                                      config_.options.trials, seed(2), config_.integrator);
    const auto probes = probe_points(inst_.box, config_.options.probes, seed(3));
    const auto dirs = random_directions(dim(), config_.options.spray_directions, seed(4));
    double spray = 0.0;
    int rejected = 0;
    std::ostringstream table;
    table << "probe,residual,max_magnitude,accepted,rejected\n";
    table.precision(17);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const SprayCheck s = spray_quadraticity_check(inst_.norm, probes[p], dirs);
      spray = std::max(spray, s.residual);
      rejected += s.rejected;
      table << p << "," << s.residual << "," << s.max_magnitude << "," << s.accepted << "," << s.rejected
            << "\n";
    }
    if (rejected > 0) warnings.push_back(std::to_string(rejected) + " spray directions rejected as degenerate");
    csv["spray.csv"] = table.str();
    const BerwaldReport br = berwald_report(tc, spray, config_.tolerances.berwald);
    residuals["transport"] = json{{"trials", tc.trials},
                                  {"skipped", tc.skipped},
                                  {"max_violation", tc.max_violation}};
    residuals["spray_quadraticity"] = spray;
    verdict("berwald", flags().is_berwald, br.verdict == Verdict::pass,
            std::string("berwald_check verdict ") + to_string(br.verdict));

    // The base alone can hide a non-Riemannian F (the Randers control is Euclidean at x¹ = 0).
    const MetricField gF = averaged();
    double spread = 0.0;
    std::vector<ChartPoint> points{inst_.base};
    points.insert(points.end(), probes.begin(), probes.end());
    for (const auto& x : points) {
      const RatioReport rr = riemannian_ratio_test(inst_.norm, gF, x, config_.options.ratio_samples, seed(5),
                                                   config_.tolerances.ratio);
      spread = std::max(spread, rr.spread);
    }
    residuals["ratio_spread"] = spread;
    verdict("riemannian_ratio_constant", flags().is_riemannian, spread <= config_.tolerances.ratio);
  }

  std::vector<Curve> loops() const {
    LoopFamilyOptions o;
    o.random_loops = config_.options.random_loops;
    return standard_loop_family(inst_.base, inst_.box, o, seed(6));
  }

  void holonomy() {
    if (!inst_.connection) {
      informational("holonomy", "no associated connection (entry is not flagged Berwald)");
      return;
    }
    const HolonomyProbe hp = holonomy_probe(*inst_.connection, working_metric(), inst_.base, loops(), seed(7),
                                            config_.integrator, config_.tolerances.orthogonality,
                                            config_.tolerances.mobility_svd);
    for (const auto& d : hp.diagnostics) warnings.push_back(d);
    const RatioReport rr = riemannian_ratio_test(inst_.norm, averaged(), inst_.base,
                                                 config_.options.ratio_samples, seed(5), config_.tolerances.ratio);
    residuals["holonomy"] = json{{"loops", hp.transports.size()},
                                 {"algebra_dim", hp.algebra_dim},
                                 {"estimated_orbit_dim", hp.estimated_orbit_dim},
                                 {"transitive", hp.transitive()},
                                 {"max_orthogonality_defect", hp.max_orthogonality_defect},
                                 {"singular_values", hp.singular_values}};
    residuals["ratio_test"] = json{{"min", rr.min_ratio}, {"max", rr.max_ratio}, {"spread", rr.spread}};
    verdict("metric_preserved", true, hp.metric_preserved);
    // A transitive holonomy on the unit sphere forces F to be Riemannian.
    verdict("transitive_implies_riemannian", true, !hp.transitive() || rr.riemannian_compatible);
    if (flags().expected_flat) verdict("trivial_holonomy", true, hp.algebra_dim == 0);
    residuals["symmetric_space"] = "undecided";
  }

  FrobeniusSystem frobenius() const {
    FrobeniusSystem sys;
    sys.connection = *inst_.connection;
    sys.B = config_.options.B;
    if (sys.B != 0.0) sys.metric = working_metric();
    sys.integrator = config_.integrator;
    return sys;
  }

  std::optional<int> expected_mobility() const {
    if (config_.options.expected_mobility) return config_.options.expected_mobility;
    if (config_.options.B != 0.0) return std::nullopt;
    return default_expected_mobility(inst_.entry);
  }

  MobilityResult mobility_result(const FrobeniusSystem& sys) {
    const MobilityResult m = degree_of_mobility(sys, loops(), config_.tolerances.mobility_svd);
    residuals["mobility"] = json{{"degree", m.degree},
                                 {"loops", m.loops},
                                 {"threshold", m.threshold},
                                 {"gap", m.gap},
                                 {"indeterminate", m.indeterminate},
                                 {"certified", m.certified},
                                 {"singular_values", m.singular_values}};
    if (m.indeterminate) warnings.push_back("singular value within a decade of the mobility threshold");
    if (!m.certified) warnings.push_back("B != 0: degree of mobility is not certified");
    return m;
  }

  void mobility() {
    if (!inst_.connection) {
      informational("degree_of_mobility", "no associated connection (entry is not flagged Berwald)");
      return;
    }
    const MobilityResult m = mobility_result(frobenius());
    if (const auto expected = expected_mobility()) {
      verdict("degree_of_mobility", *expected, m.degree);
    } else {
      informational("degree_of_mobility", "no expectation for B != 0 without options.expected_mobility");
    }
  }

  void equivalence() {
    if (!inst_.connection) {
      informational("equivalence", "no associated connection (entry is not flagged Berwald)");
      return;
    }
    const int n = dim();
    const FrobeniusSystem sys = frobenius();
    const MobilityResult m = mobility_result(sys);
    const MetricField g = working_metric();
    const Mat g0 = g(inst_.base);

    SinjukovState trivial;
    trivial.a = g0.inverse();
    trivial.lam = Vec::Zero(n);
    trivial.B = sys.B;
    Vec s = trivial.flatten().normalized();
    if (m.degree > 0) {
      std::mt19937_64 rng(seed(8));
      std::normal_distribution<double> normal;
      Vec c(m.degree);
      for (int i = 0; i < m.degree; ++i) c[i] = normal(rng);
      const Vec r = m.basis * c;
      s += 0.2 * r / r.norm();
    }
    const SinjukovState s0 = SinjukovState::unflatten(s, n, sys.B);
    residuals["initial_state"] = vec_json(s);

    const ChartPoint base = inst_.base;
    auto solution_at = [sys, s0, base](const ChartPoint& x) {
      if ((x - base).norm() == 0.0) return s0;
      return frobenius_integrate(sys, Curve::segment(base, x), s0);
    };
    MetricField gbar;
    gbar.dim = n;
    gbar.eval = [g, solution_at](const ChartPoint& x) -> Mat {
      return metric_from_solution(g(x), solution_at(x).a).value;
    };
    const ReconstructedMetric rb = metric_from_solution(g0, s0.a);
    residuals["reconstructed_signature"] = json{{"positive", rb.positive}, {"negative", rb.negative}};
    if (!rb.riemannian()) warnings.push_back("reconstructed metric is not positive definite");

    const ConnectionField gamma_bar = levi_civita(gbar);
    const auto probes = probe_points(inst_.box, config_.options.probes, seed(9));
    double projective = 0.0;
    double affine = 0.0;
    std::ostringstream table;
    table << "probe,projective_residual,affine_difference\n";
    table.precision(17);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double r = projective_residual(*inst_.connection, gamma_bar, probes[p]);
      const double a = ((*inst_.connection)(probes[p]) - gamma_bar(probes[p])).max_abs();
      projective = std::max(projective, r);
      affine = std::max(affine, a);
      table << p << "," << r << "," << a << "\n";
    }
    csv["projective.csv"] = table.str();
    residuals["projective_residual"] = projective;
    residuals["affine_difference"] = affine;
    if (inst_.metric) {
      LoweredSolutionField sol = [g, solution_at](const ChartPoint& x) {
        const SinjukovState st = solution_at(x);
        const Mat gx = g(x);
        return LoweredSolution{gx * st.a * gx, gx * st.lam};
      };
      double sinjukov = 0.0;
      for (const auto& x : probes) sinjukov = std::max(sinjukov, sinjukov_residual(g, sol, x));
      residuals["sinjukov_residual"] = sinjukov;
    }
    verdict("projective_condition", true, projective <= config_.tolerances.projective);
    if (const auto expected = expected_mobility()) {
      verdict("nontrivial_solutions", *expected > 1, m.degree > 1);
    }
  }

  void hilbert4() {
    if (!inst_.connection) {
      informational("hilbert4", "no associated connection (entry is not flagged Berwald)");
      return;
    }
    Hilbert4Options opts;
    opts.curvature_tolerance = config_.tolerances.curvature;
    opts.minkowski_tolerance = config_.tolerances.minkowski;
    opts.chart.integrator = config_.integrator;
    const auto probes = probe_points(inst_.box, config_.options.probes, seed(10));
    const Hilbert4Result h = hilbert4_pipeline(inst_.norm, *inst_.connection, averaged(), inst_.base,
                                               inst_.box, probes, seed(10), opts);
    json r{{"curvature",
            {{"samples", h.curvature.samples},
             {"mean", h.curvature.mean_curvature},
             {"max_deviation", h.curvature.max_deviation},
             {"max_abs", h.curvature.max_abs_curvature}}},
           {"pushed_christoffel", h.pushed_christoffel},
           {"detail", h.detail}};
    if (h.minkowski) r["minkowski_variation"] = h.minkowski->max_variation;
    residuals["hilbert4"] = r;
    ProjectiveVerdict expected = ProjectiveVerdict::not_projectively_flat;
    if (flags().expected_flat) expected = ProjectiveVerdict::minkowski;
    else if (expected_constant_curvature(inst_.entry)) expected = ProjectiveVerdict::constant_curvature;
    verdict("projective_flatness", to_string(expected), to_string(h.verdict));
  }

  std::string command_;
  RunConfig config_;
  CatalogInstance inst_;
  std::shared_ptr<const SphereRule> rule_;
};

int exit_for(ErrorKind kind) {
  return kind == ErrorKind::configuration ? exit_config_error : exit_numerical_failure;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"average",     "check-berwald", "holonomy", "mobility",
                                              "equivalence", "hilbert4",      "selftest"};
  return names;
}

CommandResult run_command(const std::string& command, const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult result;
  json& report = result.report;
  report["command"] = command;
  report["config_echo"] = config_to_json(config);
  report["verdicts"] = json::array();
  report["residuals"] = json::object();
  report["warnings"] = json::array();
  report["error"] = nullptr;

  try {
    if (command == "selftest") {
      AcceptanceOptions opts;
      opts.seed = config.seed;
      const AcceptanceSummary summary = run_acceptance(opts);
      for (const auto& c : summary.criteria) {
        report["verdicts"].push_back(json{{"name", c.name},
                                          {"expected", true},
                                          {"observed", c.passed},
                                          {"match", c.passed},
                                          {"detail", c.detail}});
      }
      report["residuals"]["criteria"] = summary.criteria.size();
    } else {
      Session session(command, config);
      session.run();
      report["verdicts"] = session.verdicts;
      report["residuals"] = session.residuals;
      report["warnings"] = session.warnings;
      result.csv = std::move(session.csv);
    }
    bool all = true;
    for (const auto& v : report["verdicts"]) all = all && v["match"].get<bool>();
    result.exit_code = all ? exit_ok : exit_verdict_mismatch;
  } catch (const Error& e) {
    report["error"] = json{{"kind", to_string(e.kind())}, {"message", e.what()}};
    result.exit_code = exit_for(e.kind());
  } catch (const std::exception& e) {
    report["error"] = json{{"kind", "evaluation_failure"}, {"message", e.what()}};
    result.exit_code = exit_numerical_failure;
  }
  report["exit_code"] = result.exit_code;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report["timings"] = json{{"total_seconds", seconds}};
  return result;
}

std::string deterministic_dump(const json& report) {
  json copy = report;
  copy.erase("timings");
  return copy.dump(2);
}

void write_outputs(const CommandResult& result, const std::string& out_dir, bool csv) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw Error(ErrorKind::configuration, "cannot write report to '" + out_dir + "'");
    out << result.report.dump(2) << "\n";
  }
  if (!csv) return;
  for (const auto& [name, contents] : result.csv) {
    std::ofstream out(dir / name);
    out << contents;
  }
}

}  // namespace blab
