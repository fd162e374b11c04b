#include "folharm/runner.hpp"

#include "folharm/config.hpp"
#include "folharm/energy_flow.hpp"
#include "folharm/errors.hpp"
#include "folharm/io.hpp"
#include "folharm/parallel.hpp"
#include "folharm/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace folharm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
  ExperimentConfig config;
  std::string out_dir;
  std::shared_ptr<const TransverseGeometry> source;
  std::shared_ptr<const TransverseGeometry> target;

  std::shared_ptr<const GridChart> grid(int n) const { return GridChart::uniform(source, n); }
  int finest() const { return config.resolutions.back(); }

  FoliatedStructure leaves(std::shared_ptr<const GridChart> g) const {
    LeafSpec spec;
    spec.leaf_dimension = config.foliation.leaf_dimension;
    spec.profile = build_profile(config.foliation, source->dimension());
    spec.kappa = config.foliation.profile.kappa;
    return build_foliated_structure(std::move(g), spec);
  }
  FoliatedMapField map(std::shared_ptr<const GridChart> g) const {
    return build_map(config.map, std::move(g), target, config.base_dir);
  }
  std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int cmd_tension(const Context& ctx, std::ostream& out) {
  const auto grid = ctx.grid(ctx.finest());
  const FoliatedMapField map = ctx.map(grid);
  const TensionFieldGrid tau = tension(map);
  std::ostringstream csv;
  write_field_csv(csv, tau, "tau");
  write_text_file(ctx.path("tension.csv"), csv.str());
  json j;
  j["resolution"] = ctx.finest();
  j["max_tension"] = json_number(max_tension_norm(map, tau));
  write_text_file(ctx.path("tension.json"), dump(j));
  out << "max |tau_b| = " << format_double(max_tension_norm(map, tau)) << '\n';
  return kExitOk;
}

int cmd_energy(const Context& ctx, std::ostream& out) {
  const auto grid = ctx.grid(ctx.finest());
  const FoliatedMapField map = ctx.map(grid);
  const FoliatedStructure leaves = ctx.leaves(grid);
  const double e = transversal_energy(map, leaves);
  json j;
  j["resolution"] = ctx.finest();
  j["energy"] = json_number(e);
  j["energy_two_weight"] = json_number(transversal_energy_two_weight(map, leaves));
  write_text_file(ctx.path("energy.json"), dump(j));
  out << "E_B = " << format_double(e) << '\n';
  return kExitOk;
}

int cmd_flow(const Context& ctx, std::ostream& out) {
  const auto grid = ctx.grid(ctx.finest());
  const FoliatedStructure leaves = ctx.leaves(grid);
  const FlowResult result = run_flow(ctx.map(grid), leaves, ctx.config.flow);

  std::ostringstream trace_csv, map_csv;
  write_trace_csv(trace_csv, result.trace);
  write_map_csv(map_csv, result.map);
  write_text_file(ctx.path("trace.csv"), trace_csv.str());
  write_text_file(ctx.path("final_map.csv"), map_csv.str());
  json summary = to_json(result.trace);
  summary["resolution"] = ctx.finest();
  write_text_file(ctx.path("flow.json"), dump(summary));

  const FlowRecord& last = result.trace.records.back();
  out << "flow " << to_string(result.trace.reason) << " after " << last.step << " steps: E_B = "
      << format_double(last.energy) << ", max |tau_b| = " << format_double(last.max_tension) << '\n';

  bool ok = result.trace.reason == FlowTermination::Converged;
  if (ctx.config.flow.energy_backtrack && !summary["energy_monotone"].get<bool>()) {
    out << "FAIL energy increased during the flow\n";
    ok = false;
  }
  if (ctx.config.rigidity) {
    if (!ok) {
      out << "rigidity diagnostics skipped: flow did not converge\n";
      return kExitCheckFailed;
    }
    const RigidityDiagnostics diag = rigidity_diagnostics(result.map, leaves, ctx.config.rigidity->options);
    write_text_file(ctx.path("diagnostics.json"), dump(to_json(diag)));
    out << "verdict " << to_string(diag.verdict) << ", max |d_T phi|^2 = " << format_double(diag.max_density)
        << ", bound = " << format_double(diag.bound_value) << ", rank_T = " << diag.rank_t << '\n';
    if (ctx.config.rigidity->expect_verdict && *ctx.config.rigidity->expect_verdict != to_string(diag.verdict)) {
      out << "FAIL expected verdict " << *ctx.config.rigidity->expect_verdict << '\n';
      ok = false;
    }
  }
  if (result.trace.reason != FlowTermination::Converged) out << "FAIL flow did not reach the tension tolerance\n";
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

double default_tolerance(const CheckConfig& check, const ExperimentConfig& config) {
  if (check.tolerance) return *check.tolerance;
  if (check.name == "first-variation") return 1e-3;
  if (check.name == "lemma-volume") return config.foliation.profile.kappa == KappaSource::ClosedForm ? 1e-12 : 1e-4;
  if (check.name == "divergence") return 1e-8;
  return 1e-3;
}

IdentityResidualReport run_check_once(const Context& ctx, const CheckConfig& check, int n) {
  const auto grid = ctx.grid(n);
  const FoliatedStructure leaves = ctx.leaves(grid);
  const double tol = default_tolerance(check, ctx.config);
  if (check.name == "lemma-volume") return check_lemma_volume(leaves, tol);
  if (check.name == "divergence") {
    const auto x = build_mode_field<VectorField>(check.vector_field, grid, grid->dim());
    return check_divergence(x, leaves, tol);
  }
  const FoliatedMapField map = ctx.map(grid);
  if (check.name == "first-variation") {
    VariationSpec spec;
    spec.v = build_mode_field<TargetVectorField>(check.variation, grid, map.target_dim());
    spec.fd_steps = check.fd_steps;
    return check_first_variation(map, leaves, spec, tol);
  }
  if (check.name == "weitzenbock")
    return check_weitzenbock(map, leaves, check.mode == "harmonic" ? WeitzenbockMode::Harmonic : WeitzenbockMode::General,
                             tol);
  // composition
  const auto psi_target = build_geometry(check.psi->target);
  const auto psi = build_chart_map(check.psi->map, ctx.target, psi_target);
  return check_composition_rule(map, *psi, leaves, tol);
}

IdentityResidualReport run_check(const Context& ctx, const CheckConfig& check) {
  const bool refine = check.refinement.value_or(ctx.config.resolutions.size() >= 2);
  if (!refine) return run_check_once(ctx, check, ctx.finest());
  if (ctx.config.resolutions.size() < 2)
    throw ConfigError("verify.refinement", "a refinement study needs at least two resolutions");
  std::string identity = check.name == "weitzenbock" ? "weitzenbock_" + check.mode : check.name;
  std::replace(identity.begin(), identity.end(), '-', '_');
  return refinement_study(
      identity, ctx.config.resolutions, [&](int n) { return run_check_once(ctx, check, n); }, check.min_order,
      std::min(default_tolerance(check, ctx.config), 1e-9));
}

int cmd_verify(const Context& ctx, const std::vector<std::string>& selected, std::ostream& out) {
  std::vector<CheckConfig> checks;
  if (selected.empty()) {
    checks = ctx.config.checks;
  } else {
    for (const std::string& name : selected) {
      const auto& known = known_checks();
      if (std::find(known.begin(), known.end(), name) == known.end())
        throw ConfigError("verify", "unknown check '" + name + "'");
      bool found = false;
      for (const CheckConfig& c : ctx.config.checks)
        if (c.name == name) {
          checks.push_back(c);
          found = true;
        }
      if (!found) {
        CheckConfig c;
        c.name = name;
        if (name == "first-variation") throw ConfigError("verify", "first-variation needs a configured variation field");
        if (name == "divergence") throw ConfigError("verify", "divergence needs a configured vector_field");
        if (name == "composition") throw ConfigError("verify", "composition needs a configured psi");
        checks.push_back(c);
      }
    }
  }
  if (checks.empty()) throw ConfigError("verify", "no checks selected");

  std::string summary = summary_header();
  std::vector<std::string> failing;
  std::map<std::string, int> seen;
  for (const CheckConfig& check : checks) {
    const IdentityResidualReport report = run_check(ctx, check);
    std::string stem = check.name + (check.name == "weitzenbock" ? "-" + check.mode : "");
    if (seen[stem]++) stem += "-" + std::to_string(seen[stem] - 1);
    write_text_file(ctx.path("reports/" + stem + ".json"), dump(to_json(report)));
    summary += summary_row(report);
    out << (report.passed ? "PASS " : "FAIL ") << stem << ": residual " << format_double(report.residuals.back());
    if (!report.orders.empty()) {
      out << ", orders";
      for (double o : report.orders) out << ' ' << format_double(o);
    }
    out << '\n';
    if (!report.passed) failing.push_back(stem);
  }
  write_text_file(ctx.path("summary.csv"), summary);
  if (!failing.empty()) {
    out << "failing identities:";
    for (const auto& f : failing) out << ' ' << f;
    out << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

json sample_geometry(const TransverseGeometry& geom, std::mt19937_64& rng, int samples, bool& passed) {
  const int q = geom.dimension();
  double inverse_res = 0.0, christoffel_asym = 0.0, symmetry_res = 0.0, bianchi_res = 0.0, model_res = 0.0,
         exp_res = 0.0;
  for (int s = 0; s < samples; ++s) {
    Point p(q);
    for (int a = 0; a < q; ++a) {
      const AxisRange& r = geom.chart()[a];
      const double margin = r.boundary == BoundaryTag::Fixed ? 0.05 * r.length() : 0.0;
      p[a] = r.lo + margin + (r.length() - 2 * margin) * unit(rng);
    }
    const LocalGeometry lg = geom.at(p);
    inverse_res = std::max(inverse_res, (lg.g * lg.g_inv - SmallMat::Identity(q, q)).cwiseAbs().maxCoeff());
    for (int c = 0; c < q; ++c)
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) christoffel_asym = std::max(christoffel_asym, std::abs(lg.gamma(c, a, b) - lg.gamma(c, b, a)));
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b)
        for (int c = 0; c < q; ++c)
          for (int d = 0; d < q; ++d) {
            const double r = lg.riemann_at(a, b, c, d);
            symmetry_res = std::max({symmetry_res, std::abs(r + lg.riemann_at(b, a, c, d)),
                                     std::abs(r + lg.riemann_at(a, b, d, c)), std::abs(r - lg.riemann_at(c, d, a, b))});
            bianchi_res = std::max(bianchi_res, std::abs(r + lg.riemann_at(b, c, a, d) + lg.riemann_at(c, a, b, d)));
          }
    for (int a = 0; a < q; ++a)
      for (int b = a + 1; b < q; ++b) {
        Tangent x = Tangent::Zero(q), y = Tangent::Zero(q);
        x[a] = 1.0;
        y[b] = 1.0;
        model_res = std::max(model_res, std::abs(lg.sectional(x, y) - geom.constant_curvature()));
      }
    // Short random geodesic; sample points keep a margin from the sphere caps so
    // the chart integration never meets the poles.
    Tangent v(q);
    for (int a = 0; a < q; ++a) v[a] = 2.0 * unit(rng) - 1.0;
    if (v.norm() == 0.0) v[0] = 1.0;
    v *= std::min(0.1, 0.4 * geom.injectivity_cap()) / geom.norm(p, v);
    const Point closed = geom.exp(p, v);
    const Point numeric = integrate_geodesic(geom, p, v);
    exp_res = std::max(exp_res, (closed - numeric).cwiseAbs().maxCoeff());
  }
  const bool ok = inverse_res <= 1e-12 && christoffel_asym == 0.0 && symmetry_res <= 1e-10 && bianchi_res <= 1e-10 &&
                  model_res <= 1e-10 && exp_res <= 1e-8;
  passed = passed && ok;
  json j;
  j["geometry"] = geom.describe();
  j["dimension"] = q;
  j["samples"] = samples;
  j["max_metric_inverse_residual"] = json_number(inverse_res);
  j["max_christoffel_asymmetry"] = json_number(christoffel_asym);
  j["max_curvature_symmetry_residual"] = json_number(symmetry_res);
  j["max_bianchi_residual"] = json_number(bianchi_res);
  j["max_sectional_model_residual"] = json_number(model_res);
  j["max_exp_geodesic_residual"] = json_number(exp_res);
  j["passed"] = ok;
  return j;
}

int cmd_report(const Context& ctx, std::ostream& out) {
  std::mt19937_64 rng(ctx.config.seed);
  bool passed = true;
  json j;
  j["seed"] = ctx.config.seed;
  j["source"] = sample_geometry(*ctx.source, rng, 100, passed);
  j["target"] = sample_geometry(*ctx.target, rng, 100, passed);
  j["passed"] = passed;
  write_text_file(ctx.path("geometry_report.json"), dump(j));
  out << (passed ? "PASS" : "FAIL") << " geometry report (" << ctx.source->describe() << " -> "
      << ctx.target->describe() << ")\n";
  return passed ? kExitOk : kExitCheckFailed;
}

}  // namespace

std::string resolve_output_dir(const std::optional<std::string>& flag, const std::string& configured) {
  if (flag) return *flag;
  if (const char* env = std::getenv("FOLHARM_OUT"); env && *env) return env;
  return configured;
}

int run_command(const CliOptions& options, std::ostream& out, std::ostream& err) {
  static const std::vector<std::string> commands = {"tension", "energy", "flow", "verify", "report"};
  if (std::find(commands.begin(), commands.end(), options.command) == commands.end()) {
    err << "error: unknown subcommand '" << options.command << "'\n";
    return kExitConfigError;
  }
  if (!options.checks.empty() && options.command != "verify") {
    err << "error: only verify takes check names\n";
    return kExitConfigError;
  }
  Context ctx;
  try {
    ctx.config = load_config(options.config_path);
    if (options.seed) ctx.config.seed = *options.seed;
    if (options.threads) {
      if (*options.threads < 1) throw ConfigError("--threads", "must be >= 1");
      set_thread_count(*options.threads);
    }
    ctx.out_dir = resolve_output_dir(options.out_dir, ctx.config.output_dir);
    ctx.source = build_geometry(ctx.config.source);
    ctx.target = ctx.config.target ? build_geometry(*ctx.config.target) : ctx.source;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (options.command == "tension") return cmd_tension(ctx, out);
    if (options.command == "energy") return cmd_energy(ctx, out);
    if (options.command == "flow") return cmd_flow(ctx, out);
    if (options.command == "verify") return cmd_verify(ctx, options.checks, out);
    return cmd_report(ctx, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace folharm
