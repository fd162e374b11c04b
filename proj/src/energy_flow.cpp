#include "folharm/energy_flow.hpp"

#include "folharm/errors.hpp"
#include "folharm/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace folharm {

std::string to_string(FlowTermination reason) {
  switch (reason) {
    case FlowTermination::Converged:
      return "converged";
    case FlowTermination::MaxSteps:
      return "max_steps";
    case FlowTermination::DtUnderflow:
      return "dt_underflow";
    case FlowTermination::Stagnated:
      return "stagnated";
  }
  return "unknown";
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::TransversallyConstant:
      return "transversally_constant";
    case Verdict::TotallyGeodesic:
      return "totally_geodesic";
    case Verdict::BoundViolated:
      return "bound_violated";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

double transversal_energy(const FoliatedMapField& map, const FoliatedStructure& leaves) {
  return integrate(energy_density(map), leaves, Weight::InverseLeafVolume);
}

double transversal_energy_two_weight(const FoliatedMapField& map, const FoliatedStructure& leaves) {
  ScalarField weighted = energy_density(map);
  for (std::size_t i = 0; i < weighted.size(); ++i) weighted[i] /= leaves.leaf_volume()[i];
  return integrate(weighted, leaves, Weight::ManifoldVolume);
}

double stability_bound(const GridChart& grid) {
  double worst = 0.0;
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const SmallMat& g_inv = grid.g_inv(node);
    double s = 0.0;
    for (int a = 0; a < grid.dim(); ++a) s += g_inv(a, a) / (grid.spacing(a) * grid.spacing(a));
    worst = std::max(worst, s);
  }
  return 1.0 / (2.0 * worst);
}

FoliatedMapField flow_step(const FoliatedMapField& map, double dt) {
  if (!(dt > 0.0)) throw PreconditionError("flow_step: dt must be positive");
  const TensionFieldGrid tau = tension(map);
  FoliatedMapField next = map;
  const GridChart& grid = map.source();
  for_each_node(map.size(), [&](std::size_t node) {
    if (grid.on_fixed_boundary(node)) return;
    next.set_value(node, map.target().exp(map.value(node), dt * tau.point(node)));
  });
  return next;
}

namespace {

struct FlowState {
  double energy = 0.0;
  double max_tension = 0.0;
  double max_second_form = 0.0;
  double max_density = 0.0;
};

FlowState measure(const FoliatedMapField& map, const FoliatedStructure& leaves) {
  FlowState s;
  const ScalarField density = energy_density(map);
  s.energy = integrate(density, leaves, Weight::InverseLeafVolume);
  for (std::size_t i = 0; i < density.size(); ++i) s.max_density = std::max(s.max_density, 2.0 * density[i]);
  const SecondFormField form = second_fund_form(map);
  const TensionFieldGrid tau = trace_second_form(form);
  s.max_tension = max_tension_norm(map, tau);
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map.source().interior(i, 1)) s.max_second_form = std::max(s.max_second_form, second_form_norm(form, map, i));
  return s;
}

}  // namespace

FlowResult run_flow(const FoliatedMapField& initial, const FoliatedStructure& leaves, const FlowConfig& config) {
  if (config.max_steps < 0) throw ConfigError("max_steps", "must be >= 0");
  if (!(config.tension_tol > 0.0)) throw ConfigError("tension_tol", "must be positive");
  FoliatedMapField map = initial;
  const GridChart& grid = map.source();
  if (config.boundary_value) {
    if (config.boundary_value->size() != map.target_dim())
      throw ConfigError("boundary_value", "expected one coordinate per target axis");
    for (std::size_t i = 0; i < map.size(); ++i)
      if (grid.on_fixed_boundary(i)) map.set_value(i, *config.boundary_value);
  }
  double dt = config.dt ? *config.dt : 0.9 * stability_bound(grid);
  if (!(dt > 0.0)) throw ConfigError("dt", "must be positive");

  FlowTrace trace;
  FlowState state = measure(map, leaves);
  const double initial_energy = state.energy;
  trace.records.push_back({0, state.energy, state.max_tension, state.max_second_form, state.max_density, dt});

  int step = 0;
  while (true) {
    if (state.max_tension <= config.tension_tol) {
      trace.reason = FlowTermination::Converged;
      break;
    }
    if (step >= config.max_steps) {
      trace.reason = FlowTermination::MaxSteps;
      break;
    }
    if (dt < config.min_dt) {
      trace.reason = FlowTermination::DtUnderflow;
      break;
    }
    std::optional<FoliatedMapField> candidate;
    try {
      candidate.emplace(flow_step(map, dt));
      candidate->validate();
    } catch (const StepTooLargeError&) {
      dt *= 0.5;
      continue;
    } catch (const DomainError&) {
      dt *= 0.5;
      continue;
    } catch (const InvalidMapError&) {
      dt *= 0.5;
      continue;
    }
    const FlowState next = measure(*candidate, leaves);
    if (!std::isfinite(next.energy) || next.energy > 10.0 * std::max(initial_energy, 1e-300)) {
      if (config.energy_backtrack && std::isfinite(next.energy) && next.energy > state.energy) {
        dt *= 0.5;
        continue;
      }
      throw FlowDivergedError("transversal energy exceeded ten times its initial value");
    }
    if (config.energy_backtrack && next.energy > state.energy) {
      // An increase at rounding level means the iterate no longer resolves any descent.
      const double roundoff = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(state.energy);
      if (next.energy - state.energy <= roundoff) {
        trace.reason = FlowTermination::Stagnated;
        break;
      }
      dt *= 0.5;
      continue;
    }
    map = std::move(*candidate);
    state = next;
    ++step;
    trace.records.push_back({step, state.energy, state.max_tension, state.max_second_form, state.max_density, dt});
  }
  return {std::move(map), std::move(trace)};
}

RigidityDiagnostics rigidity_diagnostics(const FoliatedMapField& map, const FoliatedStructure& leaves,
                                         const RigidityOptions& options) {
  (void)leaves;
  if (!(options.rank_cap >= 2.0)) throw ConfigError("rank_cap", "C must be >= 2");
  const GridChart& grid = map.source();
  const TransverseGeometry& source = grid.geometry();
  const TransverseGeometry& target = map.target();
  const int qt = map.target_dim();

  const SecondFormField form = second_fund_form(map);
  const TensionFieldGrid tau = trace_second_form(form);
  RigidityDiagnostics out;
  out.rank_cap = options.rank_cap;
  out.max_tension = max_tension_norm(map, tau);
  if (out.max_tension > options.tension_tol)
    throw PreconditionError("rigidity diagnostics need a transversally harmonic map (max |tau_b| = " +
                            std::to_string(out.max_tension) + ")");

  const JacobianField d = d_T(map);
  out.lambda = std::numeric_limits<double>::infinity();
  out.mu = qt >= 2 ? -std::numeric_limits<double>::infinity() : 0.0;
  std::vector<Eigen::VectorXd> singular_values;
  singular_values.reserve(map.size());
  double top = 0.0;
  for (std::size_t node = 0; node < map.size(); ++node) {
    const LocalGeometry src = source.at(grid.coords(node));
    const Eigen::MatrixXd ric = src.ricci;
    const Eigen::MatrixXd g = src.g;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(ric, g, Eigen::EigenvaluesOnly);
    out.lambda = std::min(out.lambda, eig.eigenvalues().minCoeff());

    const Point image = map.value(node);
    const LocalGeometry tgt = target.at(image);
    for (int alpha = 0; alpha < qt; ++alpha)
      for (int beta = alpha + 1; beta < qt; ++beta) {
        Tangent x = Tangent::Zero(qt), y = Tangent::Zero(qt);
        x[alpha] = 1.0;
        y[beta] = 1.0;
        out.mu = std::max(out.mu, tgt.sectional(x, y));
      }

    const SmallMat dm = d.matrix(node);
    out.max_density = std::max(out.max_density, (src.g_inv * dm.transpose() * tgt.g * dm).trace());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gt_eig{Eigen::MatrixXd(tgt.g)};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> g_eig{Eigen::MatrixXd(src.g)};
    const Eigen::MatrixXd scaled =
        gt_eig.operatorSqrt() * Eigen::MatrixXd(dm) * g_eig.operatorInverseSqrt();
    singular_values.push_back(Eigen::JacobiSVD<Eigen::MatrixXd>(scaled).singularValues());
    if (singular_values.back().size()) top = std::max(top, singular_values.back().maxCoeff());

    if (grid.interior(node, 1)) out.max_second_form = std::max(out.max_second_form, second_form_norm(form, map, node));
  }
  // Numerical rank against rank_tol times the largest singular value over the grid.
  for (const Eigen::VectorXd& sv : singular_values) {
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > options.rank_tol * top && sv[i] > 1e-12) ++rank;
    out.rank_t = std::max(out.rank_t, rank);
  }

  const double c = options.rank_cap;
  if (!(out.lambda > 0.0))
    out.bound_value = std::numeric_limits<double>::quiet_NaN();
  else if (!(out.mu > 0.0))
    out.bound_value = std::numeric_limits<double>::infinity();
  else
    out.bound_value = out.lambda * c / (out.mu * (c - 1.0));

  if (out.max_density <= options.constant_tol) {
    out.verdict = Verdict::TransversallyConstant;
  } else if (out.max_second_form <= options.geodesic_tol) {
    out.verdict = Verdict::TotallyGeodesic;
  } else if (out.lambda > 0.0 && out.rank_t <= c && out.max_density > out.bound_value) {
    out.verdict = Verdict::BoundViolated;
  } else {
    out.verdict = Verdict::Inconclusive;
  }
  return out;
}

}  // namespace folharm
