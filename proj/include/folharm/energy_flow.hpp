#pragma once

#include "folharm/foliated_map.hpp"
#include "folharm/foliated_structure.hpp"

#include <optional>
#include <string>
#include <vector>

namespace folharm {

struct FlowConfig {
  // Step size; 0.9 * stability_bound(grid) when unset.
  std::optional<double> dt;
  int max_steps = 200000;
  // Stop once max-node |tau_b| (target metric) is at or below this.
  double tension_tol = 1e-6;
  // Halve dt and retry whenever a step would raise the energy.
  bool energy_backtrack = true;
  // When set, every fixed-boundary node is pinned to this target point.
  std::optional<Point> boundary_value;
  double min_dt = 1e-14;
};

struct FlowRecord {
  int step = 0;
  double energy = 0.0;
  double max_tension = 0.0;
  double max_second_form = 0.0;
  double max_density = 0.0;  // max |d_T phi|^2
  double dt = 0.0;
};

enum class FlowTermination { Converged, MaxSteps, DtUnderflow, Stagnated };
std::string to_string(FlowTermination reason);

struct FlowTrace {
  std::vector<FlowRecord> records;
  FlowTermination reason = FlowTermination::MaxSteps;
};

struct FlowResult {
  FoliatedMapField map;
  FlowTrace trace;
};

// E_B = 1/2 int |d_T phi|^2 (1/vol_L) mu_M; with mu_M = vol_L mu_B the leaf volume cancels.
double transversal_energy(const FoliatedMapField& map, const FoliatedStructure& leaves);
// The same integral written with the two explicit weights 1/vol_L and vol_L mu_B.
double transversal_energy_two_weight(const FoliatedMapField& map, const FoliatedStructure& leaves);

// Explicit-Euler bound 1 / (2 max_node sum_a g^{aa} / h_a^2).
double stability_bound(const GridChart& grid);

// phi_new(b) = exp_{phi(b)}(dt * tau_b(phi)(b)); fixed-boundary nodes are left alone.
// Throws StepTooLargeError when a step exceeds the target injectivity cap.
FoliatedMapField flow_step(const FoliatedMapField& map, double dt);

// Iterates flow_step until the tension tolerance, max_steps or dt underflow.
// Throws FlowDivergedError when the energy exceeds ten times its initial value.
FlowResult run_flow(const FoliatedMapField& initial, const FoliatedStructure& leaves, const FlowConfig& config);

struct RigidityOptions {
  double rank_cap = 2.0;  // C
  double tension_tol = 1e-6;
  double constant_tol = 1e-4;
  double geodesic_tol = 1e-5;
  double rank_tol = 1e-6;  // relative to the largest singular value over the grid
};

enum class Verdict { TransversallyConstant, TotallyGeodesic, BoundViolated, Inconclusive };
std::string to_string(Verdict verdict);

struct RigidityDiagnostics {
  double lambda = 0.0;       // min eigenvalue of Ric^Q w.r.t. g over the source grid
  double mu = 0.0;           // max K^{Q'} over coordinate 2-planes at image points
  double rank_cap = 2.0;     // C
  int rank_t = 0;            // max numerical rank of d_T phi
  double bound_value = 0.0;  // lambda C / (mu (C - 1)); +inf if mu <= 0, NaN if lambda <= 0
  double max_density = 0.0;  // max |d_T phi|^2
  double max_second_form = 0.0;
  double max_tension = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

// Requires max |tau_b| <= options.tension_tol (PreconditionError otherwise).
RigidityDiagnostics rigidity_diagnostics(const FoliatedMapField& map, const FoliatedStructure& leaves,
                                         const RigidityOptions& options);

}  // namespace folharm
