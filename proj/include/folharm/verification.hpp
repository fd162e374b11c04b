#pragma once

#include "folharm/foliated_map.hpp"
#include "folharm/foliated_structure.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace folharm {

struct IdentityResidualReport {
  std::string identity;
  std::vector<int> grids;  // nodes along the first axis, one entry per run
  std::vector<double> residuals;
  std::vector<double> orders;  // log2(res(h) / res(h/2)) between consecutive grids
  double tolerance = 0.0;
  bool passed = false;
  // Named scalars (term maxima, raw sides) in insertion order.
  std::vector<std::pair<std::string, double>> details;

  double detail(const std::string& key) const;
};

// Normal variation phi_t(b) = exp_{phi(b)}(t V(b)).
struct VariationSpec {
  TargetVectorField v;
  std::vector<double> fd_steps{1e-2, 5e-3, 2.5e-3};
};

// Polynomial extrapolation in t^2 to t = 0 (Neville) of symmetric difference quotients.
double richardson_limit(const std::vector<double>& steps, const std::vector<double>& values);

// d/dt E_B(phi_t) at t = 0 against -int <V, tau_b> (1/vol_L) mu_M. Residual is relative
// to |RHS|; the check also passes when the absolute difference is below 1e-8.
// Throws PreconditionError when V is nonzero on a fixed-boundary node.
IdentityResidualReport check_first_variation(const FoliatedMapField& map, const FoliatedStructure& leaves,
                                             const VariationSpec& spec, double tolerance = 1e-3);

struct BochnerTerms {
  ScalarField ricci;      // sum_a g'(d(Ric E_a), d E_a)
  ScalarField curvature;  // sum_{a,b} g'(R'(d E_b, d E_a) d E_a, d E_b)
  ScalarField total;      // ricci - curvature
};

// <F(d_T phi), d_T phi> with the minus sign on the target-curvature contraction.
BochnerTerms bochner_terms(const FoliatedMapField& map);
ScalarField bochner_term(const FoliatedMapField& map, const FoliatedStructure& leaves);

enum class WeitzenbockMode { Harmonic, General };

// Harmonic mode: 1/2 Delta_B |d|^2 = -|S|^2 - <F> + 1/2 kappa#(|d|^2).
// General mode: 1/2 Delta_B |d|^2 = <Delta d, d> - |S|^2 - <A_kappa# d, d> - <F>, with
// Delta d = d_nabla(-tau + d(kappa#)) and A_X d = -nabla~_X d + d_nabla(d(X)).
// Max-norm residual over nodes two layers away from fixed ends.
IdentityResidualReport check_weitzenbock(const FoliatedMapField& map, const FoliatedStructure& leaves,
                                         WeitzenbockMode mode, double tolerance = 1e-6);

// max |d_B vol_L + vol_L kappa_B|. d_B vol_L is vol_L d log vol_L when the profile has a
// closed-form log gradient, grad_B(vol_L) otherwise.
IdentityResidualReport check_lemma_volume(const FoliatedStructure& leaves, double tolerance = 1e-12);

// |int div X vol_L mu_B - int g(X, kappa#) vol_L mu_B| as a report.
IdentityResidualReport check_divergence(const VectorField& x, const FoliatedStructure& leaves,
                                        double tolerance = 1e-8);

// nabla~ d(psi o phi) against d psi(nabla~ d phi) + (nabla~ d psi)(d phi, d phi), full tensor
// and trace, max norm over nodes two layers from fixed ends. residual = tensor residual.
IdentityResidualReport check_composition_rule(const FoliatedMapField& phi, const ChartMap& psi,
                                              const FoliatedStructure& leaves, double tolerance = 1e-6);

// Runs `run(n)` per resolution and merges the single-grid reports. Passes when every
// order is >= min_order, or when the finest residual is already below abs_floor.
IdentityResidualReport refinement_study(const std::string& identity, const std::vector<int>& resolutions,
                                        const std::function<IdentityResidualReport(int)>& run,
                                        double min_order = 1.7, double abs_floor = 1e-12);

}  // namespace folharm
