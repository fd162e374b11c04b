#include "folharm/verification.hpp"

#include "folharm/energy_flow.hpp"
#include "folharm/errors.hpp"
#include "folharm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace folharm {

double IdentityResidualReport::detail(const std::string& key) const {
  for (const auto& [name, value] : details)
    if (name == key) return value;
  throw std::out_of_range("report has no detail '" + key + "'");
}

namespace {

IdentityResidualReport single_grid(std::string identity, const GridChart& grid, double residual,
                                   double tolerance) {
  IdentityResidualReport r;
  r.identity = std::move(identity);
  r.grids = {grid.resolution(0)};
  r.residuals = {residual};
  r.tolerance = tolerance;
  r.passed = residual <= tolerance;
  return r;
}

// Max over nodes two layers away from fixed ends.
template <class Fn>
double interior_max(const GridChart& grid, Fn&& fn) {
  double m = 0.0;
  for (std::size_t node = 0; node < grid.size(); ++node)
    if (grid.interior(node, 2)) m = std::max(m, std::abs(fn(node)));
  return m;
}

}  // namespace

double richardson_limit(const std::vector<double>& steps, const std::vector<double>& values) {
  if (steps.empty() || steps.size() != values.size())
    throw PreconditionError("richardson_limit: need one value per step");
  std::vector<double> x(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) x[i] = steps[i] * steps[i];
  std::vector<double> p = values;
  for (std::size_t level = 1; level < p.size(); ++level)
    for (std::size_t i = 0; i + level < p.size(); ++i)
      p[i] = (x[i] * p[i + 1] - x[i + level] * p[i]) / (x[i] - x[i + level]);
  return p[0];
}

IdentityResidualReport check_first_variation(const FoliatedMapField& map, const FoliatedStructure& leaves,
                                             const VariationSpec& spec, double tolerance) {
  const GridChart& grid = map.source();
  const int qt = map.target_dim();
  if (spec.v.components() != qt || spec.v.size() != grid.size())
    throw PreconditionError("variation field does not match the map");
  if (spec.fd_steps.empty()) throw ConfigError("fd_steps", "need at least one step");
  // Compact support: V must vanish on fixed boundaries (rounding-level samples such
  // as sin(pi) count as zero and are dropped).
  for (std::size_t node = 0; node < grid.size(); ++node) {
    if (!grid.on_fixed_boundary(node)) continue;
    for (int alpha = 0; alpha < qt; ++alpha)
      if (std::abs(spec.v(node, alpha)) > 1e-12)
        throw PreconditionError("variation field must vanish on fixed boundaries");
  }

  auto varied = [&](double t) {
    FoliatedMapField out = map;
    for (std::size_t node = 0; node < map.size(); ++node) {
      const Point v = spec.v.point(node);
      if (grid.on_fixed_boundary(node) || v.isZero(0.0)) continue;
      out.set_value(node, map.target().exp(map.value(node), t * v));
    }
    return transversal_energy(out, leaves);
  };

  std::vector<double> quotients;
  for (double t : spec.fd_steps) {
    if (!(t > 0.0)) throw ConfigError("fd_steps", "steps must be positive");
    quotients.push_back((varied(t) - varied(-t)) / (2.0 * t));
  }
  const double fd = richardson_limit(spec.fd_steps, quotients);

  const TensionFieldGrid tau = tension(map);
  ScalarField pairing(map.source_ptr());
  for (std::size_t node = 0; node < map.size(); ++node) {
    const SmallMat gt = map.target().metric(map.value(node));
    if (!grid.on_fixed_boundary(node)) pairing[node] = spec.v.point(node).dot(gt * tau.point(node));
  }
  const double rhs = -integrate(pairing, leaves, Weight::InverseLeafVolume);

  const double abs_residual = std::abs(fd - rhs);
  const double rel_residual = std::abs(rhs) > 0.0 ? abs_residual / std::abs(rhs) : abs_residual;
  IdentityResidualReport r = single_grid("first_variation", grid, rel_residual, tolerance);
  r.passed = rel_residual <= tolerance || abs_residual <= 1e-8;
  r.details = {{"fd_derivative", fd}, {"rhs", rhs}, {"abs_residual", abs_residual}};
  return r;
}

BochnerTerms bochner_terms(const FoliatedMapField& map) {
  const GridChart& grid = map.source();
  const int qt = map.target_dim();
  const JacobianField d = d_T(map);
  BochnerTerms out{ScalarField(map.source_ptr()), ScalarField(map.source_ptr()), ScalarField(map.source_ptr())};
  for_each_node(map.size(), [&](std::size_t node) {
    const LocalGeometry src = grid.geometry().at(grid.coords(node));
    const LocalGeometry tgt = map.target().at(map.value(node));
    const SmallMat dm = d.matrix(node);
    // Ric^c_a = g^{cd} Ric_{da}
    const SmallMat ric_up = src.g_inv * src.ricci;
    const double ricci_term = (src.g_inv * dm.transpose() * tgt.g * dm * ric_up).trace();
    // H^{alpha beta} = D g^{-1} D^T; contraction R'_{abcd} H^{ad} H^{bc}
    const SmallMat h = dm * src.g_inv * dm.transpose();
    double curvature_term = 0.0;
    for (int a = 0; a < qt; ++a)
      for (int b = 0; b < qt; ++b)
        for (int c = 0; c < qt; ++c)
          for (int e = 0; e < qt; ++e) curvature_term += tgt.riemann_at(a, b, c, e) * h(a, e) * h(b, c);
    out.ricci[node] = ricci_term;
    out.curvature[node] = curvature_term;
    out.total[node] = ricci_term - curvature_term;
  });
  return out;
}

ScalarField bochner_term(const FoliatedMapField& map, const FoliatedStructure& leaves) {
  (void)leaves;
  return bochner_terms(map).total;
}

IdentityResidualReport check_weitzenbock(const FoliatedMapField& map, const FoliatedStructure& leaves,
                                         WeitzenbockMode mode, double tolerance) {
  const GridChart& grid = map.source();
  const int q = grid.dim();
  const int qt = map.target_dim();
  const std::size_t size = map.size();

  const JacobianField d = d_T(map);
  const SecondFormField s = second_fund_form(map);
  const TensionFieldGrid tau = trace_second_form(s);
  const BochnerTerms bochner = bochner_terms(map);
  const VectorField& kappa_sharp = leaves.kappa_sharp();

  std::vector<SmallMat> gt(size);
  std::vector<Christoffel> gamma_t(size);
  for (std::size_t node = 0; node < size; ++node) {
    gt[node] = map.target().metric(map.value(node));
    gamma_t[node] = map.target().christoffel(map.value(node));
  }

  ScalarField density(map.source_ptr());
  ScalarField s_norm2(map.source_ptr());
  for (std::size_t node = 0; node < size; ++node) {
    const SmallMat dm = d.matrix(node);
    density[node] = (grid.g_inv(node) * dm.transpose() * gt[node] * dm).trace();
    const double sn = second_form_norm(s, map, node);
    s_norm2[node] = sn * sn;
  }
  ScalarField lhs = delta_B_scalar(density, leaves);
  for (double& v : lhs.data()) v *= 0.5;

  // Pull-back covariant derivative of a section along phi, paired with d_T phi:
  // g^{ab} g'(nabla_a u, D_b) with nabla_a u^c = d_a u^c + Gamma'^c_{ij} D^i_a u^j.
  auto paired_derivative = [&](const TargetVectorField& u, std::size_t node) {
    const SmallMat dm = d.matrix(node);
    SmallMat nabla_u(qt, q);
    for (int a = 0; a < q; ++a) {
      const Point du = partial(grid, node, a, [&](std::size_t n, const Wraps&) { return u.point(n); });
      for (int c = 0; c < qt; ++c) {
        double v = du[c];
        for (int i = 0; i < qt; ++i)
          for (int j = 0; j < qt; ++j) v += gamma_t[node](c, i, j) * dm(i, a) * u(node, j);
        nabla_u(c, a) = v;
      }
    }
    return (grid.g_inv(node) * nabla_u.transpose() * gt[node] * dm).trace();
  };

  ScalarField rhs(map.source_ptr());
  std::vector<std::pair<std::string, double>> details;
  auto term_max = [&](const ScalarField& f) { return interior_max(grid, [&](std::size_t n) { return f[n]; }); };

  if (mode == WeitzenbockMode::Harmonic) {
    ScalarField drift(map.source_ptr());
    for (std::size_t node = 0; node < size; ++node) {
      double v = 0.0;
      for (int a = 0; a < q; ++a)
        v += kappa_sharp(node, a) *
             partial(grid, node, a, [&](std::size_t n, const Wraps&) { return density[n]; });
      drift[node] = 0.5 * v;
      rhs[node] = -s_norm2[node] - bochner.total[node] + drift[node];
    }
    details = {{"max_lhs", term_max(lhs)},
               {"max_second_form_sq", term_max(s_norm2)},
               {"max_drift", term_max(drift)},
               {"max_ricci_term", term_max(bochner.ricci)},
               {"max_curvature_term", term_max(bochner.curvature)},
               {"max_bochner", term_max(bochner.total)}};
  } else {
    // sigma = delta_nabla d_T phi = -tau + d(kappa#); u = d(kappa#).
    TargetVectorField sigma(map.source_ptr(), qt);
    TargetVectorField u(map.source_ptr(), qt);
    for (std::size_t node = 0; node < size; ++node) {
      const Point dk = d.matrix(node) * kappa_sharp.point(node);
      u.set(node, dk);
      sigma.set(node, -tau.point(node) + dk);
    }
    ScalarField laplace_term(map.source_ptr());
    ScalarField a_term(map.source_ptr());
    for (std::size_t node = 0; node < size; ++node) {
      laplace_term[node] = paired_derivative(sigma, node);
      // <A_X d, d> = -<nabla~_X d, d> + <d_nabla(d(X)), d>
      const SmallMat dm = d.matrix(node);
      double nabla_x = 0.0;
      for (int c = 0; c < q; ++c) {
        if (kappa_sharp(node, c) == 0.0) continue;
        SmallMat sc(qt, q);
        for (int g = 0; g < qt; ++g)
          for (int a = 0; a < q; ++a) sc(g, a) = s(node, g, c, a);
        nabla_x += kappa_sharp(node, c) * (grid.g_inv(node) * sc.transpose() * gt[node] * dm).trace();
      }
      a_term[node] = -nabla_x + paired_derivative(u, node);
      rhs[node] = laplace_term[node] - s_norm2[node] - a_term[node] - bochner.total[node];
    }
    details = {{"max_lhs", term_max(lhs)},
               {"max_laplace_term", term_max(laplace_term)},
               {"max_second_form_sq", term_max(s_norm2)},
               {"max_a_term", term_max(a_term)},
               {"max_ricci_term", term_max(bochner.ricci)},
               {"max_curvature_term", term_max(bochner.curvature)},
               {"max_bochner", term_max(bochner.total)}};
  }

  const double residual = interior_max(grid, [&](std::size_t n) { return lhs[n] - rhs[n]; });
  IdentityResidualReport r = single_grid(
      mode == WeitzenbockMode::Harmonic ? "weitzenbock_harmonic" : "weitzenbock_general", grid, residual,
      tolerance);
  r.details = std::move(details);
  return r;
}

IdentityResidualReport check_lemma_volume(const FoliatedStructure& leaves, double tolerance) {
  const GridChart& grid = leaves.grid();
  const int q = grid.dim();
  const ScalarField& vol = leaves.leaf_volume();
  CovectorField dvol(leaves.grid_ptr(), q);
  const bool closed_form = static_cast<bool>(leaves.profile().log_gradient);
  if (closed_form) {
    for (std::size_t node = 0; node < grid.size(); ++node)
      dvol.set(node, vol[node] * leaves.profile().log_gradient(grid.coords(node)));
  } else {
    dvol = grad_B(vol);
  }
  double residual = 0.0;
  for (std::size_t node = 0; node < grid.size(); ++node)
    for (int a = 0; a < q; ++a)
      residual = std::max(residual, std::abs(dvol(node, a) + vol[node] * leaves.kappa()(node, a)));
  IdentityResidualReport r = single_grid("lemma_volume", grid, residual, tolerance);
  r.details = {{"closed_form_dvol", closed_form ? 1.0 : 0.0},
               {"discrete_kappa", leaves.kappa_source() == KappaSource::Discrete ? 1.0 : 0.0}};
  return r;
}

IdentityResidualReport check_divergence(const VectorField& x, const FoliatedStructure& leaves, double tolerance) {
  const double residual = check_divergence_theorem(x, leaves);
  return single_grid("divergence", x.grid(), residual, tolerance);
}

IdentityResidualReport check_composition_rule(const FoliatedMapField& phi, const ChartMap& psi,
                                              const FoliatedStructure& leaves, double tolerance) {
  (void)leaves;
  const GridChart& grid = phi.source();
  const int q = grid.dim();
  const int qm = phi.target_dim();
  const int qt = psi.target_dim();

  const FoliatedMapField composed = compose(phi, psi);
  const SecondFormField lhs = second_fund_form(composed);
  const SecondFormField s_phi = second_fund_form(phi);
  const JacobianField d_phi = d_T(phi);

  double tensor_residual = 0.0;
  double trace_residual = 0.0;
  double max_lhs = 0.0;
  for (std::size_t node = 0; node < grid.size(); ++node) {
    if (!grid.interior(node, 2)) continue;
    const Point y = phi.value(node);
    const SmallMat dpsi = psi.jacobian(y);
    const auto s_psi = chart_map_second_form(psi, y);
    const SmallMat dm = d_phi.matrix(node);
    const SmallMat& g_inv = grid.g_inv(node);
    for (int g = 0; g < qt; ++g) {
      double trace_l = 0.0;
      double trace_r = 0.0;
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) {
          double r = 0.0;
          for (int m = 0; m < qm; ++m) r += dpsi(g, m) * s_phi(node, m, a, b);
          for (int i = 0; i < qm; ++i)
            for (int j = 0; j < qm; ++j) r += s_psi[g](i, j) * dm(i, a) * dm(j, b);
          const double l = lhs(node, g, a, b);
          tensor_residual = std::max(tensor_residual, std::abs(l - r));
          max_lhs = std::max(max_lhs, std::abs(l));
          trace_l += g_inv(a, b) * l;
          trace_r += g_inv(a, b) * r;
        }
      trace_residual = std::max(trace_residual, std::abs(trace_l - trace_r));
    }
  }
  IdentityResidualReport r = single_grid("composition", grid, tensor_residual, tolerance);
  r.details = {{"trace_residual", trace_residual}, {"max_lhs", max_lhs}};
  r.passed = tensor_residual <= tolerance && trace_residual <= tolerance;
  return r;
}

IdentityResidualReport refinement_study(const std::string& identity, const std::vector<int>& resolutions,
                                        const std::function<IdentityResidualReport(int)>& run,
                                        double min_order, double abs_floor) {
  if (resolutions.size() < 2) throw ConfigError("resolutions", "a refinement study needs at least two grids");
  IdentityResidualReport out;
  out.identity = identity;
  out.tolerance = min_order;
  for (int n : resolutions) {
    IdentityResidualReport single = run(n);
    if (single.residuals.empty()) throw PreconditionError("refinement_study: run returned no residual");
    out.grids.push_back(single.grids.empty() ? n : single.grids.front());
    out.residuals.push_back(single.residuals.front());
    out.details = std::move(single.details);
  }
  bool orders_ok = true;
  for (std::size_t i = 0; i + 1 < out.residuals.size(); ++i) {
    const double ratio = out.residuals[i] / out.residuals[i + 1];
    const double order = std::log2(ratio);
    out.orders.push_back(order);
    if (!(order >= min_order)) orders_ok = false;
  }
  out.passed = orders_ok || out.residuals.back() <= abs_floor;
  return out;
}

}  // namespace folharm
