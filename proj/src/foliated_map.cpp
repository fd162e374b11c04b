#include "folharm/foliated_map.hpp"

#include "folharm/errors.hpp"
#include "folharm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace folharm {

namespace {

struct NodeJet {
  SmallMat jacobian;  // D(alpha, a)
  Hessian hessian;    // raw second partials per target component
};

NodeJet node_jet(const FoliatedMapField& map, std::size_t node, bool with_hessian) {
  const GridChart& grid = map.source();
  const int q = grid.dim();
  const int qt = map.target_dim();
  auto sample = [&](std::size_t n, const Wraps& w) { return map.lifted(n, w); };
  NodeJet jet;
  jet.jacobian = SmallMat::Zero(qt, q);
  for (int a = 0; a < q; ++a) jet.jacobian.col(a) = partial(grid, node, a, sample);
  if (with_hessian) {
    for (int gamma = 0; gamma < qt; ++gamma) jet.hessian[gamma] = SmallMat::Zero(q, q);
    for (int a = 0; a < q; ++a) {
      for (int b = a; b < q; ++b) {
        const Point h = second_partial(grid, node, a, b, sample);
        for (int gamma = 0; gamma < qt; ++gamma) {
          jet.hessian[gamma](a, b) = h[gamma];
          jet.hessian[gamma](b, a) = h[gamma];
        }
      }
    }
  }
  return jet;
}

// S^gamma_{ab} from raw partials, source Christoffels and target Christoffels at phi.
void second_form_from_jet(const NodeJet& jet, const Christoffel& source_gamma,
                          const Christoffel& target_gamma, int q, int qt, Hessian& s) {
  for (int gamma = 0; gamma < qt; ++gamma) {
    s[gamma] = SmallMat::Zero(q, q);
    for (int a = 0; a < q; ++a) {
      for (int b = 0; b < q; ++b) {
        double v = jet.hessian[gamma](a, b);
        for (int c = 0; c < q; ++c) v -= source_gamma(c, a, b) * jet.jacobian(gamma, c);
        for (int al = 0; al < qt; ++al)
          for (int be = 0; be < qt; ++be)
            v += target_gamma(gamma, al, be) * jet.jacobian(al, a) * jet.jacobian(be, b);
        s[gamma](a, b) = v;
      }
    }
  }
}

WindingMatrix deduce_winding(const TransverseGeometry& source, const TransverseGeometry& target,
                             const Eigen::MatrixXd& linear) {
  const int q = source.dimension();
  const int qt = target.dimension();
  WindingMatrix w = WindingMatrix::Zero(qt, q);
  for (int alpha = 0; alpha < qt; ++alpha) {
    for (int a = 0; a < q; ++a) {
      if (source.chart()[a].boundary != BoundaryTag::Periodic) continue;
      const double period = source.chart()[a].length();
      const double advance = linear(alpha, a) * period;
      const auto target_period = target.coordinate_period(alpha);
      if (!target_period) {
        if (std::abs(advance) > 1e-12)
          throw ConfigError("linear", "non-periodic target coordinate advances around a periodic axis");
        continue;
      }
      const double turns = advance / *target_period;
      const double rounded = std::round(turns);
      if (std::abs(turns - rounded) > 1e-9)
        throw ConfigError("linear", "linear part does not close up on the target torus");
      w(alpha, a) = static_cast<int>(rounded);
    }
  }
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------

FoliatedMapField::FoliatedMapField(std::shared_ptr<const GridChart> source,
                                   std::shared_ptr<const TransverseGeometry> target, WindingMatrix winding)
    : source_(std::move(source)), target_(std::move(target)), winding_(std::move(winding)) {
  const int q = source_->dim();
  const int qt = target_->dimension();
  if (winding_.rows() != qt || winding_.cols() != q)
    throw InvalidMapError("winding matrix must be target_dim x source_dim");
  shift_ = Eigen::MatrixXd::Zero(qt, q);
  for (int alpha = 0; alpha < qt; ++alpha) {
    for (int a = 0; a < q; ++a) {
      if (winding_(alpha, a) == 0) continue;
      const auto period = target_->coordinate_period(alpha);
      if (source_->boundary(a) != BoundaryTag::Periodic || !period)
        throw InvalidMapError("nonzero winding needs a periodic source axis and a periodic target coordinate");
      shift_(alpha, a) = winding_(alpha, a) * *period;
    }
  }
  values_ = NodeField<LiftTag>(source_, qt);
}

FoliatedMapField::FoliatedMapField(std::shared_ptr<const GridChart> source,
                                   std::shared_ptr<const TransverseGeometry> target)
    : FoliatedMapField(source, target, WindingMatrix::Zero(target->dimension(), source->dim())) {}

void FoliatedMapField::validate() const {
  const GridChart& grid = *source_;
  const int q = grid.dim();
  const int qt = target_dim();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point p = value(i);
    if (!target_->in_domain(p)) {
      std::ostringstream os;
      os << "map value at node " << i << " lies outside the domain of " << target_->describe();
      throw DomainError(os.str());
    }
    if (!target_->in_chart(p)) {
      std::ostringstream os;
      os << "map value at node " << i << " lies outside the chart of " << target_->describe();
      throw InvalidMapError(os.str());
    }
  }
  // A wrong winding shows up as a seam jump of the order of a target period, far
  // larger than any interior step of a resolved map.
  for (int a = 0; a < q; ++a) {
    if (grid.boundary(a) != BoundaryTag::Periodic) continue;
    const int n = grid.resolution(a);
    for (int alpha = 0; alpha < qt; ++alpha) {
      double interior_step = 0.0;
      double seam_step = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Neighbor next = grid.step(i, a, 1);
        Wraps w{};
        w[a] = next.wrap;
        const double d = std::abs(lifted(next.node, alpha, w) - values_(i, alpha));
        if (grid.index(i)[a] == n - 1)
          seam_step = std::max(seam_step, d);
        else
          interior_step = std::max(interior_step, d);
      }
      if (seam_step > 4.0 * interior_step + 1e-9) {
        std::ostringstream os;
        os << "seam jump " << seam_step << " on axis " << a << " (component " << alpha
           << ") is inconsistent with the winding matrix";
        throw InvalidMapError(os.str());
      }
    }
  }
}

SmallMat JacobianField::matrix(std::size_t node) const {
  SmallMat m(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(r, c) = (*this)(node, r * cols_ + c);
  return m;
}

void JacobianField::set_matrix(std::size_t node, const SmallMat& m) {
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) (*this)(node, r * cols_ + c) = m(r, c);
}

// ---------------------------------------------------------------------------

AnalyticMap::AnalyticMap(std::string name, std::shared_ptr<const TransverseGeometry> source,
                         std::shared_ptr<const TransverseGeometry> target, Point offset,
                         Eigen::MatrixXd linear, std::vector<SineMode> modes)
    : name_(std::move(name)), source_(std::move(source)), target_(std::move(target)),
      offset_(std::move(offset)), linear_(std::move(linear)), modes_(std::move(modes)) {
  const int q = source_->dimension();
  const int qt = target_->dimension();
  if (offset_.size() != qt) throw ConfigError("offset", "expected one entry per target coordinate");
  if (linear_.rows() != qt || linear_.cols() != q)
    throw ConfigError("linear", "linear part must be target_dim x source_dim");
  for (SineMode& mode : modes_) {
    if (mode.component < 0 || mode.component >= qt)
      throw ConfigError("modes.component", "component out of range");
    if (static_cast<int>(mode.k.size()) != q)
      throw ConfigError("modes.k", "expected one wave number per source axis");
    if (mode.phase.empty()) mode.phase.assign(mode.product ? q : 1, 0.0);
    if (mode.product && static_cast<int>(mode.phase.size()) != q)
      throw ConfigError("modes.phase", "product modes need one phase per source axis");
  }
  winding_ = deduce_winding(*source_, *target_, linear_);
}

std::shared_ptr<const AnalyticMap> AnalyticMap::identity(std::shared_ptr<const TransverseGeometry> geometry) {
  const int q = geometry->dimension();
  return std::make_shared<const AnalyticMap>("identity", geometry, geometry, Point::Zero(q),
                                             Eigen::MatrixXd::Identity(q, q));
}

std::shared_ptr<const AnalyticMap> AnalyticMap::constant(std::shared_ptr<const TransverseGeometry> source,
                                                         std::shared_ptr<const TransverseGeometry> target,
                                                         Point value) {
  const int q = source->dimension();
  const int qt = target->dimension();
  return std::make_shared<const AnalyticMap>("constant", std::move(source), std::move(target),
                                             std::move(value), Eigen::MatrixXd::Zero(qt, q));
}

std::shared_ptr<const AnalyticMap> AnalyticMap::linear_with_winding(
    std::shared_ptr<const TransverseGeometry> source, std::shared_ptr<const TransverseGeometry> target,
    const WindingMatrix& winding, Point offset) {
  const int q = source->dimension();
  const int qt = target->dimension();
  if (winding.rows() != qt || winding.cols() != q)
    throw ConfigError("winding", "winding matrix must be target_dim x source_dim");
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(qt, q);
  for (int alpha = 0; alpha < qt; ++alpha) {
    for (int a = 0; a < q; ++a) {
      if (winding(alpha, a) == 0) continue;
      const auto period = target->coordinate_period(alpha);
      if (source->chart()[a].boundary != BoundaryTag::Periodic || !period)
        throw ConfigError("winding", "nonzero winding needs periodic source axis and target coordinate");
      linear(alpha, a) = winding(alpha, a) * *period / source->chart()[a].length();
    }
  }
  return std::make_shared<const AnalyticMap>("linear", std::move(source), std::move(target),
                                             std::move(offset), std::move(linear));
}

std::shared_ptr<const AnalyticMap> AnalyticMap::latitude_circle(
    std::shared_ptr<const TransverseGeometry> source, std::shared_ptr<const TransverseGeometry> sphere,
    double theta0, double phi0, int turns, int axis) {
  if (sphere->kind() != GeometryKind::RoundSphere)
    throw ConfigError("target", "latitude circles map into a round sphere");
  const int q = source->dimension();
  if (axis < 0 || axis >= q) throw ConfigError("axis", "axis out of range");
  WindingMatrix w = WindingMatrix::Zero(2, q);
  w(1, axis) = turns;
  Point offset(2);
  offset << theta0, phi0;
  auto map = linear_with_winding(std::move(source), std::move(sphere), w, offset);
  return std::make_shared<const AnalyticMap>("latitude_circle", map->source_geometry(),
                                             map->target_geometry(), offset, map->linear());
}

Point AnalyticMap::value(const Point& y) const {
  Point v = offset_ + linear_ * y;
  for (const SineMode& m : modes_) {
    if (m.product) {
      double prod = m.amplitude;
      for (int a = 0; a < y.size(); ++a) prod *= std::sin(m.k[a] * y[a] + m.phase[a]);
      v[m.component] += prod;
    } else {
      double arg = m.phase[0];
      for (int a = 0; a < y.size(); ++a) arg += m.k[a] * y[a];
      v[m.component] += m.amplitude * std::sin(arg);
    }
  }
  return v;
}

SmallMat AnalyticMap::jacobian(const Point& y) const {
  const int q = static_cast<int>(y.size());
  SmallMat j = linear_;
  for (const SineMode& m : modes_) {
    if (m.product) {
      for (int a = 0; a < q; ++a) {
        double d = m.amplitude * m.k[a] * std::cos(m.k[a] * y[a] + m.phase[a]);
        for (int c = 0; c < q; ++c)
          if (c != a) d *= std::sin(m.k[c] * y[c] + m.phase[c]);
        j(m.component, a) += d;
      }
    } else {
      double arg = m.phase[0];
      for (int a = 0; a < q; ++a) arg += m.k[a] * y[a];
      for (int a = 0; a < q; ++a) j(m.component, a) += m.amplitude * std::cos(arg) * m.k[a];
    }
  }
  return j;
}

Hessian AnalyticMap::hessian(const Point& y) const {
  const int q = static_cast<int>(y.size());
  Hessian h;
  for (int gamma = 0; gamma < target_dim(); ++gamma) h[gamma] = SmallMat::Zero(q, q);
  for (const SineMode& m : modes_) {
    SmallMat& hm = h[m.component];
    if (m.product) {
      for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
          double d = m.amplitude;
          for (int c = 0; c < q; ++c) {
            const double arg = m.k[c] * y[c] + m.phase[c];
            if (a == b && c == a)
              d *= -m.k[c] * m.k[c] * std::sin(arg);
            else if (c == a || c == b)
              d *= m.k[c] * std::cos(arg);
            else
              d *= std::sin(arg);
          }
          hm(a, b) += d;
        }
      }
    } else {
      double arg = m.phase[0];
      for (int a = 0; a < q; ++a) arg += m.k[a] * y[a];
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) hm(a, b) -= m.amplitude * std::sin(arg) * m.k[a] * m.k[b];
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

InterpolatedMap::InterpolatedMap(const FoliatedMapField& map) : map_(map) {
  map_.validate();
  jacobian_ = d_T(map_);
  const int q = map_.source_dim();
  const int qt = map_.target_dim();
  const std::size_t stride = static_cast<std::size_t>(qt * q * q);
  hessian_.assign(map_.size() * stride, 0.0);
  for_each_node(map_.size(), [&](std::size_t node) {
    const NodeJet jet = node_jet(map_, node, true);
    for (int gamma = 0; gamma < qt; ++gamma)
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
          hessian_[node * stride + (gamma * q + a) * q + b] = jet.hessian[gamma](a, b);
  });
}

const std::shared_ptr<const TransverseGeometry>& InterpolatedMap::source_geometry() const {
  return map_.source().geometry_ptr();
}

const std::shared_ptr<const TransverseGeometry>& InterpolatedMap::target_geometry() const {
  return map_.target_ptr();
}

template <class Fn>
void InterpolatedMap::interpolate(const Point& y, Fn&& accumulate) const {
  const GridChart& grid = map_.source();
  const int q = grid.dim();
  std::array<int, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (int a = 0; a < q; ++a) {
    const AxisRange& axis = grid.geometry().chart()[a];
    const double h = grid.spacing(a);
    const double t = (y[a] - axis.lo) / h;
    if (axis.boundary == BoundaryTag::Periodic) {
      base[a] = static_cast<int>(std::floor(t));
    } else {
      if (y[a] < axis.lo - h || y[a] > axis.hi + h)
        throw DomainError("interpolation point outside the grid chart");
      base[a] = std::clamp(static_cast<int>(std::floor(t)), 0, grid.resolution(a) - 2);
    }
    frac[a] = t - base[a];
  }
  for (int corner = 0; corner < (1 << q); ++corner) {
    std::array<int, kMaxDim> idx{};
    Wraps wraps{};
    double w = 1.0;
    for (int a = 0; a < q; ++a) {
      const int bit = (corner >> a) & 1;
      int j = base[a] + bit;
      const int n = grid.resolution(a);
      if (grid.boundary(a) == BoundaryTag::Periodic) {
        const int wrap = (j >= 0) ? j / n : -((-j + n - 1) / n);
        j -= wrap * n;
        wraps[a] = wrap;
      }
      idx[a] = j;
      w *= bit ? frac[a] : 1.0 - frac[a];
    }
    accumulate(grid.node(idx), wraps, w);
  }
}

Point InterpolatedMap::value(const Point& y) const {
  Point v = Point::Zero(map_.target_dim());
  interpolate(y, [&](std::size_t node, const Wraps& wraps, double w) { v += w * map_.lifted(node, wraps); });
  return v;
}

SmallMat InterpolatedMap::jacobian(const Point& y) const {
  SmallMat j = SmallMat::Zero(map_.target_dim(), map_.source_dim());
  interpolate(y, [&](std::size_t node, const Wraps&, double w) { j += w * jacobian_.matrix(node); });
  return j;
}

Hessian InterpolatedMap::hessian(const Point& y) const {
  const int q = map_.source_dim();
  const int qt = map_.target_dim();
  const std::size_t stride = static_cast<std::size_t>(qt * q * q);
  Hessian h;
  for (int gamma = 0; gamma < qt; ++gamma) h[gamma] = SmallMat::Zero(q, q);
  interpolate(y, [&](std::size_t node, const Wraps&, double w) {
    for (int gamma = 0; gamma < qt; ++gamma)
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) h[gamma](a, b) += w * hessian_[node * stride + (gamma * q + a) * q + b];
  });
  return h;
}

// ---------------------------------------------------------------------------

FoliatedMapField sample_map(std::shared_ptr<const GridChart> grid, const ChartMap& map) {
  if (!same_geometry(grid->geometry(), *map.source_geometry()))
    throw CompositionError("map '" + map.name() + "' is defined on a different source chart");
  FoliatedMapField out(grid, map.target_geometry(), map.winding());
  const int q = grid->dim();
  const int qt = map.target_dim();
  for (std::size_t i = 0; i < grid->size(); ++i) out.set_value(i, map.value(grid->coords(i)));

  for (int a = 0; a < q; ++a) {
    if (grid->boundary(a) != BoundaryTag::Periodic) continue;
    const double period = grid->geometry().chart()[a].length();
    for (std::size_t i = 0; i < grid->size(); ++i) {
      if (grid->index(i)[a] != 0) continue;
      Point shifted = grid->coords(i);
      shifted[a] += period;
      const Point jump = map.value(shifted) - out.value(i);
      for (int alpha = 0; alpha < qt; ++alpha) {
        const double expected = out.seam_shift(alpha, a);
        if (std::abs(jump[alpha] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
          std::ostringstream os;
          os << "map '" << map.name() << "' jumps by " << jump[alpha] << " across seam " << a
             << " but its winding predicts " << expected;
          throw InvalidMapError(os.str());
        }
      }
    }
  }
  out.validate();
  return out;
}

JacobianField d_T(const FoliatedMapField& map) {
  map.validate();
  JacobianField out(map.source_ptr(), map.target_dim(), map.source_dim());
  for_each_node(map.size(), [&](std::size_t node) { out.set_matrix(node, node_jet(map, node, false).jacobian); });
  return out;
}

SecondFormField second_fund_form(const FoliatedMapField& map) {
  map.validate();
  const GridChart& grid = map.source();
  const int q = grid.dim();
  const int qt = map.target_dim();
  SecondFormField out(map.source_ptr(), qt, q);
  for_each_node(map.size(), [&](std::size_t node) {
    const NodeJet jet = node_jet(map, node, true);
    const Christoffel target_gamma = map.target().christoffel(map.value(node));
    Hessian s;
    second_form_from_jet(jet, grid.gamma(node), target_gamma, q, qt, s);
    for (int gamma = 0; gamma < qt; ++gamma)
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) out(node, gamma, a, b) = s[gamma](a, b);
  });
  return out;
}

TensionFieldGrid trace_second_form(const SecondFormField& s) {
  const GridChart& grid = s.grid();
  const int q = s.source_dim();
  const int qt = s.target_dim();
  TensionFieldGrid out(s.grid_ptr(), qt);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const SmallMat& g_inv = grid.g_inv(node);
    for (int gamma = 0; gamma < qt; ++gamma) {
      double t = 0.0;
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) t += g_inv(a, b) * s(node, gamma, a, b);
      out(node, gamma) = t;
    }
  }
  return out;
}

TensionFieldGrid tension(const FoliatedMapField& map) { return trace_second_form(second_fund_form(map)); }

ScalarField energy_density(const FoliatedMapField& map) {
  map.validate();
  const GridChart& grid = map.source();
  ScalarField out(map.source_ptr());
  for_each_node(map.size(), [&](std::size_t node) {
    const SmallMat d = node_jet(map, node, false).jacobian;
    const SmallMat gt = map.target().metric(map.value(node));
    out[node] = 0.5 * (grid.g_inv(node) * d.transpose() * gt * d).trace();
  });
  return out;
}

TargetVectorField delta_nabla_dT(const FoliatedMapField& map, const FoliatedStructure& leaves) {
  const TensionFieldGrid tau = tension(map);
  const JacobianField d = d_T(map);
  const VectorField& kappa_sharp = leaves.kappa_sharp();
  TargetVectorField out(map.source_ptr(), map.target_dim());
  for (std::size_t node = 0; node < map.size(); ++node)
    out.set(node, -tau.point(node) + d.matrix(node) * kappa_sharp.point(node));
  return out;
}

FoliatedMapField compose(const FoliatedMapField& phi, const ChartMap& psi) {
  if (psi.source_dim() != phi.target_dim() || !same_geometry(*psi.source_geometry(), phi.target()))
    throw CompositionError("cannot compose: target chart of phi differs from source chart of '" +
                           psi.name() + "'");
  const WindingMatrix winding = psi.winding() * phi.winding();
  FoliatedMapField out(phi.source_ptr(), psi.target_geometry(), winding);
  for_each_node(phi.size(), [&](std::size_t node) { out.set_value(node, psi.value(phi.value(node))); });
  out.validate();
  return out;
}

double target_norm(const FoliatedMapField& map, std::size_t node, const Point& v) {
  return std::sqrt(std::max(0.0, v.dot(map.target().metric(map.value(node)) * v)));
}

double second_form_norm(const SecondFormField& s, const FoliatedMapField& map, std::size_t node) {
  const GridChart& grid = s.grid();
  const int q = s.source_dim();
  const int qt = s.target_dim();
  const SmallMat& g_inv = grid.g_inv(node);
  const SmallMat gt = map.target().metric(map.value(node));
  double sum = 0.0;
  for (int gamma = 0; gamma < qt; ++gamma)
    for (int delta = 0; delta < qt; ++delta) {
      if (gt(gamma, delta) == 0.0) continue;
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
          for (int c = 0; c < q; ++c)
            for (int d = 0; d < q; ++d)
              sum += g_inv(a, c) * g_inv(b, d) * gt(gamma, delta) * s(node, gamma, a, b) *
                     s(node, delta, c, d);
    }
  return std::sqrt(std::max(0.0, sum));
}

double max_tension_norm(const FoliatedMapField& map, const TensionFieldGrid& tau) {
  double m = 0.0;
  for (std::size_t node = 0; node < map.size(); ++node)
    if (map.source().interior(node, 1)) m = std::max(m, target_norm(map, node, tau.point(node)));
  return m;
}

std::array<SmallMat, kMaxDim> chart_map_second_form(const ChartMap& map, const Point& y) {
  const int q = map.source_dim();
  const int qt = map.target_dim();
  NodeJet jet;
  jet.jacobian = map.jacobian(y);
  jet.hessian = map.hessian(y);
  const Christoffel source_gamma = map.source_geometry()->christoffel(y);
  const Christoffel target_gamma = map.target_geometry()->christoffel(map.value(y));
  Hessian s;
  second_form_from_jet(jet, source_gamma, target_gamma, q, qt, s);
  return s;
}

}  // namespace folharm
