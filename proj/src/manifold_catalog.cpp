#include "folharm/manifold_catalog.hpp"

#include "folharm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace folharm {

namespace {

constexpr double kPi = std::numbers::pi;

std::string point_string(const Point& p) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

}  // namespace

double LocalGeometry::riemann_at(int a, int b, int c, int d) const {
  const int q = dim();
  return riemann[static_cast<std::size_t>(((a * q + b) * q + c) * q + d)];
}

double LocalGeometry::sectional(const Tangent& x, const Tangent& y) const {
  const int q = dim();
  double num = 0.0;
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      for (int c = 0; c < q; ++c)
        for (int d = 0; d < q; ++d) num += riemann_at(a, b, c, d) * x[a] * y[b] * y[c] * x[d];
  const double xx = x.dot(g * x);
  const double yy = y.dot(g * y);
  const double xy = x.dot(g * y);
  const double area2 = xx * yy - xy * xy;
  if (area2 <= 0.0) throw DomainError("sectional curvature of a degenerate 2-plane");
  return num / area2;
}

TransverseGeometry TransverseGeometry::build(const GeometrySpec& spec) {
  TransverseGeometry geom;
  geom.spec_ = spec;
  switch (spec.kind) {
    case GeometryKind::FlatTorus: {
      if (spec.dimension < 1 || spec.dimension > kMaxDim)
        throw ConfigError("dimension", "flat torus dimension must be in [1, " +
                                           std::to_string(kMaxDim) + "]");
      if (static_cast<int>(spec.periods.size()) != spec.dimension)
        throw ConfigError("periods", "expected one period per axis");
      if (!spec.boundaries.empty() && static_cast<int>(spec.boundaries.size()) != spec.dimension)
        throw ConfigError("boundaries", "expected one boundary tag per axis");
      geom.dim_ = spec.dimension;
      double min_period = spec.periods.front();
      for (int a = 0; a < spec.dimension; ++a) {
        const double period = spec.periods[a];
        if (!(period > 0.0) || !std::isfinite(period))
          throw ConfigError("periods", "periods must be positive");
        const BoundaryTag tag = spec.boundaries.empty() ? BoundaryTag::Periodic : spec.boundaries[a];
        geom.chart_.push_back({0.0, period, tag});
        min_period = std::min(min_period, period);
      }
      geom.cap_ = 0.25 * min_period;
      break;
    }
    case GeometryKind::RoundSphere: {
      if (!(spec.radius > 0.0)) throw ConfigError("radius", "radius must be positive");
      if (!(spec.cap_angle > 0.0 && spec.cap_angle < kPi / 2))
        throw ConfigError("cap_angle", "cap angle must lie in (0, pi/2)");
      geom.dim_ = 2;
      geom.chart_.push_back({spec.cap_angle, kPi - spec.cap_angle, BoundaryTag::Fixed});
      geom.chart_.push_back({0.0, 2.0 * kPi, BoundaryTag::Periodic});
      geom.cap_ = spec.radius * kPi / 2;
      break;
    }
    case GeometryKind::HyperbolicPatch: {
      const auto [x0, x1] = spec.x_range;
      const auto [y0, y1] = spec.y_range;
      if (!(x1 > x0)) throw ConfigError("x_range", "empty x interval");
      if (!(y0 > 0.0)) throw ConfigError("y_range", "rectangle must lie in the upper half-plane");
      if (!(y1 > y0)) throw ConfigError("y_range", "empty y interval");
      geom.dim_ = 2;
      geom.chart_.push_back({x0, x1, BoundaryTag::Fixed});
      geom.chart_.push_back({y0, y1, BoundaryTag::Fixed});
      geom.cap_ = 1.0;
      break;
    }
  }
  if (spec.injectivity_cap) {
    if (!(*spec.injectivity_cap > 0.0))
      throw ConfigError("injectivity_cap", "cap must be positive");
    geom.cap_ = *spec.injectivity_cap;
  }
  return geom;
}

std::string TransverseGeometry::describe() const {
  std::ostringstream os;
  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      os << "flat_torus(q=" << dim_ << ")";
      break;
    case GeometryKind::RoundSphere:
      os << "round_sphere(r=" << spec_.radius << ", cap=" << spec_.cap_angle << ")";
      break;
    case GeometryKind::HyperbolicPatch:
      os << "hyperbolic_patch";
      break;
  }
  return os.str();
}

double TransverseGeometry::constant_curvature() const {
  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      return 0.0;
    case GeometryKind::RoundSphere:
      return 1.0 / (spec_.radius * spec_.radius);
    case GeometryKind::HyperbolicPatch:
      return -1.0;
  }
  return 0.0;
}

bool TransverseGeometry::in_domain(const Point& p) const {
  if (p.size() != dim_) return false;
  for (int i = 0; i < dim_; ++i)
    if (!std::isfinite(p[i])) return false;
  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      return true;
    case GeometryKind::RoundSphere:
      return p[0] > 0.0 && p[0] < kPi;
    case GeometryKind::HyperbolicPatch:
      return p[1] > 0.0;
  }
  return false;
}

bool TransverseGeometry::in_chart(const Point& p, double slack) const {
  if (!in_domain(p)) return false;
  for (int a = 0; a < dim_; ++a) {
    const AxisRange& axis = chart_[a];
    if (axis.boundary == BoundaryTag::Periodic) continue;
    if (p[a] < axis.lo - slack || p[a] > axis.hi + slack) return false;
  }
  return true;
}

void TransverseGeometry::require_domain(const Point& p) const {
  if (!in_domain(p))
    throw DomainError("point " + point_string(p) + " outside the domain of " + describe());
}

LocalGeometry TransverseGeometry::at(const Point& p) const {
  require_domain(p);
  LocalGeometry local;
  local.point = p;
  local.g = metric(p);
  local.g_inv = metric_inverse(p);
  local.gamma = christoffel(p);
  const int q = dim_;
  const double k = constant_curvature();
  local.riemann.assign(static_cast<std::size_t>(q * q * q * q), 0.0);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      for (int c = 0; c < q; ++c)
        for (int d = 0; d < q; ++d)
          local.riemann[static_cast<std::size_t>(((a * q + b) * q + c) * q + d)] =
              k * (local.g(a, d) * local.g(b, c) - local.g(a, c) * local.g(b, d));
  local.ricci = k * static_cast<double>(q - 1) * local.g;
  return local;
}

SmallMat TransverseGeometry::metric(const Point& p) const {
  require_domain(p);
  SmallMat g = SmallMat::Zero(dim_, dim_);
  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      g.setIdentity();
      break;
    case GeometryKind::RoundSphere: {
      const double r2 = spec_.radius * spec_.radius;
      const double s = std::sin(p[0]);
      g(0, 0) = r2;
      g(1, 1) = r2 * s * s;
      break;
    }
    case GeometryKind::HyperbolicPatch: {
      const double w = 1.0 / (p[1] * p[1]);
      g(0, 0) = w;
      g(1, 1) = w;
      break;
    }
  }
  return g;
}

SmallMat TransverseGeometry::metric_inverse(const Point& p) const {
  require_domain(p);
  SmallMat g_inv = SmallMat::Zero(dim_, dim_);
  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      g_inv.setIdentity();
      break;
    case GeometryKind::RoundSphere: {
      const double r2 = spec_.radius * spec_.radius;
      const double s = std::sin(p[0]);
      g_inv(0, 0) = 1.0 / r2;
      g_inv(1, 1) = 1.0 / (r2 * s * s);
      break;
    }
    case GeometryKind::HyperbolicPatch: {
      const double y2 = p[1] * p[1];
      g_inv(0, 0) = y2;
      g_inv(1, 1) = y2;
      break;
    }
  }
  return g_inv;
}

Christoffel TransverseGeometry::christoffel(const Point& p) const {
  require_domain(p);
  Christoffel gamma(dim_);
  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      break;
    case GeometryKind::RoundSphere: {
      const double s = std::sin(p[0]);
      const double c = std::cos(p[0]);
      gamma(0, 1, 1) = -s * c;
      gamma(1, 0, 1) = c / s;
      gamma(1, 1, 0) = c / s;
      break;
    }
    case GeometryKind::HyperbolicPatch: {
      const double inv_y = 1.0 / p[1];
      gamma(0, 0, 1) = -inv_y;
      gamma(0, 1, 0) = -inv_y;
      gamma(1, 0, 0) = inv_y;
      gamma(1, 1, 1) = -inv_y;
      break;
    }
  }
  return gamma;
}

double TransverseGeometry::volume_density(const Point& p) const {
  require_domain(p);
  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      return 1.0;
    case GeometryKind::RoundSphere:
      return spec_.radius * spec_.radius * std::sin(p[0]);
    case GeometryKind::HyperbolicPatch:
      return 1.0 / (p[1] * p[1]);
  }
  return 1.0;
}

double TransverseGeometry::norm(const Point& p, const Tangent& v) const {
  return std::sqrt(std::max(0.0, v.dot(metric(p) * v)));
}

Point TransverseGeometry::exp(const Point& p, const Tangent& v) const {
  require_domain(p);
  if (v.size() != dim_) throw DomainError("tangent vector dimension mismatch");
  const double length = norm(p, v);
  if (length > cap_) {
    std::ostringstream os;
    os << "exp_map step of length " << length << " exceeds the injectivity cap " << cap_;
    throw StepTooLargeError(os.str());
  }
  if (length == 0.0) return p;

  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      return p + v;
    case GeometryKind::RoundSphere: {
      // Rotate longitude to zero, follow the great circle in R^3, rotate back.
      const double theta = p[0];
      const double st = std::sin(theta);
      const double ct = std::cos(theta);
      const double angle = length / spec_.radius;
      const Eigen::Vector3d base(st, 0.0, ct);
      const Eigen::Vector3d e_theta(ct, 0.0, -st);
      const Eigen::Vector3d e_phi(0.0, 1.0, 0.0);
      const Eigen::Vector3d w = v[0] * e_theta + v[1] * st * e_phi;  // |w| == angle
      const Eigen::Vector3d end = std::cos(angle) * base + (std::sin(angle) / angle) * w;
      Point out(2);
      out[0] = std::atan2(std::hypot(end.x(), end.y()), end.z());
      out[1] = p[1] + std::atan2(end.y(), end.x());
      return out;
    }
    case GeometryKind::HyperbolicPatch: {
      // Unit-speed geodesic from i along the imaginary axis is i e^s; the elliptic
      // isometry fixing i rotates it to the requested direction.
      using cd = std::complex<double>;
      const double heading = std::atan2(v[1], v[0]);
      const double beta = heading - kPi / 2;
      const double c = std::cos(beta / 2);
      const double s = std::sin(beta / 2);
      const cd w = cd(0.0, std::exp(length));
      const cd rotated = (c * w + s) / (-s * w + c);
      Point out(2);
      out[0] = p[0] + p[1] * rotated.real();
      out[1] = p[1] * rotated.imag();
      return out;
    }
  }
  return p;
}

std::optional<double> TransverseGeometry::coordinate_period(int axis) const {
  switch (spec_.kind) {
    case GeometryKind::FlatTorus:
      if (chart_[axis].boundary == BoundaryTag::Periodic) return chart_[axis].length();
      return std::nullopt;
    case GeometryKind::RoundSphere:
      if (axis == 1) return 2.0 * kPi;
      return std::nullopt;
    case GeometryKind::HyperbolicPatch:
      return std::nullopt;
  }
  return std::nullopt;
}

bool same_geometry(const TransverseGeometry& a, const TransverseGeometry& b) {
  if (a.kind() != b.kind() || a.dimension() != b.dimension()) return false;
  for (int i = 0; i < a.dimension(); ++i) {
    const AxisRange& x = a.chart()[i];
    const AxisRange& y = b.chart()[i];
    if (x.lo != y.lo || x.hi != y.hi || x.boundary != y.boundary) return false;
  }
  return a.spec().radius == b.spec().radius;
}

Point integrate_geodesic(const TransverseGeometry& geom, const Point& p, const Tangent& v,
                         int steps) {
  const int q = geom.dimension();
  auto rhs = [&](const Point& x, const Tangent& u, Point& dx, Tangent& du) {
    const Christoffel gamma = geom.christoffel(x);
    dx = u;
    du = Tangent::Zero(q);
    for (int c = 0; c < q; ++c)
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) du[c] -= gamma(c, a, b) * u[a] * u[b];
  };
  Point x = p;
  Tangent u = v;
  const double h = 1.0 / steps;
  Point k1x, k2x, k3x, k4x;
  Tangent k1u, k2u, k3u, k4u;
  for (int i = 0; i < steps; ++i) {
    rhs(x, u, k1x, k1u);
    rhs(x + 0.5 * h * k1x, u + 0.5 * h * k1u, k2x, k2u);
    rhs(x + 0.5 * h * k2x, u + 0.5 * h * k2u, k3x, k3u);
    rhs(x + h * k3x, u + h * k3u, k4x, k4u);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    u += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  }
  return x;
}

}  // namespace folharm
