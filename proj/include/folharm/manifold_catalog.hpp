#pragma once

#include "folharm/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace folharm {

enum class GeometryKind { FlatTorus, RoundSphere, HyperbolicPatch };
enum class BoundaryTag { Periodic, Fixed };

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
  BoundaryTag boundary = BoundaryTag::Periodic;

  double length() const { return hi - lo; }
};

struct GeometrySpec {
  GeometryKind kind = GeometryKind::FlatTorus;
  // FlatTorus: dimension, side lengths and per-axis boundary tags (default periodic).
  int dimension = 2;
  std::vector<double> periods;
  std::vector<BoundaryTag> boundaries;
  // RoundSphere: chart (theta, phi) with theta in [cap_angle, pi - cap_angle].
  double radius = 1.0;
  double cap_angle = 0.3;
  // HyperbolicPatch: upper half-plane rectangle.
  std::array<double, 2> x_range{-1.0, 1.0};
  std::array<double, 2> y_range{1.0, 2.0};
  // Bound on the metric length of exp_map steps; the model default when unset.
  std::optional<double> injectivity_cap;
};

// Pointwise geometry at a chart point. riemann holds R_{abcd} = g(R(d_a, d_b) d_c, d_d)
// with R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]; ricci holds Ric_{bc} = g^{ad} R_{abcd}.
struct LocalGeometry {
  Point point;
  SmallMat g;
  SmallMat g_inv;
  Christoffel gamma;
  std::vector<double> riemann;
  SmallMat ricci;

  int dim() const { return static_cast<int>(point.size()); }
  double riemann_at(int a, int b, int c, int d) const;
  // K(X, Y) = g(R(X,Y)Y, X) / (|X|^2 |Y|^2 - g(X,Y)^2); positive on spheres.
  double sectional(const Tangent& x, const Tangent& y) const;
};

// A model transverse geometry: flat torus (or flat box), round sphere band, or a
// hyperbolic half-plane rectangle. Immutable after construction.
class TransverseGeometry {
 public:
  static TransverseGeometry build(const GeometrySpec& spec);

  GeometryKind kind() const { return spec_.kind; }
  int dimension() const { return dim_; }
  const GeometrySpec& spec() const { return spec_; }
  const std::vector<AxisRange>& chart() const { return chart_; }
  std::string describe() const;

  // Constant sectional curvature of the model (0, 1/r^2 or -1).
  double constant_curvature() const;

  // True where the closed forms are finite: 0 < theta < pi on the sphere, y > 0 on
  // the half-plane, everywhere on flat models. Independent of the chart box.
  bool in_domain(const Point& p) const;
  bool in_chart(const Point& p, double slack = 1e-9) const;

  LocalGeometry at(const Point& p) const;

  SmallMat metric(const Point& p) const;
  SmallMat metric_inverse(const Point& p) const;
  Christoffel christoffel(const Point& p) const;
  double volume_density(const Point& p) const;
  double norm(const Point& p, const Tangent& v) const;

  double injectivity_cap() const { return cap_; }
  // Endpoint of the unit-time geodesic with initial velocity v. Periodic coordinates
  // are not reduced, so lifts stay continuous.
  Point exp(const Point& p, const Tangent& v) const;

  // Period of a chart coordinate that wraps (torus periodic axes, sphere longitude).
  std::optional<double> coordinate_period(int axis) const;

 private:
  void require_domain(const Point& p) const;

  GeometrySpec spec_;
  int dim_ = 0;
  std::vector<AxisRange> chart_;
  double cap_ = 0.0;
};

bool same_geometry(const TransverseGeometry& a, const TransverseGeometry& b);

// Classical RK4 integration of the geodesic equation over unit time.
Point integrate_geodesic(const TransverseGeometry& geom, const Point& p, const Tangent& v,
                         int steps = 2000);

}  // namespace folharm
