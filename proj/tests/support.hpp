#pragma once

#include "folharm/foliated_map.hpp"
#include "folharm/foliated_structure.hpp"
#include "folharm/grid_calculus.hpp"
#include "folharm/manifold_catalog.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

using namespace folharm;

inline constexpr double kPi = std::numbers::pi;
using GeomPtr = std::shared_ptr<const TransverseGeometry>;

inline GeomPtr flat(std::vector<double> periods, std::vector<BoundaryTag> tags = {}) {
  GeometrySpec spec;
  spec.kind = GeometryKind::FlatTorus;
  spec.dimension = static_cast<int>(periods.size());
  spec.periods = std::move(periods);
  spec.boundaries = std::move(tags);
  return std::make_shared<const TransverseGeometry>(TransverseGeometry::build(spec));
}

inline GeomPtr circle() { return flat({2 * kPi}); }
inline GeomPtr torus2() { return flat({2 * kPi, 2 * kPi}); }

inline GeomPtr sphere(double radius = 1.0, double cap = 0.3) {
  GeometrySpec spec;
  spec.kind = GeometryKind::RoundSphere;
  spec.radius = radius;
  spec.cap_angle = cap;
  return std::make_shared<const TransverseGeometry>(TransverseGeometry::build(spec));
}

inline GeomPtr hyperbolic(std::array<double, 2> xr = {-1.0, 1.0}, std::array<double, 2> yr = {1.0, 2.0}) {
  GeometrySpec spec;
  spec.kind = GeometryKind::HyperbolicPatch;
  spec.x_range = xr;
  spec.y_range = yr;
  return std::make_shared<const TransverseGeometry>(TransverseGeometry::build(spec));
}

inline FoliatedStructure leaves(std::shared_ptr<const GridChart> grid, int p, VolumeProfile profile,
                                KappaSource kappa = KappaSource::ClosedForm) {
  LeafSpec spec;
  spec.leaf_dimension = p;
  spec.profile = std::move(profile);
  spec.kappa = kappa;
  return build_foliated_structure(std::move(grid), spec);
}

inline FoliatedStructure cosine_leaves(std::shared_ptr<const GridChart> grid) {
  return leaves(grid, 1, VolumeProfile::cosine(2.0, 1.0, 0, 1.0, grid->dim()));
}

// x + a sin(x) on the circle.
inline std::shared_ptr<const AnalyticMap> circle_sine(double amplitude, GeomPtr c = circle()) {
  Eigen::MatrixXd linear(1, 1);
  linear << 1.0;
  return std::make_shared<const AnalyticMap>("sine", c, c, Point(Point::Zero(1)), linear,
                                             std::vector<SineMode>{{0, amplitude, {1.0}, {0.0}, false}});
}

// Random interior chart point, keeping a margin from fixed ends.
inline Point random_point(const TransverseGeometry& geom, std::mt19937_64& rng, double margin = 0.05) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point p(geom.dimension());
  for (int a = 0; a < geom.dimension(); ++a) {
    const AxisRange& r = geom.chart()[a];
    const double m = r.boundary == BoundaryTag::Fixed ? margin * r.length() : 0.0;
    p[a] = r.lo + m + (r.length() - 2 * m) * u(rng);
  }
  return p;
}

template <class Field>
double max_abs_diff(const Field& f, const std::function<double(std::size_t, int)>& expected, int exclude_layers = 0) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (exclude_layers > 0 && !f.grid().interior(i, exclude_layers)) continue;
    for (int c = 0; c < f.components(); ++c) m = std::max(m, std::abs(f(i, c) - expected(i, c)));
  }
  return m;
}

}  // namespace testing
