#include "folharm/foliated_structure.hpp"

#include "folharm/errors.hpp"

#include <cmath>
#include <sstream>

namespace folharm {

VolumeProfile VolumeProfile::constant(double c, int dim) {
  if (!(c > 0.0)) throw ConfigError("profile.value", "leaf volume must be positive");
  VolumeProfile profile;
  profile.name = "constant";
  profile.value = [c](const Point&) { return c; };
  profile.log_gradient = [dim](const Point&) { return Point(Point::Zero(dim)); };
  return profile;
}

VolumeProfile VolumeProfile::cosine(double offset, double amplitude, int axis, double k, int dim) {
  if (axis < 0 || axis >= dim) throw ConfigError("profile.axis", "axis out of range");
  if (!(offset > std::abs(amplitude)))
    throw ConfigError("profile.offset", "offset must exceed |amplitude| so vol_L stays positive");
  VolumeProfile profile;
  profile.name = "cosine";
  profile.value = [=](const Point& b) { return offset + amplitude * std::cos(k * b[axis]); };
  profile.log_gradient = [=](const Point& b) {
    Point d = Point::Zero(dim);
    d[axis] = -amplitude * k * std::sin(k * b[axis]) / (offset + amplitude * std::cos(k * b[axis]));
    return d;
  };
  return profile;
}

VolumeProfile VolumeProfile::warped(int leaf_dimension, double amplitude, int axis, double k, int dim) {
  if (axis < 0 || axis >= dim) throw ConfigError("profile.axis", "axis out of range");
  const double p = leaf_dimension;
  VolumeProfile profile;
  profile.name = "warped";
  profile.value = [=](const Point& b) { return std::exp(p * amplitude * std::sin(k * b[axis])); };
  profile.log_gradient = [=](const Point& b) {
    Point d = Point::Zero(dim);
    d[axis] = p * amplitude * k * std::cos(k * b[axis]);
    return d;
  };
  return profile;
}

FoliatedStructure build_foliated_structure(std::shared_ptr<const GridChart> grid, const LeafSpec& spec) {
  if (spec.leaf_dimension < 0) throw ConfigError("leaf_dimension", "must be >= 0");
  if (!spec.profile.value) throw ConfigError("profile", "missing leaf volume profile");

  FoliatedStructure out;
  out.leaf_dimension_ = spec.leaf_dimension;
  out.profile_ = spec.profile;
  out.grid_ = grid;
  const int q = grid->dim();

  out.vol_ = ScalarField(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double v = spec.profile.value(grid->coords(i));
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "leaf volume " << v << " at node " << i << " is not positive";
      throw ConfigError("profile", os.str());
    }
    out.vol_[i] = v;
  }

  const bool closed_form = spec.kappa == KappaSource::ClosedForm && spec.profile.log_gradient;
  out.kappa_source_ = closed_form ? KappaSource::ClosedForm : KappaSource::Discrete;
  if (closed_form) {
    out.kappa_ = CovectorField(grid, q);
    for (std::size_t i = 0; i < grid->size(); ++i)
      out.kappa_.set(i, -spec.profile.log_gradient(grid->coords(i)));
  } else {
    ScalarField log_vol(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) log_vol[i] = std::log(out.vol_[i]);
    out.kappa_ = grad_B(log_vol);
    for (double& k : out.kappa_.data()) k = -k;
  }
  out.kappa_sharp_ = raise(out.kappa_);
  return out;
}

FoliatedStructure point_foliation(std::shared_ptr<const GridChart> grid) {
  LeafSpec spec;
  spec.leaf_dimension = 0;
  spec.profile = VolumeProfile::constant(1.0, grid->dim());
  return build_foliated_structure(std::move(grid), spec);
}

}  // namespace folharm
