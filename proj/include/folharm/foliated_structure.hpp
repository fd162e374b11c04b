#pragma once

#include "folharm/grid_calculus.hpp"

#include <functional>
#include <memory>
#include <string>

namespace folharm {

// Leaf-volume profile vol_L over the base chart. log_gradient, when present, is the
// closed-form d(log vol_L).
struct VolumeProfile {
  std::string name = "constant";
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> log_gradient;

  static VolumeProfile constant(double c, int dim);
  // offset + amplitude * cos(k * b_axis)
  static VolumeProfile cosine(double offset, double amplitude, int axis, double k, int dim);
  // exp(p * amplitude * sin(k * b_axis)): the leaf volume of a warped product with
  // p-dimensional fibres scaled by exp(amplitude * sin(k b)).
  static VolumeProfile warped(int leaf_dimension, double amplitude, int axis, double k, int dim);
};

enum class KappaSource { ClosedForm, Discrete };

struct LeafSpec {
  int leaf_dimension = 0;
  VolumeProfile profile;
  KappaSource kappa = KappaSource::ClosedForm;
};

// Leaf dimension, sampled leaf volume and the basic mean curvature form
// kappa_B = -d log vol_L, all living on the base grid.
class FoliatedStructure {
 public:
  int leaf_dimension() const { return leaf_dimension_; }
  const VolumeProfile& profile() const { return profile_; }
  KappaSource kappa_source() const { return kappa_source_; }

  const GridChart& grid() const { return *grid_; }
  const std::shared_ptr<const GridChart>& grid_ptr() const { return grid_; }

  const ScalarField& leaf_volume() const { return vol_; }
  const CovectorField& kappa() const { return kappa_; }
  const VectorField& kappa_sharp() const { return kappa_sharp_; }

 private:
  friend FoliatedStructure build_foliated_structure(std::shared_ptr<const GridChart>, const LeafSpec&);

  int leaf_dimension_ = 0;
  VolumeProfile profile_;
  KappaSource kappa_source_ = KappaSource::ClosedForm;
  std::shared_ptr<const GridChart> grid_;
  ScalarField vol_;
  CovectorField kappa_;
  VectorField kappa_sharp_;
};

// kappa_B from the closed-form log gradient when the profile has one and the spec
// asks for it, otherwise by central differences of log vol_L on the grid.
FoliatedStructure build_foliated_structure(std::shared_ptr<const GridChart> grid, const LeafSpec& spec);

// p = 0, vol_L = 1: the classical (non-foliated) setting.
FoliatedStructure point_foliation(std::shared_ptr<const GridChart> grid);

}  // namespace folharm
