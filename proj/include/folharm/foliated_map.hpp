#pragma once

#include "folharm/foliated_structure.hpp"
#include "folharm/grid_calculus.hpp"
#include "folharm/manifold_catalog.hpp"

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace folharm {

// W(alpha, a): how many target periods coordinate alpha advances when the source
// walks once around periodic axis a.
using WindingMatrix = Eigen::MatrixXi;

// Second partials of each target component: hessian[gamma](a, b).
using Hessian = std::array<SmallMat, kMaxDim>;

struct TargetVectorTag {};
struct JacobianTag {};
struct SecondFormTag {};
struct LiftTag {};

// Sections of the pull-back bundle phi^{-1}Q' in target chart components.
using TargetVectorField = NodeField<TargetVectorTag>;
using TensionFieldGrid = TargetVectorField;

// Transverse part of a foliated map, stored as target chart coordinates of a lift:
// phi(b + P_a e_a) = phi(b) + W(:, a) * P'.
class FoliatedMapField {
 public:
  FoliatedMapField(std::shared_ptr<const GridChart> source,
                   std::shared_ptr<const TransverseGeometry> target, WindingMatrix winding);
  // Zero winding.
  FoliatedMapField(std::shared_ptr<const GridChart> source,
                   std::shared_ptr<const TransverseGeometry> target);

  const GridChart& source() const { return *source_; }
  const std::shared_ptr<const GridChart>& source_ptr() const { return source_; }
  const TransverseGeometry& target() const { return *target_; }
  const std::shared_ptr<const TransverseGeometry>& target_ptr() const { return target_; }
  int source_dim() const { return source_->dim(); }
  int target_dim() const { return target_->dimension(); }
  std::size_t size() const { return source_->size(); }
  const WindingMatrix& winding() const { return winding_; }

  Point value(std::size_t node) const { return values_.point(node); }
  void set_value(std::size_t node, const Point& p) { values_.set(node, p); }
  double value(std::size_t node, int alpha) const { return values_(node, alpha); }
  const std::vector<double>& raw() const { return values_.data(); }
  std::vector<double>& raw() { return values_.data(); }

  // Lift shift W(alpha, a) * P'_alpha picked up per crossing of source seam a.
  double seam_shift(int alpha, int axis) const { return shift_(alpha, axis); }
  double lifted(std::size_t node, int alpha, const Wraps& wraps) const {
    double v = values_(node, alpha);
    for (int a = 0; a < source_dim(); ++a)
      if (wraps[a] != 0) v += wraps[a] * shift_(alpha, a);
    return v;
  }
  Point lifted(std::size_t node, const Wraps& wraps) const {
    Point p(target_dim());
    for (int alpha = 0; alpha < target_dim(); ++alpha) p[alpha] = lifted(node, alpha, wraps);
    return p;
  }

  // Every value in the target domain and inside the target chart on fixed axes;
  // seam jumps consistent with the winding. Throws InvalidMapError / DomainError.
  void validate() const;

 private:
  std::shared_ptr<const GridChart> source_;
  std::shared_ptr<const TransverseGeometry> target_;
  WindingMatrix winding_;
  Eigen::MatrixXd shift_;
  NodeField<LiftTag> values_;
};

// d_T phi components D(alpha, a) = d_a phi^alpha per node.
class JacobianField : public NodeField<JacobianTag> {
 public:
  JacobianField() = default;
  JacobianField(std::shared_ptr<const GridChart> grid, int rows, int cols)
      : NodeField(std::move(grid), rows * cols), rows_(rows), cols_(cols) {}
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  SmallMat matrix(std::size_t node) const;
  void set_matrix(std::size_t node, const SmallMat& m);

 private:
  int rows_ = 0;
  int cols_ = 0;
};

// (nabla~_tr d_T phi)(E_a, E_b) components S^gamma_{ab} per node.
class SecondFormField : public NodeField<SecondFormTag> {
 public:
  SecondFormField() = default;
  SecondFormField(std::shared_ptr<const GridChart> grid, int target_dim, int source_dim)
      : NodeField(std::move(grid), target_dim * source_dim * source_dim),
        target_dim_(target_dim), source_dim_(source_dim) {}
  int target_dim() const { return target_dim_; }
  int source_dim() const { return source_dim_; }
  double& operator()(std::size_t node, int gamma, int a, int b) {
    return NodeField::operator()(node, (gamma * source_dim_ + a) * source_dim_ + b);
  }
  double operator()(std::size_t node, int gamma, int a, int b) const {
    return NodeField::operator()(node, (gamma * source_dim_ + a) * source_dim_ + b);
  }

 private:
  int target_dim_ = 0;
  int source_dim_ = 0;
};

// ---------------------------------------------------------------------------
// Maps given on whole charts (closed forms or interpolated grids).

class ChartMap {
 public:
  virtual ~ChartMap() = default;

  virtual std::string name() const = 0;
  virtual const std::shared_ptr<const TransverseGeometry>& source_geometry() const = 0;
  virtual const std::shared_ptr<const TransverseGeometry>& target_geometry() const = 0;
  virtual const WindingMatrix& winding() const = 0;

  // Lift values and derivatives at a source chart point (periodic coordinates unreduced).
  virtual Point value(const Point& y) const = 0;
  virtual SmallMat jacobian(const Point& y) const = 0;
  virtual Hessian hessian(const Point& y) const = 0;

  int source_dim() const { return source_geometry()->dimension(); }
  int target_dim() const { return target_geometry()->dimension(); }
};

// One sinusoidal term added to target component `component`:
//   sum form:     amplitude * sin(k . b + phase[0])
//   product form: amplitude * prod_a sin(k_a b_a + phase_a)
struct SineMode {
  int component = 0;
  double amplitude = 0.0;
  std::vector<double> k;
  std::vector<double> phase;
  bool product = false;
};

// offset + linear * b + sum of sine modes. Covers the identity, linear-with-winding,
// latitude-circle, constant and sine-perturbation families.
class AnalyticMap final : public ChartMap {
 public:
  AnalyticMap(std::string name, std::shared_ptr<const TransverseGeometry> source,
              std::shared_ptr<const TransverseGeometry> target, Point offset, Eigen::MatrixXd linear,
              std::vector<SineMode> modes = {});

  static std::shared_ptr<const AnalyticMap> identity(std::shared_ptr<const TransverseGeometry> geometry);
  static std::shared_ptr<const AnalyticMap> constant(std::shared_ptr<const TransverseGeometry> source,
                                                     std::shared_ptr<const TransverseGeometry> target,
                                                     Point value);
  // Linear part chosen so that coordinate alpha winds W(alpha, a) times around axis a.
  static std::shared_ptr<const AnalyticMap> linear_with_winding(
      std::shared_ptr<const TransverseGeometry> source, std::shared_ptr<const TransverseGeometry> target,
      const WindingMatrix& winding, Point offset);
  // b -> (theta0, phi0 + m * b_axis * 2pi / P_axis) into a round sphere.
  static std::shared_ptr<const AnalyticMap> latitude_circle(
      std::shared_ptr<const TransverseGeometry> source, std::shared_ptr<const TransverseGeometry> sphere,
      double theta0, double phi0, int turns, int axis = 0);

  std::string name() const override { return name_; }
  const std::shared_ptr<const TransverseGeometry>& source_geometry() const override { return source_; }
  const std::shared_ptr<const TransverseGeometry>& target_geometry() const override { return target_; }
  const WindingMatrix& winding() const override { return winding_; }

  Point value(const Point& y) const override;
  SmallMat jacobian(const Point& y) const override;
  Hessian hessian(const Point& y) const override;

  const Eigen::MatrixXd& linear() const { return linear_; }
  const std::vector<SineMode>& modes() const { return modes_; }

 private:
  std::string name_;
  std::shared_ptr<const TransverseGeometry> source_;
  std::shared_ptr<const TransverseGeometry> target_;
  Point offset_;
  Eigen::MatrixXd linear_;
  std::vector<SineMode> modes_;
  WindingMatrix winding_;
};

// A grid map viewed as a function on its source chart: values, first and second
// partials are multilinear interpolants of the node data (order 2).
class InterpolatedMap final : public ChartMap {
 public:
  explicit InterpolatedMap(const FoliatedMapField& map);

  std::string name() const override { return "interpolated"; }
  const std::shared_ptr<const TransverseGeometry>& source_geometry() const override;
  const std::shared_ptr<const TransverseGeometry>& target_geometry() const override;
  const WindingMatrix& winding() const override { return map_.winding(); }

  Point value(const Point& y) const override;
  SmallMat jacobian(const Point& y) const override;
  Hessian hessian(const Point& y) const override;

 private:
  template <class Fn>
  void interpolate(const Point& y, Fn&& accumulate) const;

  FoliatedMapField map_;
  JacobianField jacobian_;
  std::vector<double> hessian_;  // q' * q * q per node
};

// Samples a chart map on the grid. Throws CompositionError when the grid lives on a
// different geometry and InvalidMapError when the map's seams disagree with its winding.
FoliatedMapField sample_map(std::shared_ptr<const GridChart> grid, const ChartMap& map);

// ---------------------------------------------------------------------------
// Operations

JacobianField d_T(const FoliatedMapField& map);
SecondFormField second_fund_form(const FoliatedMapField& map);
// tau^gamma = g^{ab} S^gamma_{ab}.
TensionFieldGrid tension(const FoliatedMapField& map);
TensionFieldGrid trace_second_form(const SecondFormField& s);
// e = 1/2 g^{ab} g'_{alpha beta}(phi) D^alpha_a D^beta_b.
ScalarField energy_density(const FoliatedMapField& map);
// -tau + d_T phi(kappa_B#).
TargetVectorField delta_nabla_dT(const FoliatedMapField& map, const FoliatedStructure& leaves);
// psi o phi, node-wise on phi's grid; winding W_psi * W_phi.
FoliatedMapField compose(const FoliatedMapField& phi, const ChartMap& psi);

// Pointwise norms in the target metric at phi(node).
double target_norm(const FoliatedMapField& map, std::size_t node, const Point& v);
double second_form_norm(const SecondFormField& s, const FoliatedMapField& map, std::size_t node);

// Max over nodes off the fixed boundary (layer 1 excluded).
double max_tension_norm(const FoliatedMapField& map, const TensionFieldGrid& tau);

// Second fundamental form of a chart map at y, from its closed-form derivatives:
// d^2 psi - Gamma_src d psi + Gamma_tgt(psi) (d psi, d psi).
std::array<SmallMat, kMaxDim> chart_map_second_form(const ChartMap& map, const Point& y);

}  // namespace folharm
