#pragma once

#include "folharm/manifold_catalog.hpp"
#include "folharm/types.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

namespace folharm {

// Seam crossings per axis accumulated while walking a stencil.
using Wraps = std::array<int, kMaxDim>;

struct Neighbor {
  std::size_t node = 0;
  int wrap = 0;
};

// Structured grid over a chart box. Periodic axes hold n nodes with spacing L/n and
// no seam duplicate; fixed axes hold n nodes including both endpoints. Source
// geometry (metric, inverse, Christoffels, quadrature weight) is cached per node.
class GridChart {
 public:
  GridChart(std::shared_ptr<const TransverseGeometry> geometry, std::vector<int> resolution);

  static std::shared_ptr<const GridChart> make(std::shared_ptr<const TransverseGeometry> geometry,
                                               std::vector<int> resolution);
  // Same resolution n on every axis.
  static std::shared_ptr<const GridChart> uniform(std::shared_ptr<const TransverseGeometry> geometry,
                                                  int n);

  const TransverseGeometry& geometry() const { return *geometry_; }
  const std::shared_ptr<const TransverseGeometry>& geometry_ptr() const { return geometry_; }

  int dim() const { return dim_; }
  std::size_t size() const { return size_; }
  int resolution(int axis) const { return resolution_[axis]; }
  const std::vector<int>& resolution() const { return resolution_; }
  double spacing(int axis) const { return spacing_[axis]; }
  BoundaryTag boundary(int axis) const { return geometry_->chart()[axis].boundary; }
  bool fully_periodic() const;

  std::array<int, kMaxDim> index(std::size_t node) const;
  std::size_t node(const std::array<int, kMaxDim>& index) const;
  const Point& coords(std::size_t node) const { return coords_[node]; }

  // Base volume quadrature weight sqrt(det g) * prod h_a (trapezoid halves on fixed ends).
  double weight(std::size_t node) const { return weight_[node]; }
  const SmallMat& g(std::size_t node) const { return g_[node]; }
  const SmallMat& g_inv(std::size_t node) const { return g_inv_[node]; }
  const Christoffel& gamma(std::size_t node) const { return gamma_[node]; }

  // True when the node is at least `layers` nodes away from every fixed end.
  // layers = 1 excludes the boundary nodes themselves.
  bool interior(std::size_t node, int layers) const;
  bool on_fixed_boundary(std::size_t node) const { return !interior(node, 1); }

  // Node `offset` steps along `axis`. Periodic axes wrap and report the seam
  // crossing; fixed axes must stay in range.
  Neighbor step(std::size_t node, int axis, int offset) const;

 private:
  std::shared_ptr<const TransverseGeometry> geometry_;
  int dim_ = 0;
  std::size_t size_ = 0;
  std::vector<int> resolution_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::vector<Point> coords_;
  std::vector<double> weight_;
  std::vector<SmallMat> g_;
  std::vector<SmallMat> g_inv_;
  std::vector<Christoffel> gamma_;
};

// Per-node array of `components` doubles. The tag keeps scalar, contravariant and
// covariant fields apart at compile time.
template <class Tag>
class NodeField {
 public:
  NodeField() = default;
  NodeField(std::shared_ptr<const GridChart> grid, int components)
      : grid_(std::move(grid)), components_(components),
        data_(grid_->size() * static_cast<std::size_t>(components), 0.0) {}

  const GridChart& grid() const { return *grid_; }
  const std::shared_ptr<const GridChart>& grid_ptr() const { return grid_; }
  int components() const { return components_; }
  std::size_t size() const { return grid_->size(); }

  double& operator()(std::size_t node, int c) { return data_[node * components_ + c]; }
  double operator()(std::size_t node, int c) const { return data_[node * components_ + c]; }

  std::span<double> at(std::size_t node) {
    return {data_.data() + node * components_, static_cast<std::size_t>(components_)};
  }
  std::span<const double> at(std::size_t node) const {
    return {data_.data() + node * components_, static_cast<std::size_t>(components_)};
  }

  Point point(std::size_t node) const {
    Point p(components_);
    for (int c = 0; c < components_; ++c) p[c] = (*this)(node, c);
    return p;
  }
  void set(std::size_t node, const Point& p) {
    for (int c = 0; c < components_; ++c) (*this)(node, c) = p[c];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::shared_ptr<const GridChart> grid_;
  int components_ = 0;
  std::vector<double> data_;
};

struct ScalarTag {};
struct VectorTag {};
struct CovectorTag {};

class ScalarField : public NodeField<ScalarTag> {
 public:
  ScalarField() = default;
  explicit ScalarField(std::shared_ptr<const GridChart> grid) : NodeField(std::move(grid), 1) {}

  double& operator[](std::size_t node) { return data()[node]; }
  double operator[](std::size_t node) const { return data()[node]; }
};

using VectorField = NodeField<VectorTag>;
using CovectorField = NodeField<CovectorTag>;

// ---------------------------------------------------------------------------
// Stencils

struct Stencil1D {
  int count = 0;
  std::array<int, 4> offsets{};
  std::array<double, 4> weights{};
};

// Second-order first/second derivative stencils along an axis at index i:
// central in the interior and on periodic axes, one-sided at fixed ends.
Stencil1D first_derivative_stencil(const GridChart& grid, int axis, int i);
Stencil1D second_derivative_stencil(const GridChart& grid, int axis, int i);

// d/db_axis of a sampled quantity. sample(node, wraps) returns a double or a Point;
// wraps counts the seam crossings so callers can add lift shifts.
template <class Sample>
auto partial(const GridChart& grid, std::size_t node, int axis, Sample&& sample) {
  const Stencil1D st = first_derivative_stencil(grid, axis, grid.index(node)[axis]);
  Wraps wraps{};
  using Result = std::decay_t<decltype(sample(node, wraps))>;
  const Neighbor n0 = grid.step(node, axis, st.offsets[0]);
  wraps[axis] = n0.wrap;
  Result acc = st.weights[0] * sample(n0.node, wraps);
  for (int k = 1; k < st.count; ++k) {
    const Neighbor nk = grid.step(node, axis, st.offsets[k]);
    wraps[axis] = nk.wrap;
    acc += st.weights[k] * sample(nk.node, wraps);
  }
  return acc;
}

// d^2/db_a db_b; compact three-point stencil when a == b, tensor product of
// first-derivative stencils otherwise (symmetric in a, b).
template <class Sample>
auto second_partial(const GridChart& grid, std::size_t node, int a, int b, Sample&& sample) {
  if (a == b) {
    const Stencil1D st = second_derivative_stencil(grid, a, grid.index(node)[a]);
    Wraps wraps{};
    using Result = std::decay_t<decltype(sample(node, wraps))>;
    const Neighbor n0 = grid.step(node, a, st.offsets[0]);
    wraps[a] = n0.wrap;
    Result acc = st.weights[0] * sample(n0.node, wraps);
    for (int k = 1; k < st.count; ++k) {
      const Neighbor nk = grid.step(node, a, st.offsets[k]);
      wraps[a] = nk.wrap;
      acc += st.weights[k] * sample(nk.node, wraps);
    }
    return acc;
  }
  if (a > b) std::swap(a, b);
  const auto idx = grid.index(node);
  const Stencil1D sa = first_derivative_stencil(grid, a, idx[a]);
  const Stencil1D sb = first_derivative_stencil(grid, b, idx[b]);
  Wraps wraps{};
  bool first = true;
  std::decay_t<decltype(sample(node, wraps))> acc{};
  for (int i = 0; i < sa.count; ++i) {
    const Neighbor na = grid.step(node, a, sa.offsets[i]);
    for (int j = 0; j < sb.count; ++j) {
      const Neighbor nb = grid.step(na.node, b, sb.offsets[j]);
      wraps[a] = na.wrap;
      wraps[b] = nb.wrap;
      const double w = sa.weights[i] * sb.weights[j];
      if (first) {
        acc = w * sample(nb.node, wraps);
        first = false;
      } else {
        acc += w * sample(nb.node, wraps);
      }
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Operators

class FoliatedStructure;

// mu_B, mu_M = vol_L mu_B, and (1/vol_L) mu_M (equal to mu_B; the energy measure).
enum class Weight { BaseVolume, ManifoldVolume, InverseLeafVolume };

CovectorField grad_B(const ScalarField& f);
ScalarField div_nabla(const VectorField& x);
// Positive basic Laplacian -g^{ab}(d_a d_b f - Gamma^c_{ab} d_c f) + g(kappa_B#, grad f).
ScalarField delta_B_scalar(const ScalarField& f, const FoliatedStructure& leaves);

double integrate(const ScalarField& f);  // base volume
double integrate(const ScalarField& f, const FoliatedStructure& leaves, Weight weight);

// |int div X vol_L dmu_B - int g(X, kappa_B#) vol_L dmu_B|; closed (fully periodic) charts only.
double check_divergence_theorem(const VectorField& x, const FoliatedStructure& leaves);

VectorField raise(const CovectorField& w);
CovectorField lower(const VectorField& x);

// Max |f| over nodes at least `exclude_layers` away from fixed ends.
double max_abs(const ScalarField& f, int exclude_layers = 0);

template <class Fn>
ScalarField sample_scalar(std::shared_ptr<const GridChart> grid, Fn&& fn) {
  ScalarField f(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) f[i] = fn(grid->coords(i));
  return f;
}

template <class Field, class Fn>
Field sample_components(std::shared_ptr<const GridChart> grid, int components, Fn&& fn) {
  Field f(grid, components);
  for (std::size_t i = 0; i < grid->size(); ++i) f.set(i, fn(grid->coords(i)));
  return f;
}

}  // namespace folharm
