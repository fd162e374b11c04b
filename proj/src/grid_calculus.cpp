#include "folharm/grid_calculus.hpp"

#include "folharm/errors.hpp"
#include "folharm/foliated_structure.hpp"
#include "folharm/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace folharm {

GridChart::GridChart(std::shared_ptr<const TransverseGeometry> geometry, std::vector<int> resolution)
    : geometry_(std::move(geometry)), resolution_(std::move(resolution)) {
  dim_ = geometry_->dimension();
  if (static_cast<int>(resolution_.size()) != dim_)
    throw ConfigError("resolution", "expected one resolution per chart axis");
  for (int n : resolution_)
    if (n < 8) throw ConfigError("resolution", "every axis needs at least 8 nodes");

  strides_.assign(dim_, 1);
  for (int a = dim_ - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * resolution_[a + 1];
  size_ = strides_[0] * static_cast<std::size_t>(resolution_[0]);

  const auto& chart = geometry_->chart();
  for (int a = 0; a < dim_; ++a) {
    const int n = resolution_[a];
    const double length = chart[a].length();
    spacing_.push_back(chart[a].boundary == BoundaryTag::Periodic ? length / n : length / (n - 1));
  }

  coords_.resize(size_);
  weight_.resize(size_);
  g_.resize(size_);
  g_inv_.resize(size_);
  gamma_.resize(size_);
  double cell = 1.0;
  for (double h : spacing_) cell *= h;
  for (std::size_t node = 0; node < size_; ++node) {
    const auto idx = index(node);
    Point p(dim_);
    double w = cell;
    for (int a = 0; a < dim_; ++a) {
      p[a] = chart[a].lo + idx[a] * spacing_[a];
      if (chart[a].boundary == BoundaryTag::Fixed && (idx[a] == 0 || idx[a] == resolution_[a] - 1))
        w *= 0.5;
    }
    coords_[node] = p;
    g_[node] = geometry_->metric(p);
    g_inv_[node] = geometry_->metric_inverse(p);
    gamma_[node] = geometry_->christoffel(p);
    weight_[node] = w * geometry_->volume_density(p);
  }
}

std::shared_ptr<const GridChart> GridChart::make(std::shared_ptr<const TransverseGeometry> geometry,
                                                 std::vector<int> resolution) {
  return std::make_shared<const GridChart>(std::move(geometry), std::move(resolution));
}

std::shared_ptr<const GridChart> GridChart::uniform(std::shared_ptr<const TransverseGeometry> geometry,
                                                    int n) {
  const int q = geometry->dimension();
  return make(std::move(geometry), std::vector<int>(q, n));
}

bool GridChart::fully_periodic() const {
  for (int a = 0; a < dim_; ++a)
    if (boundary(a) != BoundaryTag::Periodic) return false;
  return true;
}

std::array<int, kMaxDim> GridChart::index(std::size_t node) const {
  std::array<int, kMaxDim> idx{};
  for (int a = 0; a < dim_; ++a) {
    idx[a] = static_cast<int>(node / strides_[a]);
    node %= strides_[a];
  }
  return idx;
}

std::size_t GridChart::node(const std::array<int, kMaxDim>& idx) const {
  std::size_t node = 0;
  for (int a = 0; a < dim_; ++a) node += static_cast<std::size_t>(idx[a]) * strides_[a];
  return node;
}

bool GridChart::interior(std::size_t node, int layers) const {
  const auto idx = index(node);
  for (int a = 0; a < dim_; ++a) {
    if (boundary(a) != BoundaryTag::Fixed) continue;
    if (idx[a] < layers || idx[a] > resolution_[a] - 1 - layers) return false;
  }
  return true;
}

Neighbor GridChart::step(std::size_t node, int axis, int offset) const {
  const int n = resolution_[axis];
  const int i = static_cast<int>((node / strides_[axis]) % static_cast<std::size_t>(n));
  int j = i + offset;
  int wrap = 0;
  if (boundary(axis) == BoundaryTag::Periodic) {
    while (j < 0) {
      j += n;
      --wrap;
    }
    while (j >= n) {
      j -= n;
      ++wrap;
    }
  } else if (j < 0 || j >= n) {
    throw std::out_of_range("stencil leaves a fixed axis");
  }
  const std::size_t base = node - static_cast<std::size_t>(i) * strides_[axis];
  return {base + static_cast<std::size_t>(j) * strides_[axis], wrap};
}

Stencil1D first_derivative_stencil(const GridChart& grid, int axis, int i) {
  const double h = grid.spacing(axis);
  const int n = grid.resolution(axis);
  Stencil1D st;
  if (grid.boundary(axis) == BoundaryTag::Fixed && i == 0) {
    st.count = 3;
    st.offsets = {0, 1, 2, 0};
    st.weights = {-1.5 / h, 2.0 / h, -0.5 / h, 0.0};
  } else if (grid.boundary(axis) == BoundaryTag::Fixed && i == n - 1) {
    st.count = 3;
    st.offsets = {0, -1, -2, 0};
    st.weights = {1.5 / h, -2.0 / h, 0.5 / h, 0.0};
  } else {
    st.count = 2;
    st.offsets = {-1, 1, 0, 0};
    st.weights = {-0.5 / h, 0.5 / h, 0.0, 0.0};
  }
  return st;
}

Stencil1D second_derivative_stencil(const GridChart& grid, int axis, int i) {
  const double h2 = grid.spacing(axis) * grid.spacing(axis);
  const int n = grid.resolution(axis);
  Stencil1D st;
  st.count = 4;
  if (grid.boundary(axis) == BoundaryTag::Fixed && i == 0) {
    st.offsets = {0, 1, 2, 3};
    st.weights = {2.0 / h2, -5.0 / h2, 4.0 / h2, -1.0 / h2};
  } else if (grid.boundary(axis) == BoundaryTag::Fixed && i == n - 1) {
    st.offsets = {0, -1, -2, -3};
    st.weights = {2.0 / h2, -5.0 / h2, 4.0 / h2, -1.0 / h2};
  } else {
    st.count = 3;
    st.offsets = {-1, 0, 1, 0};
    st.weights = {1.0 / h2, -2.0 / h2, 1.0 / h2, 0.0};
  }
  return st;
}

CovectorField grad_B(const ScalarField& f) {
  const GridChart& grid = f.grid();
  CovectorField out(f.grid_ptr(), grid.dim());
  auto sample = [&](std::size_t n, const Wraps&) { return f[n]; };
  for_each_node(grid.size(), [&](std::size_t node) {
    for (int a = 0; a < grid.dim(); ++a) out(node, a) = partial(grid, node, a, sample);
  });
  return out;
}

ScalarField div_nabla(const VectorField& x) {
  const GridChart& grid = x.grid();
  const int q = grid.dim();
  if (x.components() != q) throw PreconditionError("div_nabla: vector field dimension mismatch");
  ScalarField out(x.grid_ptr());
  for_each_node(grid.size(), [&](std::size_t node) {
    const Christoffel& gamma = grid.gamma(node);
    double div = 0.0;
    for (int a = 0; a < q; ++a) {
      div += partial(grid, node, a, [&](std::size_t n, const Wraps&) { return x(n, a); });
      for (int b = 0; b < q; ++b) div += gamma(a, a, b) * x(node, b);
    }
    out[node] = div;
  });
  return out;
}

ScalarField delta_B_scalar(const ScalarField& f, const FoliatedStructure& leaves) {
  const GridChart& grid = f.grid();
  const int q = grid.dim();
  const CovectorField& kappa = leaves.kappa();
  ScalarField out(f.grid_ptr());
  auto sample = [&](std::size_t n, const Wraps&) { return f[n]; };
  for_each_node(grid.size(), [&](std::size_t node) {
    const SmallMat& g_inv = grid.g_inv(node);
    const Christoffel& gamma = grid.gamma(node);
    Point df(q);
    for (int c = 0; c < q; ++c) df[c] = partial(grid, node, c, sample);
    double value = 0.0;
    for (int a = 0; a < q; ++a) {
      for (int b = 0; b < q; ++b) {
        if (g_inv(a, b) == 0.0) continue;
        double hess = second_partial(grid, node, a, b, sample);
        for (int c = 0; c < q; ++c) hess -= gamma(c, a, b) * df[c];
        value -= g_inv(a, b) * hess;
        value += g_inv(a, b) * kappa(node, a) * df[b];
      }
    }
    out[node] = value;
  });
  return out;
}

namespace {

// Neumaier summation: energies near a flow limit differ in the last few digits.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      carry += (sum - t) + x;
    else
      carry += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace

double integrate(const ScalarField& f) {
  const GridChart& grid = f.grid();
  CompensatedSum sum;
  for (std::size_t i = 0; i < grid.size(); ++i) sum.add(f[i] * grid.weight(i));
  return sum.value();
}

double integrate(const ScalarField& f, const FoliatedStructure& leaves, Weight weight) {
  const GridChart& grid = f.grid();
  if (leaves.grid_ptr() != f.grid_ptr() && leaves.grid().size() != grid.size())
    throw PreconditionError("integrate: structure and field live on different grids");
  CompensatedSum sum;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double w = grid.weight(i);
    if (weight == Weight::ManifoldVolume) w *= leaves.leaf_volume()[i];
    sum.add(f[i] * w);
  }
  return sum.value();
}

double check_divergence_theorem(const VectorField& x, const FoliatedStructure& leaves) {
  const GridChart& grid = x.grid();
  if (!grid.fully_periodic())
    throw UnsupportedDomainError("divergence theorem needs a closed (fully periodic) chart");
  const ScalarField div = div_nabla(x);
  const VectorField& kappa_sharp = leaves.kappa_sharp();
  ScalarField drift(x.grid_ptr());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const SmallMat& g = grid.g(i);
    double v = 0.0;
    for (int a = 0; a < grid.dim(); ++a)
      for (int b = 0; b < grid.dim(); ++b) v += g(a, b) * x(i, a) * kappa_sharp(i, b);
    drift[i] = v;
  }
  return std::abs(integrate(div, leaves, Weight::ManifoldVolume) -
                  integrate(drift, leaves, Weight::ManifoldVolume));
}

VectorField raise(const CovectorField& w) {
  const GridChart& grid = w.grid();
  VectorField out(w.grid_ptr(), grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, grid.g_inv(i) * w.point(i));
  return out;
}

CovectorField lower(const VectorField& x) {
  const GridChart& grid = x.grid();
  CovectorField out(x.grid_ptr(), grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, grid.g(i) * x.point(i));
  return out;
}

double max_abs(const ScalarField& f, int exclude_layers) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (exclude_layers == 0 || f.grid().interior(i, exclude_layers)) m = std::max(m, std::abs(f[i]));
  return m;
}

}  // namespace folharm
