#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>

namespace folharm {

// Largest chart dimension supported. Small fixed-capacity Eigen types keep the
// per-node kernels free of heap traffic.
inline constexpr int kMaxDim = 4;

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Tangent = Point;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

// Christoffel symbols Gamma^c_{ab}, stored densely.
class Christoffel {
 public:
  Christoffel() = default;
  explicit Christoffel(int dim) : dim_(dim) { data_.fill(0.0); }

  int dim() const { return dim_; }
  double& operator()(int c, int a, int b) { return data_[index(c, a, b)]; }
  double operator()(int c, int a, int b) const { return data_[index(c, a, b)]; }

 private:
  std::size_t index(int c, int a, int b) const {
    return static_cast<std::size_t>((c * kMaxDim + a) * kMaxDim + b);
  }

  int dim_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

}  // namespace folharm
