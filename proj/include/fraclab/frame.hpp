#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fraclab/grid.hpp"

namespace fraclab {

// X_i = sum_j coeff(i, j) d/dx_j, one scalar array per (field, axis) on the grid nodes.
class VectorFieldFrame {
 public:
  VectorFieldFrame(Grid grid, std::vector<std::vector<std::vector<double>>> coeffs, std::string name);

  const Grid& grid() const { return grid_; }
  const std::string& name() const { return name_; }
  int fields() const { return static_cast<int>(coeffs_.size()); }
  double coeff(int field, int axis, std::size_t node) const { return coeffs_[field][axis][node]; }
  std::span<const double> coeffs(int field, int axis) const { return coeffs_[field][axis]; }

  // Applies X_i with centred differences (one-sided at non-periodic edges).
  std::vector<double> apply(int field, std::span<const double> u) const;

  // Same frame on grid x (z-axis), plus the field d/dz. Coefficients do not depend on z.
  VectorFieldFrame extended(int z_nodes, double z_spacing) const;

 private:
  Grid grid_;
  std::vector<std::vector<std::vector<double>>> coeffs_;
  std::string name_;
};

}  // namespace fraclab
