#include "fraclab/frame.hpp"

#include "fraclab/errors.hpp"

namespace fraclab {

VectorFieldFrame::VectorFieldFrame(Grid grid, std::vector<std::vector<std::vector<double>>> coeffs,
                                   std::string name)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)), name_(std::move(name)) {
  if (coeffs_.empty()) throw InputError("frame needs at least one vector field");
  for (const auto& field : coeffs_) {
    if (static_cast<int>(field.size()) != grid_.ndim())
      throw InputError("frame: one coefficient array per axis is required");
    for (const auto& arr : field)
      if (arr.size() != grid_.size()) throw InputError("frame: coefficient array does not match grid");
  }
}

std::vector<double> VectorFieldFrame::apply(int field, std::span<const double> u) const {
  if (u.size() != grid_.size()) throw InputError("frame apply: field does not match grid");
  std::vector<double> out(u.size(), 0.0);
  for (int j = 0; j < grid_.ndim(); ++j) {
    const auto& c = coeffs_[field][j];
    const double h = grid_.spacing(j);
    for (std::size_t n = 0; n < u.size(); ++n) {
      if (c[n] == 0.0) continue;
      auto fwd = grid_.neighbor(n, j, 1);
      auto bwd = grid_.neighbor(n, j, -1);
      double d;
      if (fwd && bwd) d = (u[*fwd] - u[*bwd]) / (2 * h);
      else if (fwd) d = (u[*fwd] - u[n]) / h;
      else d = (u[n] - u[*bwd]) / h;
      out[n] += c[n] * d;
    }
  }
  return out;
}

VectorFieldFrame VectorFieldFrame::extended(int z_nodes, double z_spacing) const {
  Grid g = grid_.with_axis(z_nodes, z_spacing);
  const std::size_t nz = static_cast<std::size_t>(z_nodes);
  std::vector<std::vector<std::vector<double>>> c(coeffs_.size() + 1);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    c[i].resize(g.ndim());
    for (int j = 0; j < grid_.ndim(); ++j) {
      auto& arr = c[i][j];
      arr.resize(g.size());
      for (std::size_t n = 0; n < grid_.size(); ++n)
        for (std::size_t k = 0; k < nz; ++k) arr[n * nz + k] = coeffs_[i][j][n];
    }
    c[i][grid_.ndim()].assign(g.size(), 0.0);
  }
  auto& dz = c.back();
  dz.assign(g.ndim(), std::vector<double>(g.size(), 0.0));
  dz[grid_.ndim()].assign(g.size(), 1.0);
  return VectorFieldFrame(std::move(g), std::move(c), name_ + "+z");
}

}  // namespace fraclab
