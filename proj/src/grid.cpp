#include "fraclab/grid.hpp"

#include <algorithm>
#include <string>

#include "fraclab/errors.hpp"

namespace fraclab {

Grid::Grid(std::vector<int> dims, std::vector<double> spacing, std::vector<bool> periodic,
           std::vector<double> origin, std::size_t node_cap)
    : dims_(std::move(dims)),
      spacing_(std::move(spacing)),
      periodic_(std::move(periodic)),
      origin_(std::move(origin)),
      cap_(node_cap) {
  const std::size_t n = dims_.size();
  if (n == 0) throw InputError("grid needs at least one axis");
  if (spacing_.size() != n || periodic_.size() != n)
    throw InputError("grid: dims, spacing and periodic flags differ in length");
  if (origin_.empty()) origin_.assign(n, 0.0);
  if (origin_.size() != n) throw InputError("grid: origin has wrong length");
  size_ = 1;
  stride_.assign(n, 1);
  for (std::size_t j = n; j-- > 0;) {
    if (dims_[j] < 2) throw InputError("grid: every axis needs at least 2 nodes");
    if (!(spacing_[j] > 0.0)) throw InputError("grid: spacings must be positive");
    stride_[j] = size_;
    size_ *= static_cast<std::size_t>(dims_[j]);
    if (size_ > cap_)
      throw CapacityError("grid: node count exceeds cap of " + std::to_string(cap_));
  }
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (double h : spacing_) v *= h;
  return v;
}

double Grid::min_spacing() const { return *std::min_element(spacing_.begin(), spacing_.end()); }

std::vector<int> Grid::multi_index(std::size_t node) const {
  std::vector<int> idx(dims_.size());
  for (std::size_t j = 0; j < dims_.size(); ++j)
    idx[j] = static_cast<int>((node / stride_[j]) % static_cast<std::size_t>(dims_[j]));
  return idx;
}

int Grid::axis_index(std::size_t node, int axis) const {
  return static_cast<int>((node / stride_[axis]) % static_cast<std::size_t>(dims_[axis]));
}

std::size_t Grid::flat_index(std::span<const int> idx) const {
  std::size_t k = 0;
  for (std::size_t j = 0; j < dims_.size(); ++j) k += stride_[j] * static_cast<std::size_t>(idx[j]);
  return k;
}

double Grid::coordinate(std::size_t node, int axis) const {
  return origin_[axis] + spacing_[axis] * axis_index(node, axis);
}

std::optional<std::size_t> Grid::offset(std::size_t node, std::span<const int> steps) const {
  std::size_t out = node;
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    if (steps[j] == 0) continue;
    const int i = axis_index(node, static_cast<int>(j));
    int k = i + steps[j];
    if (periodic_[j]) {
      k %= dims_[j];
      if (k < 0) k += dims_[j];
    } else if (k < 0 || k >= dims_[j]) {
      return std::nullopt;
    }
    out = out - stride_[j] * static_cast<std::size_t>(i) + stride_[j] * static_cast<std::size_t>(k);
  }
  return out;
}

std::optional<std::size_t> Grid::neighbor(std::size_t node, int axis, int step) const {
  std::vector<int> steps(dims_.size(), 0);
  steps[axis] = step;
  return offset(node, steps);
}

Grid Grid::with_axis(int nodes, double spacing) const {
  if (nodes < 3 || nodes % 2 == 0) throw InputError("extension axis needs an odd node count >= 3");
  auto d = dims_;
  auto h = spacing_;
  auto p = periodic_;
  auto o = origin_;
  d.push_back(nodes);
  h.push_back(spacing);
  p.push_back(false);
  o.push_back(-spacing * (nodes / 2));
  return Grid(d, h, p, o, cap_);
}

bool Grid::same_shape(const Grid& other) const {
  return dims_ == other.dims_ && spacing_ == other.spacing_ && periodic_ == other.periodic_;
}

}  // namespace fraclab
