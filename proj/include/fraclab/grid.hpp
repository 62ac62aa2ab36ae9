#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fraclab {

inline constexpr std::size_t kDefaultNodeCap = 1u << 20;

// Tensor grid, axis 0 slowest in the flat index. Coordinates are origin + i*h.
class Grid {
 public:
  Grid(std::vector<int> dims, std::vector<double> spacing, std::vector<bool> periodic,
       std::vector<double> origin = {}, std::size_t node_cap = kDefaultNodeCap);

  int ndim() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return size_; }
  int dim(int axis) const { return dims_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  bool periodic(int axis) const { return periodic_[axis]; }
  double origin(int axis) const { return origin_[axis]; }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<double>& spacings() const { return spacing_; }
  double cell_volume() const;
  double min_spacing() const;

  std::vector<int> multi_index(std::size_t node) const;
  int axis_index(std::size_t node, int axis) const;
  std::size_t flat_index(std::span<const int> idx) const;
  double coordinate(std::size_t node, int axis) const;

  // Neighbour reached by moving steps[j] along every axis; nullopt off a non-periodic edge.
  std::optional<std::size_t> offset(std::size_t node, std::span<const int> steps) const;
  std::optional<std::size_t> neighbor(std::size_t node, int axis, int step) const;

  // Appends a non-periodic axis of odd node count centred on 0.
  Grid with_axis(int nodes, double spacing) const;

  bool same_shape(const Grid& other) const;

 private:
  std::vector<int> dims_;
  std::vector<double> spacing_;
  std::vector<bool> periodic_;
  std::vector<double> origin_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  std::size_t cap_;
};

}  // namespace fraclab
