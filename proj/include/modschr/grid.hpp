#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace modschr {

/// Uniform Cartesian grid with 1, 2 or 3 axes.
///
/// Cells are addressed by a flattened row-major index: the last axis varies
/// fastest, so in 2-D `flat = i0 * shape[1] + i1` and in 3-D
/// `flat = (i0 * shape[1] + i1) * shape[2] + i2`. Every module uses this one
/// convention through `flat()` / `unflatten()` / `stride()`.
class Grid {
public:
  static constexpr std::size_t max_dims = 3;
  using Index = std::array<std::size_t, max_dims>;

  Grid(std::vector<std::size_t> shape, std::vector<double> spacing,
       std::vector<double> origin = {})
  {
    const std::size_t d = shape.size();
    if (d < 1 || d > max_dims)
      throw std::invalid_argument("grid must have 1, 2 or 3 axes");
    if (spacing.size() == 1 && d > 1)
      spacing.assign(d, spacing.front());
    if (spacing.size() != d)
      throw std::invalid_argument("grid spacing must have one entry per axis");
    if (origin.empty())
      origin.assign(d, 0.0);
    if (origin.size() != d)
      throw std::invalid_argument("grid origin must have one entry per axis");

    dims_ = d;
    for (std::size_t a = 0; a < d; ++a) {
      if (shape[a] < 2)
        throw std::invalid_argument("grid axis " + std::to_string(a) +
                                    " needs at least 2 cells");
      if (!(spacing[a] > 0.0))
        throw std::invalid_argument("grid spacing on axis " +
                                    std::to_string(a) + " must be positive");
      shape_[a] = shape[a];
      spacing_[a] = spacing[a];
      origin_[a] = origin[a];
    }
    size_ = 1;
    for (std::size_t a = dims_; a-- > 0;) {
      stride_[a] = size_;
      size_ *= shape_[a];
    }
  }

  std::size_t dims() const { return dims_; }
  std::size_t shape(std::size_t axis) const { return shape_.at(axis); }
  double spacing(std::size_t axis) const { return spacing_.at(axis); }
  double origin(std::size_t axis) const { return origin_.at(axis); }
  std::size_t stride(std::size_t axis) const { return stride_.at(axis); }
  std::size_t size() const { return size_; }

  double cell_volume() const
  {
    double v = 1.0;
    for (std::size_t a = 0; a < dims_; ++a)
      v *= spacing_[a];
    return v;
  }

  double min_spacing() const
  {
    double s = spacing_[0];
    for (std::size_t a = 1; a < dims_; ++a)
      s = std::min(s, spacing_[a]);
    return s;
  }

  std::size_t flat(const Index& idx) const
  {
    std::size_t f = 0;
    for (std::size_t a = 0; a < dims_; ++a) {
      if (idx[a] >= shape_[a])
        throw std::out_of_range("grid index out of range on axis " +
                                std::to_string(a));
      f += idx[a] * stride_[a];
    }
    return f;
  }

  Index unflatten(std::size_t flat) const
  {
    Index idx{0, 0, 0};
    for (std::size_t a = 0; a < dims_; ++a) {
      idx[a] = flat / stride_[a];
      flat %= stride_[a];
    }
    return idx;
  }

  /// Coordinate [m] of cell `i` along `axis`.
  double coordinate(std::size_t axis, std::size_t i) const
  {
    return origin_[axis] + static_cast<double>(i) * spacing_[axis];
  }

  /// True when the cell touches any face of the grid.
  bool on_boundary(std::size_t flat) const
  {
    const Index idx = unflatten(flat);
    for (std::size_t a = 0; a < dims_; ++a)
      if (idx[a] == 0 || idx[a] + 1 == shape_[a])
        return true;
    return false;
  }

  friend bool operator==(const Grid& l, const Grid& r)
  {
    return l.dims_ == r.dims_ && l.shape_ == r.shape_ &&
           l.spacing_ == r.spacing_ && l.origin_ == r.origin_;
  }

private:
  std::size_t dims_ = 0;
  std::size_t size_ = 0;
  Index shape_{1, 1, 1};
  Index stride_{1, 1, 1};
  std::array<double, max_dims> spacing_{1.0, 1.0, 1.0};
  std::array<double, max_dims> origin_{0.0, 0.0, 0.0};
};

}  // namespace modschr
