#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modschr/grid.hpp"

namespace modschr {

using complex = std::complex<double>;

/// Grid-attached value array. Immutable once built.
template <class T>
class Field {
public:
  using value_type = T;

  explicit Field(Grid grid, T fill = T{})
    : grid_(std::move(grid)), values_(grid_.size(), fill)
  {}

  Field(Grid grid, std::vector<T> values)
    : grid_(std::move(grid)), values_(std::move(values))
  {
    if (values_.size() != grid_.size())
      throw std::invalid_argument("field has " +
                                  std::to_string(values_.size()) +
                                  " values, grid has " +
                                  std::to_string(grid_.size()) + " cells");
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const T> values() const { return values_; }
  const T& operator[](std::size_t flat) const { return values_[flat]; }
  const T& at(const Grid::Index& idx) const { return values_[grid_.flat(idx)]; }

private:
  Grid grid_;
  std::vector<T> values_;
};

using ScalarField = Field<double>;

/// Cell-wise boolean; `1` selects the cell.
using MaskField = Field<std::uint8_t>;

/// Complex wave-function samples with the global time they belong to.
class ComplexField : public Field<complex> {
public:
  explicit ComplexField(Grid grid, double time_stamp = 0.0)
    : Field<complex>(std::move(grid)), time_stamp_(time_stamp)
  {}

  ComplexField(Grid grid, std::vector<complex> values, double time_stamp = 0.0)
    : Field<complex>(std::move(grid), std::move(values)),
      time_stamp_(time_stamp)
  {}

  double time_stamp() const { return time_stamp_; }

private:
  double time_stamp_ = 0.0;
};

inline MaskField invert(const MaskField& mask)
{
  std::vector<std::uint8_t> out(mask.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = mask[i] ? 0 : 1;
  return {mask.grid(), std::move(out)};
}

/// Sum of |psi|^2 * cell volume over the selected cells (all cells without a
/// mask).
inline double l2_norm_squared(const Field<complex>& field,
                              const std::optional<MaskField>& mask = std::nullopt)
{
  if (mask && !(mask->grid() == field.grid()))
    throw std::invalid_argument("mask grid does not match field grid");
  double sum = 0.0;
  const auto v = field.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!mask || (*mask)[i])
      sum += std::norm(v[i]);
  return sum * field.grid().cell_volume();
}

}  // namespace modschr
