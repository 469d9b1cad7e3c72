#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "modschr/eikonal.hpp"

namespace modschr {

/// Where a cell sits relative to the moving front S_P.
enum class RegionClass : std::uint8_t {
  NonPerturbed,  ///< theta < -tol: front has not arrived
  Front,         ///< |theta| <= tol
  Perturbed,     ///< theta > tol
};

inline char region_code(RegionClass c)
{
  switch (c) {
  case RegionClass::NonPerturbed: return 'N';
  case RegionClass::Front: return 'F';
  case RegionClass::Perturbed: return 'P';
  }
  return '?';
}

inline RegionClass classify(double theta, double front_tol)
{
  if (std::abs(theta) <= front_tol)
    return RegionClass::Front;
  return theta < 0.0 ? RegionClass::NonPerturbed : RegionClass::Perturbed;
}

/// Local time theta = t - t_P [s] per cell at one global time.
class LocalTimeField {
public:
  LocalTimeField(ScalarField theta, std::vector<RegionClass> classes,
                 double global_time, double front_tol)
    : theta_(std::move(theta)), classes_(std::move(classes)),
      global_time_(global_time), front_tol_(front_tol)
  {}

  const Grid& grid() const { return theta_.grid(); }
  const ScalarField& theta() const { return theta_; }
  double theta(std::size_t flat) const { return theta_[flat]; }
  RegionClass region(std::size_t flat) const { return classes_[flat]; }
  std::span<const RegionClass> classes() const { return classes_; }
  double global_time() const { return global_time_; }
  double front_tolerance() const { return front_tol_; }

  /// Mask of cells in `c`.
  MaskField mask(RegionClass c) const
  {
    std::vector<std::uint8_t> m(classes_.size());
    for (std::size_t i = 0; i < m.size(); ++i)
      m[i] = classes_[i] == c ? 1 : 0;
    return {grid(), std::move(m)};
  }

private:
  ScalarField theta_;
  std::vector<RegionClass> classes_;
  double global_time_;
  double front_tol_;
};

/// Half the time the front needs to cross the narrowest cell.
inline double default_front_tolerance(const Grid& g, double v_p)
{
  if (!(v_p > 0.0))
    throw std::invalid_argument("propagation speed must be positive");
  return g.min_spacing() / (2.0 * v_p);
}

inline LocalTimeField local_time(const TraveltimeField& tt, double t, double front_tol)
{
  if (!(front_tol >= 0.0))
    throw std::invalid_argument("front tolerance must be non-negative");
  std::vector<double> theta(tt.size());
  std::vector<RegionClass> classes(tt.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] = t - tt[i];
    classes[i] = classify(theta[i], front_tol);
  }
  return {ScalarField(tt.grid(), std::move(theta)), std::move(classes), t, front_tol};
}

/// Overload that checks `tt` lives on `grid`.
inline LocalTimeField local_time(const Grid& grid, const TraveltimeField& tt, double t,
                                 double front_tol)
{
  if (!(tt.grid() == grid))
    throw std::invalid_argument("traveltime grid does not match");
  return local_time(tt, t, front_tol);
}

/// v_P -> infinity: t_P = 0 everywhere, so theta is the global time.
inline LocalTimeField infinite_speed_limit(const Grid& grid, double t)
{
  if (!(t >= 0.0))
    throw std::invalid_argument("global time must be non-negative");
  return local_time(TraveltimeField::zero(grid), t, 0.0);
}

}  // namespace modschr
