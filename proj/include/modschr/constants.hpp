#pragma once

#include <numbers>

namespace modschr {

/// SI physical constants, CODATA 2018 values.
struct PhysicalConstants {
  double h = 6.62607015e-34;           ///< Planck constant [J s], exact
  double hbar = 6.62607015e-34 / (2.0 * std::numbers::pi);  ///< [J s]
  double m_e = 9.1093837015e-31;       ///< electron mass [kg]
  double e_charge = 1.602176634e-19;   ///< elementary charge [C], exact
  double c_light = 299792458.0;        ///< vacuum light speed [m/s], exact
};

inline constexpr PhysicalConstants codata2018{};

}  // namespace modschr
