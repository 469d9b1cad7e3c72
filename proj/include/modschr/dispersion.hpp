#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "modschr/constants.hpp"

namespace modschr {

/// Perturbation propagation speed v_P, stored as its slowness 1/v_P so the
/// classical limit v_P -> infinity is the ordinary value 0.
class PropagationSpeed {
public:
  static PropagationSpeed finite(double v_p)
  {
    if (!(v_p > 0.0))
      throw std::invalid_argument("propagation speed must be positive");
    return PropagationSpeed(1.0 / v_p);
  }
  static PropagationSpeed infinite() { return PropagationSpeed(0.0); }
  static PropagationSpeed from_slowness(double s)
  {
    if (!(s >= 0.0) || !std::isfinite(s))
      throw std::invalid_argument("slowness must be finite and non-negative");
    return PropagationSpeed(s);
  }

  double slowness() const { return slowness_; }
  bool is_infinite() const { return slowness_ == 0.0; }
  double value() const
  {
    return is_infinite() ? std::numeric_limits<double>::infinity() : 1.0 / slowness_;
  }

private:
  explicit PropagationSpeed(double s) : slowness_(s) {}
  double slowness_;
};

/// psi = |psi| exp(2 pi i phi) with Phi = nu t_P + phi: the classical wave
/// number k = |grad phi| and the angle alpha between grad phi and grad t_P.
struct WavePhaseDecomposition {
  double nu;           ///< [Hz]
  double k_classical;  ///< [1/m]
  double alpha;        ///< [rad], in [0, pi]
  PropagationSpeed speed;

  WavePhaseDecomposition(double nu_, double k_, double alpha_, PropagationSpeed speed_)
    : nu(nu_), k_classical(k_), alpha(alpha_), speed(speed_)
  {
    if (!(nu >= 0.0) || !(k_classical >= 0.0))
      throw std::invalid_argument("frequency and wave number must be non-negative");
    if (!(alpha >= 0.0 && alpha <= std::numbers::pi))
      throw std::invalid_argument("alpha must lie in [0, pi]");
  }
};

/// k_l = |grad Phi| from k_l^2 = k^2 + nu^2/v_P^2 + 2 nu k cos(alpha) / v_P.
inline double modified_wavenumber_general(const WavePhaseDecomposition& d)
{
  const double shift = d.nu * d.speed.slowness();
  const double k = d.k_classical;
  // Collinear cases are perfect squares; return them without the sqrt.
  if (d.alpha == 0.0)
    return k + shift;
  if (d.alpha == std::numbers::pi)
    return std::abs(k - shift);
  const double k2 = k * k + shift * shift + 2.0 * shift * k * std::cos(d.alpha);
  return std::sqrt(std::max(k2, 0.0));
}

/// Free particle: nu = m v^2 / 2h, k = m v / h.
struct FreeParticle {
  double mass;   ///< [kg]
  double speed;  ///< [m/s]
  double nu;     ///< [Hz]
  double k;      ///< [1/m]

  static FreeParticle from_speed(double mass, double v,
                                 const PhysicalConstants& c = codata2018)
  {
    if (!(mass > 0.0))
      throw std::invalid_argument("mass must be positive");
    if (!(v >= 0.0))
      throw std::invalid_argument("particle speed must be non-negative");
    return {mass, v, mass * v * v / (2.0 * c.h), mass * v / c.h};
  }

  /// Electron accelerated from rest through `volts`: v = sqrt(2 e V / m).
  static FreeParticle electron_from_voltage(double volts,
                                            const PhysicalConstants& c = codata2018)
  {
    if (!(volts >= 0.0))
      throw std::invalid_argument("accelerating voltage must be non-negative");
    return from_speed(c.m_e, std::sqrt(2.0 * c.e_charge * volts / c.m_e), c);
  }

  double phase_velocity() const { return speed / 2.0; }
  double group_velocity() const { return speed; }
};

/// k_l = k + nu / v_P = (m v / h)(1 + v / 2 v_P); same arithmetic as the
/// general law at alpha = 0.
inline double modified_wavenumber_free(const FreeParticle& p, PropagationSpeed v_p)
{
  return p.k + p.nu * v_p.slowness();
}

namespace detail {
inline double harmonic_sum(double v, PropagationSpeed v_p, const char* what)
{
  if (!(v > 0.0))
    throw std::invalid_argument(std::string(what) + " must be positive");
  return 1.0 / (1.0 / v + v_p.slowness());
}
}  // namespace detail

/// 1/v_ph.l = 1/v_ph + 1/v_P
inline double modified_phase_velocity(double v_ph, PropagationSpeed v_p)
{
  return detail::harmonic_sum(v_ph, v_p, "phase velocity");
}

/// 1/v_gr.l = 1/v_gr + 1/v_P
inline double modified_group_velocity(double v_gr, PropagationSpeed v_p)
{
  return detail::harmonic_sum(v_gr, v_p, "group velocity");
}

enum class WavelengthRegime { Shorter, Equal, Longer };

inline const char* to_string(WavelengthRegime r)
{
  switch (r) {
  case WavelengthRegime::Shorter: return "shorter";
  case WavelengthRegime::Equal: return "equal";
  case WavelengthRegime::Longer: return "longer";
  }
  return "?";
}

/// Compares lambda_l = 1/k_l with lambda = 1/k through the sign of
/// cos(alpha) + nu / (2 k v_P); |difference| <= 1e-12 counts as Equal.
/// With nu / v_P = 0 the two wave numbers coincide and the result is Equal.
inline WavelengthRegime wavelength_regime(const WavePhaseDecomposition& d)
{
  if (!(d.k_classical > 0.0))
    throw std::invalid_argument("wavelength regime needs a positive classical wave number");
  if (d.nu * d.speed.slowness() == 0.0)
    return WavelengthRegime::Equal;
  const double threshold = -d.nu * d.speed.slowness() / (2.0 * d.k_classical);
  const double diff = std::cos(d.alpha) - threshold;
  if (std::abs(diff) <= 1e-12)
    return WavelengthRegime::Equal;
  return diff > 0.0 ? WavelengthRegime::Shorter : WavelengthRegime::Longer;
}

}  // namespace modschr
