#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "modschr/constants.hpp"
#include "modschr/csv.hpp"
#include "modschr/dispersion.hpp"

namespace modschr {

/// One electron-diffraction measurement.
struct DiffractionRecord {
  double voltage;     ///< accelerating voltage V [V]
  double wavelength;  ///< measured wavelength lambda_exp [m]
};

struct Kinematics {
  double v;      ///< electron speed sqrt(2 e V / m) [m/s]
  double k_exp;  ///< 1 / lambda_exp [1/m]
};

inline Kinematics derive_kinematics(const DiffractionRecord& r,
                                    const PhysicalConstants& c = codata2018)
{
  if (!(r.voltage > 0.0) || !(r.wavelength > 0.0))
    throw std::invalid_argument("diffraction record needs positive voltage and wavelength");
  return {std::sqrt(2.0 * c.e_charge * r.voltage / c.m_e), 1.0 / r.wavelength};
}

/// Wave number k_l(v) = m v / h + beta m v^2 / 2h with beta = 1 / v_P.
inline double model_wavenumber(double v, double beta, const PhysicalConstants& c = codata2018)
{
  return c.m_e * v / c.h + beta * c.m_e * v * v / (2.0 * c.h);
}

struct FitResult {
  PropagationSpeed speed = PropagationSpeed::infinite();
  double beta = 0.0;                 ///< fitted 1 / v_P [s/m]
  double variance_modified = 0.0;    ///< mean squared residual at beta [1/m^2]
  double variance_classical = 0.0;   ///< mean squared residual at beta = 0 [1/m^2]
  std::vector<double> residuals;     ///< k_exp - k_model(beta) per record [1/m]
  std::size_t n_records = 0;
  bool clamped_to_classical = false; ///< unconstrained optimum had beta < 0

  double v_p() const { return speed.value(); }
};

/// Sum over records of (k_exp - k_model(beta))^2.
inline double sum_squared_residuals(std::span<const DiffractionRecord> records, double beta,
                                    const PhysicalConstants& c = codata2018)
{
  double s = 0.0;
  for (const auto& r : records) {
    const auto kin = derive_kinematics(r, c);
    const double res = kin.k_exp - model_wavenumber(kin.v, beta, c);
    s += res * res;
  }
  return s;
}

/// Least-squares v_P. The model is linear in beta = 1 / v_P, so with
/// a_i = m v_i^2 / 2h and r_i = k_exp,i - m v_i / h the optimum is
/// beta = sum a_i r_i / sum a_i^2, restricted to beta >= 0.
inline FitResult fit_vp(std::span<const DiffractionRecord> records,
                        const PhysicalConstants& c = codata2018)
{
  if (records.size() < 2)
    throw std::invalid_argument("fit needs at least 2 records");
  double saa = 0.0, sar = 0.0, skk = 0.0;
  std::vector<Kinematics> kin;
  kin.reserve(records.size());
  for (const auto& r : records) {
    kin.push_back(derive_kinematics(r, c));
    const double a = c.m_e * kin.back().v * kin.back().v / (2.0 * c.h);
    const double res = kin.back().k_exp - c.m_e * kin.back().v / c.h;
    saa += a * a;
    sar += a * res;
    skk += kin.back().k_exp * kin.back().k_exp;
  }
  if (!(saa > 0.0))
    throw std::invalid_argument("fit needs records with non-zero electron speed");

  FitResult out;
  out.n_records = records.size();
  // A correlation at rounding level (exactly classical data) also counts as
  // no evidence for finite v_P.
  double beta = sar / saa;
  if (sar <= 1e-12 * std::sqrt(saa * skk)) {
    beta = 0.0;
    out.clamped_to_classical = true;
  }
  out.beta = beta;
  out.speed = PropagationSpeed::from_slowness(beta);

  const double n = static_cast<double>(records.size());
  double ss_mod = 0.0, ss_cls = 0.0;
  for (const auto& k : kin) {
    const double r_mod = k.k_exp - model_wavenumber(k.v, beta, c);
    const double r_cls = k.k_exp - model_wavenumber(k.v, 0.0, c);
    out.residuals.push_back(r_mod);
    ss_mod += r_mod * r_mod;
    ss_cls += r_cls * r_cls;
  }
  out.variance_modified = ss_mod / n;
  out.variance_classical = ss_cls / n;
  return out;
}

struct CurvePoint {
  double v;           ///< [m/s]
  double k_classical; ///< m v / h [1/m]
  double k_modified;  ///< (m v / h)(1 + v / 2 v_P) [1/m]
};

/// Classical and modified wave-number curves over the given speeds.
inline std::vector<CurvePoint> model_curves(std::span<const double> speeds, PropagationSpeed v_p,
                                            const PhysicalConstants& c = codata2018)
{
  if (speeds.empty())
    throw std::invalid_argument("speed range is empty");
  std::vector<CurvePoint> out;
  out.reserve(speeds.size());
  for (double v : speeds) {
    if (!(v >= 0.0))
      throw std::invalid_argument("speeds must be non-negative");
    out.push_back({v, model_wavenumber(v, 0.0, c), model_wavenumber(v, v_p.slowness(), c)});
  }
  return out;
}

/// `n` speeds evenly spaced over [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t n)
{
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

// Dataset CSV: header `voltage_volts,wavelength_meters`, '#' lines are comments.

inline std::vector<DiffractionRecord> read_diffraction_csv(std::istream& in)
{
  std::vector<DiffractionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (csv::read_line(in, line)) {
    ++line_no;
    const auto t = csv::trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    const auto cols = csv::split(t);
    if (!header_seen) {
      if (cols.size() != 2 || csv::trim(cols[0]) != "voltage_volts" ||
          csv::trim(cols[1]) != "wavelength_meters")
        throw CsvError(line_no, "expected header 'voltage_volts,wavelength_meters'");
      header_seen = true;
      continue;
    }
    if (cols.size() != 2)
      throw CsvError(line_no, "expected 2 columns, found " + std::to_string(cols.size()));
    const DiffractionRecord r{csv::parse_double(cols[0], line_no),
                              csv::parse_double(cols[1], line_no)};
    if (!(r.voltage > 0.0) || !std::isfinite(r.voltage))
      throw CsvError(line_no, "voltage must be positive");
    if (!(r.wavelength > 0.0) || !std::isfinite(r.wavelength))
      throw CsvError(line_no, "wavelength must be positive");
    out.push_back(r);
  }
  if (!header_seen)
    throw CsvError(line_no + 1, "missing header 'voltage_volts,wavelength_meters'");
  return out;
}

inline void write_diffraction_csv(std::ostream& out, std::span<const DiffractionRecord> records,
                                  const std::vector<std::string>& comments = {})
{
  for (const auto& c : comments)
    out << "# " << c << '\n';
  out << "voltage_volts,wavelength_meters\n";
  for (const auto& r : records)
    out << csv::format_double(r.voltage) << ',' << csv::format_double(r.wavelength) << '\n';
}

/// Parameters for a synthetic dataset drawn from the modified model.
struct SyntheticSpec {
  PropagationSpeed v_p = PropagationSpeed::finite(1.3e8);
  std::size_t n = 20;
  std::uint64_t seed = 0;
  double noise = 0.0;         ///< standard deviation of k, relative to the model k
  double v_min_volts = 30.0;  ///< voltages evenly spaced over [min, max]
  double v_max_volts = 600.0;
};

/// Standard normal deviates from a 64-bit Mersenne Twister via Box-Muller.
/// Written out here because std::normal_distribution is not specified
/// bit-for-bit across standard libraries.
class NormalSource {
public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double operator()()
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0)
      u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<DiffractionRecord> synthesize_records(const SyntheticSpec& spec,
                                                         const PhysicalConstants& c = codata2018)
{
  if (spec.n < 2)
    throw std::invalid_argument("synthetic dataset needs at least 2 records");
  if (!(spec.noise >= 0.0))
    throw std::invalid_argument("noise level must be non-negative");
  if (!(spec.v_min_volts > 0.0) || !(spec.v_max_volts >= spec.v_min_volts))
    throw std::invalid_argument("voltage range must be positive and ordered");
  NormalSource normal(spec.seed);
  std::vector<DiffractionRecord> out;
  for (double volts : linspace(spec.v_min_volts, spec.v_max_volts, spec.n)) {
    const double v = std::sqrt(2.0 * c.e_charge * volts / c.m_e);
    double k = model_wavenumber(v, spec.v_p.slowness(), c);
    if (spec.noise > 0.0)
      k *= 1.0 + spec.noise * normal();
    if (!(k > 0.0))
      throw std::runtime_error("noise drove a synthetic wave number non-positive");
    out.push_back({volts, 1.0 / k});
  }
  return out;
}

}  // namespace modschr
