// Acceptance checks: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "modschr/modschr.hpp"

using namespace modschr;

namespace {

const double me = codata2018.m_e;
int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail)
{
  std::printf("criterion %d: %s  %s  [%s]\n", id, ok ? "PASS" : "FAIL", what.c_str(),
              detail.c_str());
  failures += ok ? 0 : 1;
}

std::string fmt(const char* f, double a)
{
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b)
{
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c)
{
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

/// Max relative error against r / v outside `exclude` metres of cell `c`.
double cone_error(const TraveltimeField& tt, const Grid::Index& c, double v, double exclude)
{
  const Grid& g = tt.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unflatten(i);
    double r2 = 0.0;
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const double d = g.coordinate(a, idx[a]) - g.coordinate(a, c[a]);
      r2 += d * d;
    }
    const double r = std::sqrt(r2);
    if (r <= exclude)
      continue;
    worst = std::max(worst, std::abs(tt[i] - r / v) / (r / v));
  }
  return worst;
}

void eikonal_cone()
{
  const double v = 1.0;
  const auto start = std::chrono::steady_clock::now();
  Grid coarse({201, 201}, {1.0});
  const Grid::Index cc{100, 100, 0};
  const auto tt = solve_traveltime(coarse, SourceSpec::point(coarse, cc), v,
                                   {.source_radius = default_source_radius(coarse)});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double err = cone_error(tt, cc, v, 5.0);

  Grid fine({401, 401}, {0.5});
  const Grid::Index fc{200, 200, 0};
  const auto tf = solve_traveltime(fine, SourceSpec::point(fine, fc), v,
                                   {.source_radius = default_source_radius(fine)});
  const double err_fine = cone_error(tf, fc, v, 5.0);

  const auto plain = solve_traveltime(coarse, SourceSpec::point(coarse, cc), v);
  std::printf("info: plain fast marching (no source seeding) max relative error outside "
              "5 cells: %.4f\n",
              cone_error(plain, cc, v, 5.0));

  report(1, err < 0.02 && err_fine < err && seconds < 5.0,
         "eikonal point-source cone on 201x201, error < 2% outside 5 cells, "
         "halving spacing reduces error, < 5 s",
         fmt("h=1: %.4f, h=0.5: %.4f, ", err, err_fine) + fmt("runtime %.3f s", seconds));
}

void classical_limit()
{
  bool identical = true;
  std::size_t compared = 0;
  {
    Grid g({128}, {1e-11});
    const auto psi0 = make_gaussian_packet(g, {g.coordinate(0, 64)}, 8e-11, 2e9);
    const auto sol = propagate_classical(psi0, QuantumProblem::free(g, me, 2e-18), 50);
    const auto zero = TraveltimeField::zero(g);
    for (std::size_t k = sol.first_index(); k <= sol.last_index(); ++k) {
      const auto mod = evaluate_modified(sol, zero, sol.time(k));
      const auto& ref = sol.snapshot(k);
      identical &= std::memcmp(mod.values().data(), ref.values().data(),
                               ref.size() * sizeof(complex)) == 0;
      ++compared;
    }
  }
  {
    Grid g({40, 36}, {1e-11});
    const auto psi0 = make_gaussian_packet(g, {2e-10, 1.8e-10}, 5e-11, 1e9);
    const auto sol = propagate_classical(psi0, QuantumProblem::free(g, me, 2e-18), 10);
    const auto zero = TraveltimeField::zero(g);
    for (std::size_t k = sol.first_index(); k <= sol.last_index(); ++k) {
      const auto mod = evaluate_modified(sol, zero, sol.time(k));
      const auto& ref = sol.snapshot(k);
      identical &= std::memcmp(mod.values().data(), ref.values().data(),
                               ref.size() * sizeof(complex)) == 0;
      ++compared;
    }
  }
  report(2, identical, "t_P = 0 modified output bit-identical to classical snapshots",
         std::to_string(compared) + " snapshots compared (1-D and 2-D)");
}

void unitarity()
{
  Grid g({512}, {1e-11});
  const auto psi0 = make_gaussian_packet(g, {g.coordinate(0, 256)}, 2e-10, 1e9);
  const double e_scale = codata2018.hbar * codata2018.hbar / (2.0 * me * 1e-22);
  const double dt = 0.5 * codata2018.hbar / e_scale;
  const auto sol = propagate_classical(psi0, QuantumProblem::free(g, me, dt), 1000, 2);
  const double drift = std::abs(l2_norm_squared(sol.latest()) - sol.initial_norm()) /
                       sol.initial_norm();
  const double worst = sol.max_norm_drift();
  report(3, drift < 1e-9 && worst < 1e-9,
         "Crank-Nicolson 1000 steps, 1-D 512-cell Gaussian, relative norm drift < 1e-9",
         fmt("final drift %.3g, max over steps %.3g", drift, worst));
}

void plane_wave_law()
{
  const double k = 5e9, v_p = 1.3e8;
  const double nu = codata2018.h * k * k / (2.0 * me);
  const double dt = 1.0 / (nu * 400.0);
  Grid g({200}, {2e-12});
  const std::size_t n = 3000;
  std::vector<ComplexField> snaps;
  for (std::size_t s = 0; s <= n; ++s)
    snaps.push_back(make_plane_wave(g, nu, k, 0, static_cast<double>(s) * dt));
  const auto sol = ClassicalSolution::from_snapshots(std::move(snaps), dt);

  std::vector<double> tp(g.size());
  for (std::size_t i = 0; i < tp.size(); ++i)
    tp[i] = g.coordinate(0, i) / v_p;
  const TraveltimeField tt{ScalarField(g, tp)};

  double worst = 0.0;
  std::size_t times = 0;
  for (std::size_t s = 2000; s <= n; s += 100) {
    const double t = sol.time(s);
    const auto mod = evaluate_modified(sol, tt, t);
    const auto oracle = make_plane_wave(g, nu, k + nu / v_p, 0, t);
    for (std::size_t i = 0; i < g.size(); ++i)
      worst = std::max(worst, std::abs(mod[i] - oracle[i]));
    ++times;
  }
  report(4, worst < 1e-3,
         "retarded classical plane wave with t_P = x / v_P matches k_l = k + nu / v_P",
         fmt("max pointwise error %.3g over ", worst) + std::to_string(times) +
             " snapshot-aligned times");
}

void difference_scaling()
{
  Grid g({201}, {5e-12});
  const double e1 = box_energy(g, {1}, me);
  const double period = codata2018.h / e1;
  const double dt = period / 2000.0;
  const auto sol = propagate_classical(make_box_eigenmode(g, {1}),
                                       QuantumProblem::free(g, me, dt), 400);
  const double span = g.coordinate(0, g.size() - 1);
  const double v_p = span / (0.02 * period);
  const auto tt = solve_traveltime(g, SourceSpec::point(g, {0, 0, 0}), v_p);
  std::vector<double> half(tt.size());
  for (std::size_t i = 0; i < tt.size(); ++i)
    half[i] = 0.5 * tt[i];
  const double t = sol.time(300);
  const double full_res = difference_estimate(sol, tt, t).residual_max();
  const double half_res =
      difference_estimate(sol, TraveltimeField{ScalarField(g, half)}, t).residual_max();
  const double ratio = full_res / half_res;
  report(5, ratio >= 3.5 && ratio <= 4.5,
         "first-order difference estimate: halving t_P shrinks residual by 3.5-4.5x",
         fmt("residual %.4g -> %.4g, ratio %.4f", full_res, half_res, ratio));
}

void dispersion_identities()
{
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto log_uniform = [&](double lo, double hi) {
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * u01(rng));
  };

  // Harmonic laws, bit-level: the library result equals 1 / (1/v + 1/v_P).
  std::size_t harmonic_bad = 0;
  for (int s = 0; s < 10000; ++s) {
    const double v = log_uniform(1e3, 1e8), vp = log_uniform(1e6, 1e10);
    const auto speed = PropagationSpeed::finite(vp);
    const double expect = 1.0 / (1.0 / v + 1.0 / vp);
    harmonic_bad += modified_phase_velocity(v, speed) != expect;
    harmonic_bad += modified_group_velocity(v, speed) != expect;
    const auto p = FreeParticle::from_speed(me, v);
    harmonic_bad += modified_phase_velocity(p.phase_velocity(), speed) !=
                    1.0 / (1.0 / p.phase_velocity() + 1.0 / vp);
    harmonic_bad += modified_group_velocity(p.group_velocity(), speed) !=
                    1.0 / (1.0 / p.group_velocity() + 1.0 / vp);
  }

  // d nu / d k_l from central differences in v, against the modified group velocity.
  double fd_worst = 0.0;
  for (int s = 0; s < 200; ++s) {
    const double v = log_uniform(1e4, 5e7), vp = log_uniform(1e7, 1e9);
    const auto speed = PropagationSpeed::finite(vp);
    const double dv = 1e-5 * v;
    const auto a = FreeParticle::from_speed(me, v + dv), b = FreeParticle::from_speed(me, v - dv);
    const double slope =
        (a.nu - b.nu) / (modified_wavenumber_free(a, speed) - modified_wavenumber_free(b, speed));
    const double exact = modified_group_velocity(v, speed);
    fd_worst = std::max(fd_worst, std::abs(slope - exact) / exact);
  }

  std::size_t regime_bad = 0, unresolved = 0;
  const std::size_t samples = 10000;
  for (std::size_t s = 0; s < samples; ++s) {
    const double nu = log_uniform(1e10, 1e18), k = log_uniform(1e6, 1e11);
    const double vp = log_uniform(1e5, 1e10), alpha = std::numbers::pi * u01(rng);
    const WavePhaseDecomposition d(nu, k, alpha, PropagationSpeed::finite(vp));
    const double kl = modified_wavenumber_general(d);
    const auto regime = wavelength_regime(d);
    const double gap = kl - k;
    if (std::abs(gap) <= 1e-9 * std::max(k, kl)) {
      ++unresolved;  // k_l - k not resolvable in doubles
      continue;
    }
    const auto expect = gap > 0.0 ? WavelengthRegime::Shorter : WavelengthRegime::Longer;
    regime_bad += regime != expect;
  }

  report(6, harmonic_bad == 0 && fd_worst < 1e-6 && regime_bad == 0,
         "harmonic velocity laws exact, finite-difference d nu/d k_l within 1e-6, "
         "regime classifier matches sign of k_l - k on 1e4 samples",
         std::to_string(harmonic_bad) + " harmonic mismatches, " +
             fmt("fd error %.3g, ", fd_worst) + std::to_string(regime_bad) +
             " regime mismatches, " + std::to_string(unresolved) + " samples at threshold");
}

double grid_scan_beta(const std::vector<DiffractionRecord>& recs, double hi, std::size_t n)
{
  const auto& c = codata2018;
  std::vector<double> v, kexp;
  for (const auto& r : recs) {
    v.push_back(std::sqrt(2.0 * c.e_charge * r.voltage / c.m_e));
    kexp.push_back(1.0 / r.wavelength);
  }
  double best = 0.0, best_ss = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double beta = hi * static_cast<double>(j) / static_cast<double>(n - 1);
    double ss = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double model = c.m_e * v[i] / c.h * (1.0 + beta * v[i] / 2.0);
      ss += (kexp[i] - model) * (kexp[i] - model);
    }
    if (ss < best_ss) {
      best_ss = ss;
      best = beta;
    }
  }
  return best;
}

void fit_recovery()
{
  const double vp = 1.3e8;
  SyntheticSpec spec;
  spec.v_p = PropagationSpeed::finite(vp);
  spec.n = 20;
  spec.seed = 7;
  const double noiseless = std::abs(fit_vp(synthesize_records(spec)).v_p() / vp - 1.0);

  std::vector<double> fitted;
  spec.noise = 0.01;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    spec.seed = seed;
    fitted.push_back(fit_vp(synthesize_records(spec)).v_p());
  }
  std::sort(fitted.begin(), fitted.end());
  const double median = 0.5 * (fitted[49] + fitted[50]);
  const double median_err = std::abs(median / vp - 1.0);

  spec.seed = 42;
  const auto recs = synthesize_records(spec);
  const auto fit = fit_vp(recs);
  const std::size_t n_scan = 1000001;
  const double hi = 1.7 * fit.beta;  // beta* deliberately off the scan nodes
  const double scan = grid_scan_beta(recs, hi, n_scan);
  const double step = hi / static_cast<double>(n_scan - 1);
  const bool oracle_ok = std::abs(scan - fit.beta) <= step;

  report(7, noiseless < 1e-6 && median_err < 0.10 && oracle_ok,
         "fit recovery: noiseless within 1e-6, median of 100 trials at 1% noise within 10%, "
         "closed form matches grid scan",
         fmt("noiseless %.3g, median rel. error %.4f, ", noiseless, median_err) +
             fmt("scan - closed form = %.3g (step %.3g)", scan - fit.beta, step));
}

void shipped_dataset()
{
  const std::string path = std::string(MODSCHR_DATA_DIR) + "/davisson_germer_reconstructed.csv";
  std::ifstream in(path);
  if (!in) {
    report(8, false, "shipped diffraction dataset fit", "cannot open " + path);
    return;
  }
  const auto fit = fit_vp(read_diffraction_csv(in));
  const double ratio = fit.variance_classical / fit.variance_modified;
  const bool ok = fit.v_p() >= 1.0e8 && fit.v_p() <= 1.6e8 && ratio >= 1.8 && ratio <= 2.8;
  report(8, ok,
         "diffraction dataset: v_P in [1.0e8, 1.6e8] m/s, classical/modified variance ratio "
         "in [1.8, 2.8] (reconstructed data, consistency check only)",
         fmt("v_P %.4g m/s, variances %.3g / %.3g 1/m^2, ", fit.v_p(), fit.variance_modified,
             fit.variance_classical) +
             fmt("ratio %.3f", ratio));
}

void causality_gating()
{
  std::size_t runs = 0, gated = 0, violations = 0;
  const auto check = [&](const ClassicalSolution& sol, const TraveltimeField& tt) {
    for (std::size_t k = sol.first_index(); k <= sol.last_index(); ++k) {
      const double t = sol.time(k);
      const auto mod = evaluate_modified(sol, tt, t);
      for (std::size_t i = 0; i < mod.size(); ++i)
        if (t - tt[i] < 0.0) {
          ++gated;
          violations += mod[i] != complex(0.0);
        }
      ++runs;
    }
  };
  {
    Grid g({128}, {1e-11});
    const auto psi0 = make_gaussian_packet(g, {g.coordinate(0, 64)}, 8e-11, 2e9);
    const double dt = 2e-18;
    const auto sol = propagate_classical(psi0, QuantumProblem::free(g, me, dt), 60);
    const double span = g.coordinate(0, 127);
    check(sol, solve_traveltime(g, SourceSpec::point(g, {0, 0, 0}), span / (40 * dt)));
    check(sol, solve_traveltime(g, SourceSpec::center(g), span / (100 * dt)));
  }
  {
    Grid g({40, 36}, {1e-11});
    const auto psi0 = make_gaussian_packet(g, {2e-10, 1.8e-10}, 5e-11, 1e9);
    const double dt = 2e-18;
    const auto sol = propagate_classical(psi0, QuantumProblem::free(g, me, dt), 20);
    check(sol, solve_traveltime(g, SourceSpec::point(g, {3, 5, 0}), 4e-10 / (15 * dt),
                                {.source_radius = 3e-11}));
  }

  Grid g({80, 70}, {0.5});
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> speed(0.5, 3.0);
  std::vector<double> map(g.size());
  for (auto& s : map)
    s = speed(rng);
  const auto tt = solve_traveltime(g, SourceSpec::point(g, {10, 60, 0}), ScalarField(g, map));
  std::uniform_real_distribution<double> when(-1.0, 1.1 * tt.max());
  std::size_t monotone_bad = 0;
  for (int p = 0; p < 100; ++p) {
    double t1 = when(rng), t2 = when(rng);
    if (t1 > t2)
      std::swap(t1, t2);
    const auto m1 = front_mask(tt, t1), m2 = front_mask(tt, t2);
    for (std::size_t i = 0; i < g.size(); ++i)
      monotone_bad += m1[i] && !m2[i];
  }

  report(9, violations == 0 && gated > 0 && monotone_bad == 0,
         "causality: theta < 0 cells exactly zero on every modified evaluation, "
         "front_mask monotone over 100 random time pairs",
         std::to_string(runs) + " evaluations, " + std::to_string(gated) + " gated cells, " +
             std::to_string(violations) + " non-zero, " + std::to_string(monotone_bad) +
             " monotonicity violations");
}

}  // namespace

int main()
{
  eikonal_cone();
  classical_limit();
  unitarity();
  plane_wave_law();
  difference_scaling();
  dispersion_identities();
  fit_recovery();
  shipped_dataset();
  causality_gating();
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
