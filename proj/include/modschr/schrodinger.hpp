#pragma once

#include <cmath>
#include <deque>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modschr/constants.hpp"
#include "modschr/csv.hpp"
#include "modschr/eikonal.hpp"
#include "modschr/field.hpp"
#include "modschr/tridiagonal.hpp"

namespace modschr {

/// Requested local time falls outside the retained snapshots.
class HistoryWindowError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Iterative linear solve did not reach its tolerance.
class SolverError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LinearSolverSettings {
  double tolerance = 1e-12;         ///< relative residual
  std::size_t max_iterations = 0;   ///< 0: 10 * unknowns + 100
};

/// Time-independent potential on a Dirichlet (zero-boundary) box.
class QuantumProblem {
public:
  QuantumProblem(ScalarField potential, double mass, double dt,
                 const PhysicalConstants& consts = codata2018,
                 LinearSolverSettings solver = {})
    : potential_(std::move(potential)), mass_(mass), dt_(dt), hbar_(consts.hbar),
      planck_(consts.h), solver_(solver)
  {
    if (!(mass > 0.0) || !std::isfinite(mass))
      throw std::invalid_argument("mass must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw std::invalid_argument("time step must be positive");
    for (double u : potential_.values())
      if (!std::isfinite(u))
        throw std::invalid_argument("potential must be finite everywhere");
    if (!(solver.tolerance > 0.0))
      throw std::invalid_argument("solver tolerance must be positive");
  }

  static QuantumProblem free(const Grid& g, double mass, double dt,
                             const PhysicalConstants& consts = codata2018)
  {
    return {ScalarField(g, 0.0), mass, dt, consts};
  }

  const Grid& grid() const { return potential_.grid(); }
  const ScalarField& potential() const { return potential_; }
  double mass() const { return mass_; }
  double dt() const { return dt_; }
  double hbar() const { return hbar_; }
  double planck() const { return planck_; }
  const LinearSolverSettings& solver() const { return solver_; }

private:
  ScalarField potential_;
  double mass_;
  double dt_;
  double hbar_;
  double planck_;
  LinearSolverSettings solver_;
};

/// One Crank-Nicolson step operator (I + i dt/2hbar H)^-1 (I - i dt/2hbar H)
/// with H = -hbar^2/2m laplacian + U, second-order central differences and
/// psi = 0 held on every boundary cell.
///
/// 1-D problems use a prefactored tridiagonal solve; 2-D and 3-D use
/// Jacobi-preconditioned COCG (conjugate gradients with the unconjugated
/// bilinear form, valid because the operator is complex symmetric).
class CrankNicolsonStepper {
public:
  explicit CrankNicolsonStepper(QuantumProblem problem)
    : problem_(std::move(problem)),
      tau_(0.0, problem_.dt() / (2.0 * problem_.hbar()))
  {
    const Grid& g = problem_.grid();
    const double kappa = problem_.hbar() * problem_.hbar() / (2.0 * problem_.mass());
    diag_h_.assign(g.size(), 0.0);
    for (std::size_t a = 0; a < g.dims(); ++a)
      axis_coeff_[a] = kappa / (g.spacing(a) * g.spacing(a));
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.on_boundary(i))
        continue;
      double d = problem_.potential()[i];
      for (std::size_t a = 0; a < g.dims(); ++a)
        d += 2.0 * axis_coeff_[a];
      diag_h_[i] = d;
    }
    if (g.dims() == 1 && g.size() > 2) {
      const std::size_t n = g.size() - 2;
      std::vector<complex> lower(n, -tau_ * axis_coeff_[0]);
      std::vector<complex> upper(lower);
      std::vector<complex> diag(n);
      for (std::size_t j = 0; j < n; ++j)
        diag[j] = 1.0 + tau_ * diag_h_[j + 1];
      tridiag_.emplace(lower, diag, upper);
    }
  }

  const QuantumProblem& problem() const { return problem_; }

  ComplexField step(const ComplexField& state) const
  {
    const Grid& g = problem_.grid();
    if (!(state.grid() == g))
      throw std::invalid_argument("state grid does not match problem grid");
    const auto psi = state.values();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.on_boundary(i) && psi[i] != complex(0.0))
        throw std::invalid_argument("state must vanish on boundary cells");

    std::vector<complex> rhs(g.size());
    apply_hamiltonian(psi, rhs);
    for (std::size_t i = 0; i < rhs.size(); ++i)
      rhs[i] = psi[i] - tau_ * rhs[i];

    std::vector<complex> next;
    if (tridiag_) {
      std::span<complex> interior(rhs.data() + 1, rhs.size() - 2);
      tridiag_->solve_in_place(interior);
      rhs.front() = rhs.back() = 0.0;
      next = std::move(rhs);
    } else {
      next = solve_cocg(rhs, psi);
    }
    return {g, std::move(next), state.time_stamp() + problem_.dt()};
  }

  /// out = H x on interior cells, 0 on the boundary.
  void apply_hamiltonian(std::span<const complex> x, std::span<complex> out) const
  {
    const Grid& g = problem_.grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.on_boundary(i)) {
        out[i] = 0.0;
        continue;
      }
      complex acc = diag_h_[i] * x[i];
      for (std::size_t a = 0; a < g.dims(); ++a) {
        const std::size_t s = g.stride(a);
        acc -= axis_coeff_[a] * (x[i - s] + x[i + s]);
      }
      out[i] = acc;
    }
  }

private:
  // (I + tau H) y = b
  void apply_system(std::span<const complex> x, std::span<complex> out) const
  {
    apply_hamiltonian(x, out);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = x[i] + tau_ * out[i];
  }

  std::vector<complex> solve_cocg(std::span<const complex> b,
                                  std::span<const complex> guess) const
  {
    const std::size_t n = b.size();
    const auto& settings = problem_.solver();
    const std::size_t max_it =
        settings.max_iterations ? settings.max_iterations : 10 * n + 100;

    double bnorm = 0.0;
    for (const auto& v : b)
      bnorm += std::norm(v);
    bnorm = std::sqrt(bnorm);
    std::vector<complex> x(guess.begin(), guess.end());
    if (bnorm == 0.0) {
      std::fill(x.begin(), x.end(), complex(0.0));
      return x;
    }

    std::vector<complex> r(n), z(n), p(n), q(n);
    apply_system(x, q);
    for (std::size_t i = 0; i < n; ++i)
      r[i] = b[i] - q[i];
    auto precondition = [&](std::span<const complex> in, std::span<complex> out) {
      for (std::size_t i = 0; i < n; ++i)
        out[i] = in[i] / (1.0 + tau_ * diag_h_[i]);
    };
    auto residual_norm = [&] {
      double s = 0.0;
      for (const auto& v : r)
        s += std::norm(v);
      return std::sqrt(s);
    };

    precondition(r, z);
    p = z;
    complex rho = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      rho += r[i] * z[i];

    for (std::size_t it = 0;; ++it) {
      if (residual_norm() <= settings.tolerance * bnorm)
        return x;
      if (it == max_it)
        throw SolverError("Crank-Nicolson solve did not converge to " +
                          csv::format_short(settings.tolerance) + " in " +
                          std::to_string(max_it) + " iterations");
      apply_system(p, q);
      complex pq = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        pq += p[i] * q[i];
      if (pq == complex(0.0))
        throw SolverError("Crank-Nicolson solve broke down");
      const complex alpha = rho / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      precondition(r, z);
      complex rho_next = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        rho_next += r[i] * z[i];
      const complex beta = rho_next / rho;
      rho = rho_next;
      for (std::size_t i = 0; i < n; ++i)
        p[i] = z[i] + beta * p[i];
    }
  }

  QuantumProblem problem_;
  complex tau_;
  std::array<double, Grid::max_dims> axis_coeff_{};
  std::vector<double> diag_h_;
  std::optional<TridiagonalSystem<complex>> tridiag_;
};

inline ComplexField step_classical(const ComplexField& state, const QuantumProblem& problem)
{
  return CrankNicolsonStepper(problem).step(state);
}

/// Classical Psi(x, t) at t_k = t0 + k dt for the retained steps k.
///
/// Only the newest `history_window` snapshots are kept; older ones are dropped
/// as new ones arrive. Values between snapshots are linearly interpolated in
/// time, and a request that lands exactly on a snapshot time returns that
/// snapshot's values untouched.
class ClassicalSolution {
public:
  ClassicalSolution(ComplexField initial, double dt, std::size_t history_window = 0)
    : grid_(initial.grid()), t0_(initial.time_stamp()), dt_(dt), window_(history_window)
  {
    if (!(dt > 0.0))
      throw std::invalid_argument("time step must be positive");
    initial_norm_ = l2_norm_squared(initial);
    snapshots_.push_back(std::move(initial));
  }

  /// Wraps externally produced snapshots (e.g. analytic ones) spaced by dt.
  static ClassicalSolution from_snapshots(std::vector<ComplexField> snapshots, double dt)
  {
    if (snapshots.empty())
      throw std::invalid_argument("need at least one snapshot");
    ClassicalSolution sol(std::move(snapshots.front()), dt);
    for (std::size_t k = 1; k < snapshots.size(); ++k) {
      const double expect = sol.time(k);
      if (std::abs(snapshots[k].time_stamp() - expect) > 1e-9 * dt)
        throw std::invalid_argument("snapshot times must advance by dt");
      sol.push(std::move(snapshots[k]));
    }
    return sol;
  }

  /// Appends the next step; its time stamp is normalized to t0 + k dt.
  void push(const ComplexField& next)
  {
    if (!(next.grid() == grid_))
      throw std::invalid_argument("snapshot grid does not match solution grid");
    const std::size_t k = last_ + 1;
    snapshots_.emplace_back(grid_, std::vector<complex>(next.values().begin(),
                                                        next.values().end()),
                            time(k));
    last_ = k;
    if (window_ > 0 && snapshots_.size() > window_)
      snapshots_.pop_front();
    if (initial_norm_ > 0.0) {
      const double drift =
          std::abs(l2_norm_squared(snapshots_.back()) - initial_norm_) / initial_norm_;
      max_drift_ = std::max(max_drift_, drift);
    }
  }

  const Grid& grid() const { return grid_; }
  double dt() const { return dt_; }
  double start_time() const { return t0_; }
  double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
  std::size_t history_window() const { return window_; }
  std::size_t first_index() const { return last_ + 1 - snapshots_.size(); }
  std::size_t last_index() const { return last_; }
  std::size_t retained() const { return snapshots_.size(); }

  const ComplexField& snapshot(std::size_t k) const
  {
    if (k < first_index() || k > last_)
      throw HistoryWindowError("step " + std::to_string(k) + " is not retained (have " +
                               std::to_string(first_index()) + ".." +
                               std::to_string(last_) + ")");
    return snapshots_[k - first_index()];
  }

  const ComplexField& latest() const { return snapshots_.back(); }

  /// Initial squared norm and the largest relative deviation seen so far.
  double initial_norm() const { return initial_norm_; }
  double max_norm_drift() const { return max_drift_; }

  /// Bracketing steps for `t`: (k, w) with value = (1-w) S_k + w S_{k+1}, w in [0, 1).
  std::pair<std::size_t, double> bracket(double t) const
  {
    const double lo = time(first_index());
    const double hi = time(last_);
    if (!(t >= lo) || !(t <= hi))
      throw HistoryWindowError(
          "time " + csv::format_short(t) + " s is outside the retained history [" +
          csv::format_short(lo) + ", " + csv::format_short(hi) +
          "] s; enlarge the history window or request an earlier time");
    const double s = std::floor((t - t0_) / dt_);
    std::size_t k = s < static_cast<double>(first_index())
                        ? first_index()
                        : std::min(static_cast<std::size_t>(s), last_);
    while (k > first_index() && time(k) > t)
      --k;
    while (k < last_ && time(k + 1) <= t)
      ++k;
    if (time(k) == t || k == last_)
      return {k, 0.0};
    return {k, (t - time(k)) / dt_};
  }

  complex value_at(std::size_t flat, double t) const
  {
    const auto [k, w] = bracket(t);
    const complex a = snapshot(k)[flat];
    if (w == 0.0)
      return a;
    return (1.0 - w) * a + w * snapshot(k + 1)[flat];
  }

  ComplexField at_time(double t) const
  {
    const auto [k, w] = bracket(t);
    const auto a = snapshot(k).values();
    std::vector<complex> out(a.begin(), a.end());
    if (w != 0.0) {
      const auto b = snapshot(k + 1).values();
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - w) * a[i] + w * b[i];
    }
    return {grid_, std::move(out), t};
  }

private:
  Grid grid_;
  double t0_;
  double dt_;
  std::size_t window_;
  std::size_t last_ = 0;
  std::deque<ComplexField> snapshots_;
  double initial_norm_ = 0.0;
  double max_drift_ = 0.0;
};

/// Snapshots needed to evaluate the retarded field at the newest time.
inline std::size_t required_history_window(double max_traveltime, double dt)
{
  return static_cast<std::size_t>(std::ceil(max_traveltime / dt)) + 2;
}

/// Runs `n_steps` Crank-Nicolson steps. `history_window` = 0 keeps everything.
inline ClassicalSolution propagate_classical(const ComplexField& initial,
                                             const QuantumProblem& problem,
                                             std::size_t n_steps,
                                             std::size_t history_window = 0)
{
  if (!(initial.grid() == problem.grid()))
    throw std::invalid_argument("initial state grid does not match problem grid");
  CrankNicolsonStepper stepper(problem);
  ClassicalSolution sol(initial, problem.dt(), history_window);
  ComplexField current = initial;
  for (std::size_t k = 0; k < n_steps; ++k) {
    current = stepper.step(current);
    sol.push(current);
  }
  return sol;
}

/// Psi_mod(x, t) = Psi(x, t - t_P(x)) where the front has arrived, 0 elsewhere.
inline ComplexField evaluate_modified(const ClassicalSolution& classical,
                                      const TraveltimeField& tt, double t)
{
  if (!(tt.grid() == classical.grid()))
    throw std::invalid_argument("traveltime grid does not match solution grid");
  std::vector<complex> out(tt.size(), complex(0.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double theta = t - tt[i];
    if (theta < 0.0)
      continue;
    out[i] = classical.value_at(i, theta);
  }
  return {tt.grid(), std::move(out), t};
}

/// First-order estimate of classical minus modified solutions.
///
/// `actual` = Psi(t) - Psi_mod(t) and `predicted` = dPsi/dt(t) * t_P are kept as
/// complex fields; the moduli are the fields usually plotted. dPsi/dt uses the
/// centered difference over +-dt, falling back to a second-order one-sided
/// difference at either end of the retained history.
struct DifferenceEstimate {
  ComplexField actual;
  ComplexField predicted;
  ScalarField actual_abs;
  ScalarField predicted_abs;

  /// max over cells of |actual - predicted|
  double residual_max() const
  {
    double m = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i)
      m = std::max(m, std::abs(actual[i] - predicted[i]));
    return m;
  }
};

inline ComplexField time_derivative(const ClassicalSolution& sol, double t)
{
  const double dt = sol.dt();
  const double lo = sol.time(sol.first_index());
  const double hi = sol.time(sol.last_index());
  if (sol.retained() < 3)
    throw HistoryWindowError("time derivative needs at least 3 retained snapshots");
  std::vector<complex> d(sol.grid().size());
  if (t - dt >= lo && t + dt <= hi) {
    const auto a = sol.at_time(t + dt), b = sol.at_time(t - dt);
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = (a[i] - b[i]) / (2.0 * dt);
  } else if (t - 2.0 * dt >= lo && t <= hi) {
    const auto a = sol.at_time(t), b = sol.at_time(t - dt), c = sol.at_time(t - 2.0 * dt);
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = (3.0 * a[i] - 4.0 * b[i] + c[i]) / (2.0 * dt);
  } else if (t >= lo && t + 2.0 * dt <= hi) {
    const auto a = sol.at_time(t), b = sol.at_time(t + dt), c = sol.at_time(t + 2.0 * dt);
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = (-3.0 * a[i] + 4.0 * b[i] - c[i]) / (2.0 * dt);
  } else {
    throw HistoryWindowError("insufficient history for a time derivative at t = " +
                             csv::format_short(t) + " s");
  }
  return {sol.grid(), std::move(d), t};
}

inline DifferenceEstimate difference_estimate(const ClassicalSolution& classical,
                                              const TraveltimeField& tt, double t)
{
  const ComplexField now = classical.at_time(t);
  const ComplexField retarded = evaluate_modified(classical, tt, t);
  const ComplexField dpsi = time_derivative(classical, t);

  const std::size_t n = tt.size();
  std::vector<complex> actual(n), predicted(n);
  std::vector<double> actual_abs(n), predicted_abs(n);
  for (std::size_t i = 0; i < n; ++i) {
    actual[i] = now[i] - retarded[i];
    predicted[i] = dpsi[i] * tt[i];
    actual_abs[i] = std::abs(actual[i]);
    predicted_abs[i] = std::abs(predicted[i]);
  }
  const Grid& g = tt.grid();
  return {ComplexField(g, std::move(actual), t), ComplexField(g, std::move(predicted), t),
          ScalarField(g, std::move(actual_abs)), ScalarField(g, std::move(predicted_abs))};
}

/// psi(x) with energy E; nu = E / h.
struct StationaryState {
  ComplexField psi;
  double energy;
  double nu;

  StationaryState(ComplexField psi_, double energy_,
                  const PhysicalConstants& consts = codata2018)
    : psi(std::move(psi_)), energy(energy_), nu(energy_ / consts.h)
  {}
};

/// psi(x) exp(-2 pi i nu (t - t_P(x))) inside the perturbed region, 0 outside.
inline ComplexField stationary_modified_wavefunction(const StationaryState& state,
                                                     const TraveltimeField& tt, double t)
{
  if (!(tt.grid() == state.psi.grid()))
    throw std::invalid_argument("traveltime grid does not match psi grid");
  std::vector<complex> out(tt.size(), complex(0.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double theta = t - tt[i];
    if (theta < 0.0)
      continue;
    double cycles = -state.nu * theta;
    cycles -= std::round(cycles);
    out[i] = state.psi[i] * std::polar(1.0, 2.0 * std::numbers::pi * cycles);
  }
  return {tt.grid(), std::move(out), t};
}

/// exp[2 pi i (-nu t + k x_axis)] sampled on the grid (nu in Hz, k in cycles/m).
inline ComplexField make_plane_wave(const Grid& grid, double nu, double k,
                                    std::size_t axis, double t)
{
  if (axis >= grid.dims())
    throw std::invalid_argument("plane-wave axis out of range");
  std::vector<complex> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = grid.coordinate(axis, grid.unflatten(i)[axis]);
    double cycles = -nu * t + k * x;
    cycles -= std::round(cycles);
    out[i] = std::polar(1.0, 2.0 * std::numbers::pi * cycles);
  }
  return {grid, std::move(out), t};
}

/// Normalized Gaussian packet exp(-|x - c|^2 / (4 sigma^2)) exp(2 pi i k x_0)
/// with boundary cells forced to zero. `center` has one entry per axis.
inline ComplexField make_gaussian_packet(const Grid& grid, const std::vector<double>& center,
                                         double sigma, double k_axis0)
{
  if (center.size() != grid.dims())
    throw std::invalid_argument("packet center needs one coordinate per axis");
  if (!(sigma > 0.0))
    throw std::invalid_argument("packet width must be positive");
  std::vector<complex> out(grid.size(), complex(0.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (grid.on_boundary(i))
      continue;
    const auto idx = grid.unflatten(i);
    double r2 = 0.0;
    for (std::size_t a = 0; a < grid.dims(); ++a) {
      const double d = grid.coordinate(a, idx[a]) - center[a];
      r2 += d * d;
    }
    const double x0 = grid.coordinate(0, idx[0]);
    out[i] = std::exp(-r2 / (4.0 * sigma * sigma)) *
             std::polar(1.0, 2.0 * std::numbers::pi * k_axis0 * x0);
  }
  ComplexField f(grid, out);
  const double norm = std::sqrt(l2_norm_squared(f));
  if (norm > 0.0)
    for (auto& v : out)
      v /= norm;
  return {grid, std::move(out)};
}

/// Particle-in-a-box mode prod_a sin(n_a pi (x_a - x0_a) / L_a), L_a spanning
/// the grid; normalized, boundary exactly zero.
inline ComplexField make_box_eigenmode(const Grid& grid, const std::vector<unsigned>& modes)
{
  if (modes.size() != grid.dims())
    throw std::invalid_argument("need one mode number per axis");
  std::vector<complex> out(grid.size(), complex(0.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (grid.on_boundary(i))
      continue;
    const auto idx = grid.unflatten(i);
    double v = 1.0;
    for (std::size_t a = 0; a < grid.dims(); ++a)
      v *= std::sin(modes[a] * std::numbers::pi * static_cast<double>(idx[a]) /
                    static_cast<double>(grid.shape(a) - 1));
    out[i] = v;
  }
  ComplexField f(grid, out);
  const double norm = std::sqrt(l2_norm_squared(f));
  for (auto& v : out)
    v /= norm;
  return {grid, std::move(out)};
}

/// Continuum box energy sum_a hbar^2 (n_a pi / L_a)^2 / 2m, L_a = (shape_a - 1) h_a.
inline double box_energy(const Grid& grid, const std::vector<unsigned>& modes, double mass,
                         const PhysicalConstants& consts = codata2018)
{
  double e = 0.0;
  for (std::size_t a = 0; a < grid.dims(); ++a) {
    const double len = static_cast<double>(grid.shape(a) - 1) * grid.spacing(a);
    const double q = modes.at(a) * std::numbers::pi / len;
    e += consts.hbar * consts.hbar * q * q / (2.0 * mass);
  }
  return e;
}

}  // namespace modschr
