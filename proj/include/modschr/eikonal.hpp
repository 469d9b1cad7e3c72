#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "modschr/field.hpp"

namespace modschr {

/// Front propagation speed v_P [m/s]: one constant or a per-cell map.
class SpeedModel {
public:
  SpeedModel(double constant) : speed_(constant)  // NOLINT: implicit by intent
  {
    if (!(constant > 0.0) || !std::isfinite(constant))
      throw std::invalid_argument("propagation speed must be positive and finite");
  }

  SpeedModel(ScalarField map) : speed_(std::move(map))  // NOLINT
  {
    for (double v : std::get<ScalarField>(speed_).values())
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("speed map must be positive and finite everywhere");
  }

  bool is_constant() const { return std::holds_alternative<double>(speed_); }

  double at(std::size_t flat) const
  {
    if (const double* c = std::get_if<double>(&speed_))
      return *c;
    return std::get<ScalarField>(speed_)[flat];
  }

  const ScalarField* map() const { return std::get_if<ScalarField>(&speed_); }

private:
  std::variant<double, ScalarField> speed_;
};

/// Cells where the perturbation exists at t0 = 0.
struct SourceSpec {
  std::vector<std::size_t> cells;  ///< flattened indices

  static SourceSpec point(const Grid& g, const Grid::Index& idx)
  {
    return {{g.flat(idx)}};
  }

  static SourceSpec center(const Grid& g)
  {
    Grid::Index idx{0, 0, 0};
    for (std::size_t a = 0; a < g.dims(); ++a)
      idx[a] = g.shape(a) / 2;
    return point(g, idx);
  }
};

/// First-arrival perturbation traveltime t_P [s] per cell.
class TraveltimeField {
public:
  /// Wraps precomputed arrival times (e.g. an analytic t_P or a file).
  explicit TraveltimeField(ScalarField times, std::vector<std::size_t> order = {})
    : times_(std::move(times)), order_(std::move(order))
  {
    for (double t : times_.values())
      if (!(t >= 0.0) || !std::isfinite(t))
        throw std::invalid_argument("traveltime must be finite and non-negative");
  }

  static TraveltimeField zero(const Grid& g) { return TraveltimeField(ScalarField(g, 0.0)); }

  const Grid& grid() const { return times_.grid(); }
  const ScalarField& times() const { return times_; }
  double operator[](std::size_t flat) const { return times_[flat]; }
  std::size_t size() const { return times_.size(); }

  /// Order in which the solver finalized cells; empty for wrapped fields.
  std::span<const std::size_t> finalize_order() const { return order_; }

  double max() const
  {
    const auto v = times_.values();
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  }

private:
  ScalarField times_;
  std::vector<std::size_t> order_;
};

/// Tuning for `solve_traveltime`.
struct FastMarchingOptions {
  /// Cells within this distance [m] of a source cell are initialized with
  /// straight-ray times |x - x_s| / v(x_s) and frozen before marching starts.
  /// Zero gives plain first-order fast marching from the source cells alone.
  double source_radius = 0.0;
};

/// Straight-ray neighbourhood radius covering 4% of the shortest domain
/// extent. Being a physical length, it keeps refinement studies convergent.
inline double default_source_radius(const Grid& g)
{
  double extent = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < g.dims(); ++a)
    extent = std::min(extent, static_cast<double>(g.shape(a) - 1) * g.spacing(a));
  return 0.04 * extent;
}

namespace detail {

/// Godunov upwind update: largest root of sum_a ((T - T_a)/h_a)^2 = slowness^2
/// over the smallest consistent subset of upwind neighbours.
inline double godunov_update(std::vector<std::pair<double, double>>& upwind,
                             double slowness)
{
  std::sort(upwind.begin(), upwind.end());
  double t = upwind[0].first + upwind[0].second * slowness;
  double a = 0.0, b = 0.0, c = 0.0;
  for (std::size_t m = 0; m < upwind.size(); ++m) {
    const auto [tm, hm] = upwind[m];
    if (m > 0 && t <= tm)
      break;
    const double w = 1.0 / (hm * hm);
    a += w;
    b += -2.0 * tm * w;
    c += tm * tm * w;
    const double disc = b * b - 4.0 * a * (c - slowness * slowness);
    if (disc < 0.0)
      break;
    t = (-b + std::sqrt(disc)) / (2.0 * a);
  }
  return t;
}

}  // namespace detail

/// First-order fast marching solution of |grad t_P| = 1 / v_P.
///
/// Heap ties are broken by the lowest flattened index, so the finalization
/// order is deterministic. Source cells carry t_P = 0 exactly.
inline TraveltimeField solve_traveltime(const Grid& grid, const SourceSpec& source,
                                        const SpeedModel& speed,
                                        const FastMarchingOptions& options = {})
{
  if (source.cells.empty())
    throw std::invalid_argument("source set is empty");
  for (std::size_t c : source.cells)
    if (c >= grid.size())
      throw std::out_of_range("source cell index out of bounds");
  if (const ScalarField* m = speed.map(); m && !(m->grid() == grid))
    throw std::invalid_argument("speed map grid does not match solve grid");
  if (!(options.source_radius >= 0.0))
    throw std::invalid_argument("source radius must be non-negative");

  enum : std::uint8_t { far, trial, known };
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = grid.size();
  std::vector<double> t(n, inf);
  std::vector<std::uint8_t> state(n, far);
  std::vector<std::uint8_t> fixed(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t c : source.cells) {
    t[c] = 0.0;
    state[c] = trial;
  }
  if (options.source_radius > 0.0) {
    const double r2max = options.source_radius * options.source_radius;
    for (std::size_t c : source.cells) {
      const auto s = grid.unflatten(c);
      const double slowness = 1.0 / speed.at(c);
      for (std::size_t i = 0; i < n; ++i) {
        const auto x = grid.unflatten(i);
        double r2 = 0.0;
        for (std::size_t a = 0; a < grid.dims(); ++a) {
          const double d = (static_cast<double>(x[a]) - static_cast<double>(s[a])) *
                           grid.spacing(a);
          r2 += d * d;
        }
        if (r2 <= r2max && std::sqrt(r2) * slowness < t[i]) {
          t[i] = std::sqrt(r2) * slowness;
          state[i] = trial;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (state[i] == trial) {
      fixed[i] = 1;
      heap.emplace(t[i], i);
    }

  std::vector<std::pair<double, double>> upwind;
  while (!heap.empty()) {
    const auto [tc, c] = heap.top();
    heap.pop();
    if (state[c] == known || tc != t[c])
      continue;
    state[c] = known;
    order.push_back(c);

    const auto idx = grid.unflatten(c);
    for (std::size_t a = 0; a < grid.dims(); ++a) {
      for (int dir : {-1, 1}) {
        if ((dir < 0 && idx[a] == 0) || (dir > 0 && idx[a] + 1 == grid.shape(a)))
          continue;
        const std::size_t nb = dir < 0 ? c - grid.stride(a) : c + grid.stride(a);
        if (state[nb] == known || fixed[nb])
          continue;

        const auto nidx = grid.unflatten(nb);
        upwind.clear();
        for (std::size_t b = 0; b < grid.dims(); ++b) {
          double best = inf;
          if (nidx[b] > 0 && state[nb - grid.stride(b)] == known)
            best = t[nb - grid.stride(b)];
          if (nidx[b] + 1 < grid.shape(b) && state[nb + grid.stride(b)] == known)
            best = std::min(best, t[nb + grid.stride(b)]);
          if (best < inf)
            upwind.emplace_back(best, grid.spacing(b));
        }
        const double cand = detail::godunov_update(upwind, 1.0 / speed.at(nb));
        if (cand < t[nb]) {
          t[nb] = cand;
          state[nb] = trial;
          heap.emplace(cand, nb);
        }
      }
    }
  }
  return TraveltimeField(ScalarField(grid, std::move(t)), std::move(order));
}

/// Cells already reached by the front at global time `t` (t_P <= t).
inline MaskField front_mask(const TraveltimeField& tt, double t)
{
  std::vector<std::uint8_t> m(tt.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = tt[i] <= t ? 1 : 0;
  return {tt.grid(), std::move(m)};
}

}  // namespace modschr
