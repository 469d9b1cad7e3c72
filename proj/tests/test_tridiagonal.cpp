#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "modschr/tridiagonal.hpp"

using namespace modschr;
using cd = std::complex<double>;

TEST(Tridiagonal, SolvesKnownSystem)
{
  // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] -> x = [1 1 1]
  std::vector<double> lo{0, -1, -1}, di{2, 2, 2}, up{-1, -1, 0}, b{1, 0, 1};
  const auto x = solve_tridiagonal<double>(lo, di, up, b);
  for (double v : x)
    EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Tridiagonal, ComplexResidualOnRandomDominantSystems)
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50;
    std::vector<cd> lo(n), di(n), up(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = {nd(rng), nd(rng)};
      up[i] = {nd(rng), nd(rng)};
      di[i] = cd(4.0 + std::abs(lo[i]) + std::abs(up[i]), nd(rng));
      b[i] = {nd(rng), nd(rng)};
    }
    const TridiagonalSystem<cd> sys(lo, di, up);
    const auto x = sys.solve(b);
    for (std::size_t i = 0; i < n; ++i) {
      cd r = di[i] * x[i] - b[i];
      if (i > 0)
        r += lo[i] * x[i - 1];
      if (i + 1 < n)
        r += up[i] * x[i + 1];
      EXPECT_LT(std::abs(r), 1e-12);
    }
  }
}

TEST(Tridiagonal, ErrorPaths)
{
  std::vector<double> lo{0, 1}, di{0, 1}, up{1, 0};
  EXPECT_THROW((TridiagonalSystem<double>(lo, di, up)), std::runtime_error);
  std::vector<double> shorter{1};
  EXPECT_THROW((TridiagonalSystem<double>(lo, shorter, up)), std::invalid_argument);
  std::vector<double> ok_di{2, 2};
  const TridiagonalSystem<double> sys(lo, ok_di, up);
  std::vector<double> bad_rhs(3);
  EXPECT_THROW(sys.solve_in_place(bad_rhs), std::invalid_argument);
}
