#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace modschr {

/// LU factorization of a tridiagonal matrix (Thomas algorithm) kept for
/// repeated solves with the same operator.
///
/// Row i reads `lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1]`;
/// `lower[0]` and `upper[n-1]` are ignored. No pivoting, so the matrix should
/// be diagonally dominant (the Crank-Nicolson operators are).
template <class T>
class TridiagonalSystem {
public:
  TridiagonalSystem(std::span<const T> lower, std::span<const T> diag,
                    std::span<const T> upper)
    : lower_(lower.begin(), lower.end()), cprime_(diag.size()), inv_pivot_(diag.size())
  {
    const std::size_t n = diag.size();
    if (n == 0 || lower.size() != n || upper.size() != n)
      throw std::invalid_argument("tridiagonal bands must have equal, non-zero length");
    T pivot = diag[0];
    for (std::size_t i = 0;; ++i) {
      if (std::abs(pivot) == 0.0)
        throw std::runtime_error("tridiagonal solve: zero pivot at row " +
                                 std::to_string(i));
      inv_pivot_[i] = T(1) / pivot;
      cprime_[i] = upper[i] * inv_pivot_[i];
      if (i + 1 == n)
        break;
      pivot = diag[i + 1] - lower[i + 1] * cprime_[i];
    }
  }

  std::size_t size() const { return cprime_.size(); }

  /// Solves in place: `x` holds the right-hand side on entry.
  void solve_in_place(std::span<T> x) const
  {
    const std::size_t n = size();
    if (x.size() != n)
      throw std::invalid_argument("tridiagonal rhs has wrong length");
    x[0] *= inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i)
      x[i] = (x[i] - lower_[i] * x[i - 1]) * inv_pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;)
      x[i] -= cprime_[i] * x[i + 1];
  }

  std::vector<T> solve(std::span<const T> rhs) const
  {
    std::vector<T> x(rhs.begin(), rhs.end());
    solve_in_place(x);
    return x;
  }

private:
  std::vector<T> lower_;
  std::vector<T> cprime_;
  std::vector<T> inv_pivot_;
};

template <class T>
std::vector<T> solve_tridiagonal(std::span<const T> lower, std::span<const T> diag,
                                 std::span<const T> upper, std::span<const T> rhs)
{
  return TridiagonalSystem<T>(lower, diag, upper).solve(rhs);
}

}  // namespace modschr
