#pragma once

#include <vector>

#include "shlr/rat.hpp"

namespace shlr {

/// Dense matrix over the rationals. Desk-scale dimensions; no sparsity.
struct RatMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Rat> a;

  RatMatrix() = default;
  RatMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  Rat& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  const Rat& at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  bool is_zero() const;

  static RatMatrix identity(int n);
  friend RatMatrix operator+(const RatMatrix& x, const RatMatrix& y);
  friend RatMatrix operator-(const RatMatrix& x, const RatMatrix& y);
  friend RatMatrix operator*(const RatMatrix& x, const RatMatrix& y);
  RatMatrix scaled(const Rat& c) const;
  friend bool operator==(const RatMatrix& x, const RatMatrix& y);
};

// Graded commutator x*y - (-1)^{px*py} y*x for operators of the given
// degree parities.
RatMatrix graded_commutator(const RatMatrix& x, int px, const RatMatrix& y, int py);

// Rank by in-place Gauss-Jordan over the rationals. Pivot rule: leftmost
// column with a nonzero entry, lowest row index. Deterministic.
int rank_rref(RatMatrix m);

}  // namespace shlr
