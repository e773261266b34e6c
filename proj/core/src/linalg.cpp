#include "shlr/linalg.hpp"

#include <stdexcept>

#include "shlr/signs.hpp"

namespace shlr {

bool RatMatrix::is_zero() const {
  for (const Rat& x : a)
    if (!x.is_zero()) return false;
  return true;
}

RatMatrix RatMatrix::identity(int n) {
  RatMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = Rat(1);
  return m;
}

RatMatrix operator+(const RatMatrix& x, const RatMatrix& y) {
  if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("matrix shape mismatch");
  RatMatrix r(x.rows, x.cols);
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] = x.a[i] + y.a[i];
  return r;
}

RatMatrix operator-(const RatMatrix& x, const RatMatrix& y) {
  if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("matrix shape mismatch");
  RatMatrix r(x.rows, x.cols);
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] = x.a[i] - y.a[i];
  return r;
}

RatMatrix operator*(const RatMatrix& x, const RatMatrix& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matrix shape mismatch");
  RatMatrix r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const Rat& xik = x.at(i, k);
      if (xik.is_zero()) continue;
      for (int j = 0; j < y.cols; ++j) {
        const Rat& ykj = y.at(k, j);
        if (!ykj.is_zero()) r.at(i, j) += xik * ykj;
      }
    }
  return r;
}

RatMatrix RatMatrix::scaled(const Rat& c) const {
  RatMatrix r(rows, cols);
  for (size_t i = 0; i < a.size(); ++i) r.a[i] = a[i] * c;
  return r;
}

bool operator==(const RatMatrix& x, const RatMatrix& y) {
  return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
}

RatMatrix graded_commutator(const RatMatrix& x, int px, const RatMatrix& y, int py) {
  RatMatrix xy = x * y;
  RatMatrix yx = y * x;
  if (parity(px) && parity(py)) return xy + yx;
  return xy - yx;
}

int rank_rref(RatMatrix m) {
  int rank = 0;
  for (int col = 0; col < m.cols && rank < m.rows; ++col) {
    int pivot = -1;
    for (int r = rank; r < m.rows; ++r)
      if (!m.at(r, col).is_zero()) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    for (int c = col; c < m.cols; ++c) std::swap(m.at(pivot, c), m.at(rank, c));
    const Rat inv = Rat(1) / m.at(rank, col);
    for (int c = col; c < m.cols; ++c) m.at(rank, c) *= inv;
    for (int r = 0; r < m.rows; ++r) {
      if (r == rank || m.at(r, col).is_zero()) continue;
      const Rat f = m.at(r, col);
      for (int c = col; c < m.cols; ++c) m.at(r, c) -= f * m.at(rank, c);
    }
    ++rank;
  }
  return rank;
}

}  // namespace shlr
