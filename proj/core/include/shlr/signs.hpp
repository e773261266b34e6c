#pragma once

#include <cstdint>
#include <vector>

namespace shlr {

// Homogeneous degrees of a tuple of elements. Any integers; only parity
// enters signs.
using DegreeSeq = std::vector<int>;

// 1-based images: perm[i-1] = sigma(i+... ), a bijection on {1..n}.
using Permutation = std::vector<int>;

inline int parity(int degree) { return degree & 1; }

inline int parity_sum(const DegreeSeq& degs) {
  int p = 0;
  for (int d : degs) p ^= parity(d);
  return p;
}

// (-1)^e for a parity bit or any integer exponent.
inline int sign_pow(int e) { return (e & 1) ? -1 : 1; }

bool is_permutation(const Permutation& p);

// Koszul sign defined by v_{s(1)} ... v_{s(n)} = alpha(s, v) v_1 ... v_n in
// the graded symmetric algebra: the product of (-1)^{v_i v_j} over the
// inversions of sigma.
int koszul_alpha(const Permutation& sigma, const DegreeSeq& degs);

// All (l,m)-unshuffles of {1..l+m}: sigma(1)<...<sigma(l) and
// sigma(l+1)<...<sigma(l+m). Enumerated lexicographically by the first
// block, which fixes the summation order everywhere a bracket formula sums
// over unshuffles.
std::vector<Permutation> unshuffles(int l, int m);

// Sign of the decalage isomorphism on a k-tuple of (unshifted) degrees:
// (-1)^{(k-1)d_1 + (k-2)d_2 + ... + d_{k-1}}.
int decalage_sign(const DegreeSeq& degs);

std::int64_t binomial(int n, int k);

}  // namespace shlr
