#include "shlr/signs.hpp"

#include <algorithm>
#include <stdexcept>

namespace shlr {

bool is_permutation(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  for (int v : p) {
    if (v < 1 || v > static_cast<int>(p.size()) || seen[v - 1]) return false;
    seen[v - 1] = true;
  }
  return true;
}

int koszul_alpha(const Permutation& sigma, const DegreeSeq& degs) {
  if (sigma.size() != degs.size()) throw std::invalid_argument("koszul_alpha: length mismatch");
  if (!is_permutation(sigma)) throw std::invalid_argument("koszul_alpha: not a permutation");
  const int n = static_cast<int>(sigma.size());
  int e = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (sigma[i] > sigma[j]) e ^= parity(degs[sigma[i] - 1]) & parity(degs[sigma[j] - 1]);
  return sign_pow(e);
}

std::vector<Permutation> unshuffles(int l, int m) {
  if (l < 0 || m < 0) throw std::invalid_argument("unshuffles: negative block size");
  const int n = l + m;
  std::vector<Permutation> out;
  std::vector<int> first(l);
  for (int i = 0; i < l; ++i) first[i] = i + 1;
  while (true) {
    Permutation sigma(n);
    std::vector<bool> used(n + 1, false);
    for (int i = 0; i < l; ++i) {
      sigma[i] = first[i];
      used[first[i]] = true;
    }
    int pos = l;
    for (int v = 1; v <= n; ++v)
      if (!used[v]) sigma[pos++] = v;
    out.push_back(std::move(sigma));
    // next l-subset of {1..n} in lexicographic order
    int i = l - 1;
    while (i >= 0 && first[i] == n - l + i + 1) --i;
    if (i < 0) break;
    ++first[i];
    for (int j = i + 1; j < l; ++j) first[j] = first[j - 1] + 1;
  }
  return out;
}

int decalage_sign(const DegreeSeq& degs) {
  const int k = static_cast<int>(degs.size());
  int e = 0;
  for (int i = 0; i < k; ++i) e ^= ((k - 1 - i) & 1) & parity(degs[i]);
  return sign_pow(e);
}

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace shlr
