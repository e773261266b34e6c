#pragma once

#include <cstdint>

#include "shlr/mder.hpp"

namespace shlr {

// splitmix64; the seed fixes every pseudo-random structure in the tests.
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  int range(int lo, int hi) { return lo + static_cast<int>(next() % (hi - lo + 1)); }
  Rat coeff() { return Rat(range(-2, 2)); }
};

inline Element random_element(Rng& rng, const SpacePtr& space, int degree) {
  Element e(space);
  for (int i = 0; i < space->dim(); ++i)
    if (space->degree(i) == degree) e.add_term(i, rng.coeff());
  return e;
}

inline Element from_scalar(const AlgebraPtr& A, long c) { return A->unit.scaled(Rat(c)); }

inline bool key_odd_repeat(const FreeModule& L, const std::vector<int>& key) {
  for (size_t i = 1; i < key.size(); ++i)
    if (key[i] == key[i - 1] && parity(L.gen_degrees[key[i]])) return true;
  return false;
}

inline ModMultiderivation random_mder(Rng& rng, const FreeCommPresentation& P,
                                      const ModulePtr& L, int arity, int degree) {
  ModMultiderivation X = ModMultiderivation::zero(L, arity, degree);
  for_each_sorted_tuple(L->ngens(), arity, [&](const std::vector<int>& key) {
    if (key_odd_repeat(*L, key)) return;
    int target = degree;
    for (int g : key) target += L->gen_degrees[g];
    X.add_x(key, random_element(rng, L->kspace, target));
  });
  for_each_sorted_tuple(L->ngens(), arity - 1, [&](const std::vector<int>& key) {
    if (key_odd_repeat(*L, key)) return;
    int sdeg = degree;
    for (int g : key) sdeg += L->gen_degrees[g];
    std::vector<Element> gen_values;
    for (const auto& [name, gd] : P.gens)
      gen_values.push_back(random_element(rng, P.algebra->space, gd + sdeg));
    X.add_sigma(key, derivation_from_gen_values(P, gen_values, sdeg));
  });
  return X;
}

inline FormalMultiderivation random_formal_mder(Rng& rng, const FreeCommPresentation& P,
                                                const ModulePtr& L, int max_arity, int degree,
                                                int cap) {
  FormalMultiderivation X = FormalMultiderivation::zero(L, degree, cap);
  for (int k = 1; k <= max_arity; ++k) {
    ModMultiderivation c = random_mder(rng, P, L, k, degree);
    if (!c.is_zero()) X.set_component(std::move(c));
  }
  return X;
}

}  // namespace shlr
