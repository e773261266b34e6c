#include <benchmark/benchmark.h>

#include "shlr/fixtures.hpp"
#include "shlr/sbv.hpp"

using namespace shlr;

namespace {

void BM_koszul_alpha(benchmark::State& state) {
  Permutation s = {3, 1, 5, 2, 4};
  DegreeSeq d = {1, 0, -1, 2, 1};
  for (auto _ : state) benchmark::DoNotOptimize(koszul_alpha(s, d));
}
BENCHMARK(BM_koszul_alpha);

void BM_unshuffles_3_4(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(unshuffles(3, 4));
}
BENCHMARK(BM_unshuffles_3_4);

void BM_gbracket(benchmark::State& state) {
  SplitMix rng(1);
  auto V = GradedSpace::make({{"a", -1}, {"b", 0}, {"c", 1}});
  auto rnd = [&](int arity) {
    SymMultiMap m = SymMultiMap::zero(arity, 1, V, V);
    for_each_sorted_tuple(V->dim(), arity, [&](const std::vector<int>& key) {
      if (has_odd_repeat(*V, key)) return;
      int t = 1;
      for (int i : key) t += V->degree(i);
      Element e(V);
      for (int i = 0; i < V->dim(); ++i)
        if (V->degree(i) == t) e.add_term(i, rng.coeff());
      m.set(key, e);
    });
    return m;
  };
  SymMultiMap H = rnd(2), G = rnd(2);
  for (auto _ : state) benchmark::DoNotOptimize(gbracket(H, G));
}
BENCHMARK(BM_gbracket);

void BM_jacobiator_sl2(benchmark::State& state) {
  Fixture f = sl2_shifted();
  for (auto _ : state) benchmark::DoNotOptimize(jacobiator(f.S->X));
}
BENCHMARK(BM_jacobiator_sl2);

void BM_left_curvature_random(benchmark::State& state) {
  Fixture f = sl2_shifted();
  LeftConnection C = random_left_connection(f.S, rank2_module(f.S), 7);
  for (auto _ : state) benchmark::DoNotOptimize(left_curvature(C));
}
BENCHMARK(BM_left_curvature_random);

void BM_kahler_build(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kahler_fixture());
}
BENCHMARK(BM_kahler_build);

void BM_derived_brackets(benchmark::State& state) {
  Fixture f = exterior_bv();
  for (auto _ : state) benchmark::DoNotOptimize(derived_brackets(*f.bv, 3));
}
BENCHMARK(BM_derived_brackets);

}  // namespace

BENCHMARK_MAIN();
