#pragma once

#include <cstdint>
#include <optional>

#include "shlr/sbv.hpp"

namespace shlr {

/// splitmix64. Every pseudo-random fixture is reproducible from its seed.
struct SplitMix {
  std::uint64_t s;
  explicit SplitMix(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  int range(int lo, int hi) { return lo + static_cast<int>(next() % (hi - lo + 1)); }
  // coefficients stay in {-2..2} to keep exact arithmetic cheap
  Rat coeff() { return Rat(range(-2, 2)); }
};

/// One named desk-scale structure with whatever extras it carries. The note
/// records which construction the fixture instantiates.
struct Fixture {
  std::string name;
  std::string note;
  SHLRPtr S;
  std::optional<LeftConnection> flat_left;
  std::optional<RightConnection> flat_right;
  std::shared_ptr<PInfinityAlgebra> pinfinity;
  std::shared_ptr<PInfinityInput> kahler_input;
  std::shared_ptr<KahlerResult> kahler;
  std::shared_ptr<OperatorFamily> bv;
  // which validator a perturbed fixture is meant to fail; empty otherwise
  std::string breaks;
  std::shared_ptr<GradedAlgebra> broken_algebra;
};

Fixture abelian(int rank, std::vector<int> degrees);
Fixture sl2_shifted();
Fixture heisenberg_shifted();
Fixture exterior_bv();
Fixture gerstenhaber_p1();
Fixture kahler_fixture();
Fixture trivial_right();

std::vector<std::string> fixture_names();
Fixture fixture(const std::string& name);

std::vector<std::string> perturbed_names();
Fixture perturbed(const std::string& which);

// Random subordinate connections over a given base; not flat in general.
LeftConnection random_left_connection(const SHLRPtr& S, ModulePtr P, std::uint64_t seed);
RightConnection random_right_connection(const SHLRPtr& S, ModulePtr Q, std::uint64_t seed);

// A rank-two module with small generator degrees, for connection sweeps.
ModulePtr rank2_module(const SHLRPtr& S);

// The extension K (x) Lambda(t) with t odd, plus a flat action of the
// heisenberg fixture on it; used by the action and derivative-representation
// tests.
struct ActionFixture {
  SHLRPtr S;
  AlgebraExtension ext;
  LeftConnection action;
};
ActionFixture action_fixture();

}  // namespace shlr
