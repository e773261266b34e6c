#pragma once

#include "shlr/linalg.hpp"
#include "shlr/mder.hpp"

namespace shlr {

/// SH Lie-Rinehart algebra: a pair (A, L) carried by a free module together
/// with an odd structure multiderivation X = X_1 + X_2 + ... whose higher
/// Jacobiator (1/2)[X,X] vanishes within the arity cap. Validation happens at
/// construction and is recorded, not assumed.
struct SHLRAlgebra {
  ModulePtr L;
  FormalMultiderivation X;
  Report validation;
  bool truncated = false;  // the Jacobiator was cut off at the cap

  bool valid() const { return validation.ok(); }
  int cap() const { return X.cap; }
};

using SHLRPtr = std::shared_ptr<const SHLRAlgebra>;

// Validates (odd degree, X_0 = 0 by representation, symbols are derivations,
// Jacobiator zero within the cap) and records the outcome.
SHLRPtr make_shlr(FormalMultiderivation X);

// The obstruction (1/2)[X,X]; zero iff X is a valid structure within the cap.
FormalMultiderivation jacobiator(const FormalMultiderivation& X);

Report validate_structure(const FormalMultiderivation& X);

// Module of an L-infinity[1] algebra: the ground field with one generator
// per basis vector of V.
ModulePtr linfinity_module(std::vector<std::pair<std::string, int>> basis_of_V);

// Higher Chevalley-Eilenberg differential D_k of A-valued forms, written from
// the anchors-and-brackets formula (the eta route is independent and serves
// as a cross-check in the tests). Throws unless the structure validated.
Form ce_component(const SHLRAlgebra& S, int k, const Form& w);
std::map<int, Form> ce_differential(const SHLRAlgebra& S, const Form& w);

/// Family mu_k : V^{x(k-1)} x W -> W, graded symmetric in the V arguments.
struct ModuleMapFamily {
  SpacePtr V;
  SpacePtr W;
  int degree = 1;
  int cap = 4;
  std::map<int, std::map<std::pair<std::vector<int>, int>, Element>> comp;

  void set(int k, std::vector<int> vkey, int w, Element value);
  Element eval_basis(int k, const std::vector<int>& vkey, int w) const;
  Element eval(int k, std::span<const Element> vargs, const Element& w) const;
};

// Left module axiom residuals; empty report iff mu is a module
// structure over the brackets, within the cap.
Report check_linf_module(const std::map<int, SymMultiMap>& lambda, const ModuleMapFamily& mu);
// Right module axiom residuals: the second summand enters with a
// minus sign.
Report check_right_linf_module(const std::map<int, SymMultiMap>& lambda,
                               const ModuleMapFamily& rho);

// The brackets of a structure over the ground field as plain symmetric maps
// on the underlying K-space.
std::map<int, SymMultiMap> brackets_as_symmaps(const SHLRAlgebra& S);

/// Classical graded skew-symmetric multilinear map, stored on ascending
/// basis tuples; a repeated even index forces zero. Evaluation picks up
/// sign(perm) times the Koszul sign.
struct SkewMultiMap {
  int arity = 0;
  int map_degree = 0;
  SpacePtr domain;
  SpacePtr codomain;
  std::map<std::vector<int>, Element> table;

  static SkewMultiMap zero(int arity, int map_degree, SpacePtr dom, SpacePtr cod);
  void set(std::vector<int> key, Element value);
  Element eval_basis(const std::vector<int>& key) const;
  friend bool operator==(const SkewMultiMap& a, const SkewMultiMap& b);
};

/// Classical L-infinity data: skew brackets of degree 2-k on V.
struct ClassicalLInfinity {
  SpacePtr V;
  int cap = 4;
  std::map<int, SkewMultiMap> lambda;
};

// Decalage: shift every degree down by one and twist each bracket by the
// decalage sign; the result is a symmetric degree-1 structure over the
// ground field. Round trips bit-exactly with decalage_invert.
SHLRPtr decalage_convert(const ClassicalLInfinity& c);
ClassicalLInfinity decalage_invert(const SHLRAlgebra& s, SpacePtr V_unshifted);

/// P-infinity[1] structure on a finite-dimensional graded algebra: an odd
/// family of multiderivations with vanishing Jacobiator within the cap.
struct PInfinityAlgebra {
  AlgebraPtr P;
  int degree = 1;
  int cap = 4;
  std::map<int, AlgMultiderivation> lambda;
};

Report validate_pinfinity(const PInfinityAlgebra& p);

/// The P-infinity[1] structure nu(X) induces on the symmetric algebra of L,
/// certified on tensors of total degree within the window.
struct InducedPInfinity {
  SHLRPtr base;
  int window = 3;
  Report validation;

  // Lambda_k on plain tensors, lazily through nu.
  Tensor bracket(int k, std::span<const Tensor> args) const;
};

InducedPInfinity induced_pinfinity(const SHLRPtr& S, int window);

/// Unshifted P-infinity data for the Kahler construction: graded skew
/// multiderivations Lambda_k of degree k-2 on a presented finite-dimensional
/// algebra.
struct PInfinityInput {
  FreeCommPresentation P;
  int cap = 4;
  std::map<int, SkewMultiMap> lambda;
};

/// Kahler differentials and the induced structure on (P, Omega^1(P)):
/// Omega^1 = P (x) P[-1] / (1(x)ab - (-1)^a a(x)b - (-1)^{(a+1)b} b(x)a),
/// d a = [1 (x) a],
///   X(df_1,...,df_k)            = dec(f) d Lambda_k(f_1,...,f_k)
///   sigma(df_1,...,df_{k-1}|f)  = dec(f_1..f_{k-1}) Lambda_k(f_1,...,f_{k-1},f).
/// The structure degree works out to -1 under these conventions; all sign
/// formulas only consume parities, so validation applies unchanged.
struct KahlerResult {
  SHLRPtr S;            // null when degenerate
  ModulePtr omega1;     // free on d(generator) classes
  bool degenerate = false;
  std::string note;     // why, when degenerate
  int quotient_dim = 0;
  std::vector<Element> d;  // d of each algebra basis element, in omega1
};

KahlerResult kahler_lr(const PInfinityInput& in, int cap);

}  // namespace shlr
