#pragma once

#include "shlr/galgebra.hpp"

namespace shlr {

/// Graded K-linear operator on an algebra, stored as its full matrix on the
/// algebra basis. Used for derivation values of symbols and anchors.
struct AlgDerivation {
  AlgebraPtr algebra;
  int degree = 0;
  std::vector<Element> cols;  // cols[i] = D(e_i)

  static AlgDerivation zero(AlgebraPtr A, int degree);

  bool is_zero() const;
  Element apply(const Element& a) const;
  Element apply_basis(int i) const { return cols[i]; }

  AlgDerivation& operator+=(const AlgDerivation& o);
  AlgDerivation scaled(const Rat& c) const;
  // Left module structure: (a D)(x) = a D(x).
  AlgDerivation act_scale(const Element& a) const;
  friend AlgDerivation graded_commutator(const AlgDerivation& a, const AlgDerivation& b);
  friend bool operator==(const AlgDerivation& a, const AlgDerivation& b);
  std::string str() const;
};

// Leibniz rule on all basis pairs.
Report check_derivation(const AlgDerivation& D);

// Extend generator values to a derivation of a presented free commutative
// algebra by the Leibniz rule. gen_values[g] must be homogeneous of degree
// deg(gen g) + degree.
AlgDerivation derivation_from_gen_values(const FreeCommPresentation& P,
                                         const std::vector<Element>& gen_values, int degree);

/// Multiderivation of the algebra itself: a graded symmetric map A^k -> A
/// which is a derivation in each slot.
struct AlgMultiderivation {
  SymMultiMap map;  // domain = codomain = algebra space

  int arity() const { return map.arity; }
  int degree() const { return map.map_degree; }
};

Report check_alg_multiderivation(const GradedAlgebra& A, const AlgMultiderivation& H);

/// A-module multiderivation (X, sigma) of a free module L: sigma is an
/// A-multilinear Der(A)-valued (k-1)-form and X a graded symmetric
/// K-multilinear map L^k -> L obeying
///   X(x_1,...,x_{k-1}, a x_k) = sigma(x_1,...,x_{k-1}|a) x_k
///                               + (-1)^{(X + x_1 + ... + x_{k-1}) a} a X(...).
/// Both parts are stored on generator tuples; the Leibniz rule defines the
/// values everywhere else.
struct ModMultiderivation {
  ModulePtr L;
  int arity = 1;
  int degree = 0;
  std::map<std::vector<int>, Element> x_table;         // gen k-tuples -> L element
  std::map<std::vector<int>, AlgDerivation> s_table;   // gen (k-1)-tuples -> Der A

  static ModMultiderivation zero(ModulePtr L, int arity, int degree);

  bool is_zero() const { return x_table.empty() && s_table.empty(); }
  void set_x(std::vector<int> key, Element value);
  void add_x(std::vector<int> key, const Element& value);
  void set_sigma(std::vector<int> key, AlgDerivation value);
  void add_sigma(std::vector<int> key, const AlgDerivation& value);

  Element x_eval_gens(const std::vector<int>& key) const;
  AlgDerivation sigma_eval_gens(const std::vector<int>& key) const;

  // Full evaluation on module elements via the Leibniz rule.
  Element x_eval(std::span<const Element> args) const;
  // A-multilinear evaluation of the symbol on module elements.
  AlgDerivation sigma_eval(std::span<const Element> args) const;
  Element sigma_at(std::span<const Element> args, const Element& a) const;

  ModMultiderivation& operator+=(const ModMultiderivation& o);
  ModMultiderivation scaled(const Rat& c) const;
  friend bool operator==(const ModMultiderivation& a, const ModMultiderivation& b);
};

// The symbol values must be genuine algebra derivations.
Report check_mder(const ModMultiderivation& X);

/// Formal sum X_1 + X_2 + ... of module multiderivations sharing one total
/// degree, truncated at an arity cap. Bracket components that would exceed
/// the cap are discarded and flagged.
struct FormalMultiderivation {
  ModulePtr L;
  int degree = 1;
  int cap = 4;
  bool truncated = false;
  std::map<int, ModMultiderivation> comp;

  static FormalMultiderivation zero(ModulePtr L, int degree, int cap);

  bool is_zero() const;
  void set_component(ModMultiderivation c);
  const ModMultiderivation* component(int k) const;

  FormalMultiderivation& operator+=(const FormalMultiderivation& o);
  FormalMultiderivation scaled(const Rat& c) const;
  friend bool operator==(const FormalMultiderivation& a, const FormalMultiderivation& b);
};

// Graded Lie bracket [X,Y] = ([X,Y]-part, sigma_X o Y - (-1)^{XY} sigma_Y o X
// + [sigma_X, sigma_Y]) with Gerstenhaber-type circle products.
FormalMultiderivation mder_bracket(const FormalMultiderivation& a,
                                   const FormalMultiderivation& b);

/// Arity-indexed family of operators on A-valued forms; the image of a
/// formal multiderivation under eta. Component k takes l-forms to
/// (l+k-1)-forms.
struct FormDerivation {
  ModulePtr L;
  ModulePtr A_mod;  // A as the rank-one module the forms take values in
  int degree = 1;
  std::map<int, std::function<Form(const Form&)>> comp;

  Form apply(int k, const Form& w) const;
  // Sum of all components applied to w (distinct arities collected separately
  // is meaningless for a single form; the components land in distinct
  // arities only when k differs, so the sum is returned per component).
  std::map<int, Form> apply_all(const Form& w) const;
};

// eta(X)(w) = sigma_X o w - (-1)^{X w} w o X.
FormDerivation eta(const FormalMultiderivation& X);

// Inverse of eta for free finitely generated L. Components up to the cap are
// read off D's action on 0- and 1-forms. Throws if some component fails the
// Leibniz rule on forms (checked on products of forms up to leibniz_arity).
FormalMultiderivation eta_inverse(const FormDerivation& D, ModulePtr L, int cap,
                                  int leibniz_arity = 2);

// nu(X): the unique extension of X_k to a k-entry multiderivation of the
// symmetric algebra of L. Arguments and value are tensors with trivial
// coefficients. Degree bookkeeping: layers l_1 x ... x l_k map to layer
// l_1 + ... + l_k - k + 1.
Tensor nu_apply(const FormalMultiderivation& X, int k, std::span<const Tensor> args);

}  // namespace shlr
