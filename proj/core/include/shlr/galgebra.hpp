#pragma once

#include <compare>

#include "shlr/glinear.hpp"

namespace shlr {

struct CheckFailure {
  std::string check;
  std::string where;
  std::string lhs;
  std::string rhs;
};

struct Report {
  std::vector<CheckFailure> failures;
  bool ok() const { return failures.empty(); }
  void fail(std::string check, std::string where, std::string lhs, std::string rhs);
  std::string str() const;
};

/// Associative, graded commutative, unital algebra presented by structure
/// constants. Graded commutativity holds because the product is stored as a
/// graded symmetric map.
struct GradedAlgebra {
  SpacePtr space;
  SymMultiMap product;  // arity 2, degree 0
  Element unit;

  // Index of the unit in the basis; the unit is required to be a single
  // degree-0 basis vector with coefficient 1.
  int unit_index = 0;

  GradedAlgebra(SpacePtr s, SymMultiMap p, Element u)
      : space(std::move(s)), product(std::move(p)), unit(std::move(u)) {}

  Element mul(const Element& a, const Element& b) const;
  Element mul_basis(int i, int j) const { return product.eval_basis({i, j}); }
  bool is_unit(const Element& a) const { return a == unit; }

  static std::shared_ptr<const GradedAlgebra> make(SpacePtr space, SymMultiMap product,
                                                   Element unit);
  // The ground field as a one-dimensional algebra.
  static std::shared_ptr<const GradedAlgebra> ground_field();
};

using AlgebraPtr = std::shared_ptr<const GradedAlgebra>;

bool same_algebra(const AlgebraPtr& a, const AlgebraPtr& b);

// Free graded commutative algebra on named generators, truncated to words of
// length <= max_word_len (odd generators square to zero regardless). Basis
// monomials are named "1", "x", "x.y", ... The presentation keeps the word of
// each basis monomial so derivations can be extended from generator values.
struct FreeCommPresentation {
  AlgebraPtr algebra;
  std::vector<std::pair<std::string, int>> gens;
  std::vector<std::vector<int>> monomials;  // word of each basis element
  // basis index of a single generator
  int gen_index(int g) const;
};

FreeCommPresentation free_graded_commutative_presented(
    const std::vector<std::pair<std::string, int>>& gens, int max_word_len);

AlgebraPtr free_graded_commutative(const std::vector<std::pair<std::string, int>>& gens,
                                   int max_word_len);

// Lists every failed associativity or unit triple.
Report validate_algebra(const GradedAlgebra& A);

/// Free finitely generated module over a graded algebra, presented by
/// generator degrees. The underlying K-space has basis
/// (algebra basis element) x (generator), named "a*g".
struct FreeModule {
  AlgebraPtr algebra;
  std::vector<std::string> gen_names;
  std::vector<int> gen_degrees;
  SpacePtr kspace;

  int ngens() const { return static_cast<int>(gen_names.size()); }
  int kindex(int a, int g) const { return a * ngens() + g; }
  int a_of(int i) const { return i / ngens(); }
  int g_of(int i) const { return i % ngens(); }
  int gen_degree(int g) const { return gen_degrees[g]; }

  Element gen(int g) const;  // 1*g
  // a . m, no Koszul sign: the algebra acts from the left.
  Element act(const Element& a, const Element& m) const;
  Element act_basis(int a_idx, const Element& m) const;
  // Unique decomposition m = sum_g coord_g . gen_g over the algebra.
  std::vector<Element> alg_coords(const Element& m) const;

  static std::shared_ptr<const FreeModule> make(AlgebraPtr algebra,
                                                std::vector<std::pair<std::string, int>> gens);
  // The algebra as the rank-one free module on a degree-0 generator "1".
  static std::shared_ptr<const FreeModule> algebra_as_module(AlgebraPtr algebra);
};

using ModulePtr = std::shared_ptr<const FreeModule>;

bool same_module(const ModulePtr& a, const ModulePtr& b);

// Convert between elements of algebra_as_module(A) and of A's own space.
Element to_algebra(const FreeModule& rank_one, const Element& m);
Element from_algebra(const FreeModule& rank_one, const Element& a);

/// Symmetric P-valued form on a free module L, stored on generator tuples.
/// A-multilinearity defines the evaluation on arbitrary module elements.
struct Form {
  ModulePtr L;  // domain
  ModulePtr P;  // values
  int arity = 0;
  int degree = 0;  // total degree as a map
  std::map<std::vector<int>, Element> table;  // sorted generator tuples -> P element

  static Form zero(ModulePtr L, ModulePtr P, int arity, int degree);
  // A 0-form is an element of P.
  static Form from_value(ModulePtr L, ModulePtr P, const Element& value);

  bool is_zero() const { return table.empty(); }
  void set(std::vector<int> key, Element value);
  void add(std::vector<int> key, Element value);
  Element eval_gens(const std::vector<int>& key) const;
  // Full A-multilinear evaluation on module elements.
  Element eval(std::span<const Element> args) const;

  Form& operator+=(const Form& o);
  Form& operator-=(const Form& o);
  Form scaled(const Rat& c) const;
  friend bool operator==(const Form& a, const Form& b);
  std::string str() const;
};

// Graded commutative product of forms, Appendix-style unshuffle sum:
// (w w')(x_1,...,x_{k+k'}) = sum alpha(s,x) (-1)^{w' (x_{s(1)}+...+x_{s(k)})}
//   w(x_{s(1)},...) w'(x_{s(k+1)},...).
// `w` must be A-valued; also serves as the module structure mu_w on P-valued
// forms.
Form form_product(const Form& w, const Form& W);

// Same formula with an explicit bilinear pairing of value modules, used when
// the values multiply through an algebra extension action.
Form form_product_with(const Form& w, const Form& W,
                       const std::function<Element(const Element&, const Element&)>& pair,
                       ModulePtr out_values);

/// Element of S_A(L) tensor_A Q on the K-basis
/// (algebra basis) x (generator multiset) x (Q generator). Odd generators
/// never repeat in a key.
struct Tensor {
  struct Key {
    int a = 0;
    std::vector<int> gens;  // ascending, repeats allowed for even generators
    int q = 0;
    auto operator<=>(const Key&) const = default;
  };

  ModulePtr L;
  ModulePtr Q;
  std::map<Key, Rat> coeffs;

  static Tensor zero(ModulePtr L, ModulePtr Q);
  // 1 tensor q_gen in S^0 tensor Q.
  static Tensor unit(ModulePtr L, ModulePtr Q, int q_gen);
  // g_{i1}...g_{ik} tensor q_gen, key given in any order.
  static Tensor monomial(ModulePtr L, ModulePtr Q, std::vector<int> gens, int q_gen);

  bool is_zero() const { return coeffs.empty(); }
  void add_key(Key k, const Rat& c);  // sorts gens with the Koszul sign
  Tensor& operator+=(const Tensor& o);
  Tensor& operator-=(const Tensor& o);
  Tensor scaled(const Rat& c) const;
  friend bool operator==(const Tensor& a, const Tensor& b);

  int key_degree(const Key& k) const;
  // All keys share one generator-multiset size; nullopt for mixed or zero.
  std::optional<int> layer() const;
  std::optional<int> degree() const;
  std::string str() const;
};

// a . U, algebra coefficient multiplying the leading factor.
Tensor tensor_act(const Element& a, const Tensor& U);
// Left symmetric multiplication by one generator: g . U.
Tensor tensor_mul_gen(const Tensor& U, int gen);
// Left multiplication by a module element x in L: x . U.
Tensor tensor_mul_elem(const Element& x, const Tensor& U);
// mu_u U: left symmetric product by a pure tensor u (Q of u must be trivial).
Tensor tensor_product(const Tensor& u, const Tensor& U);
// Embed an element of L as a layer-1 tensor with trivial coefficient.
Tensor tensor_of_elem(ModulePtr L, const Element& x, ModulePtr Q_trivial);
// gens tensor q for a general Q element; the coefficient of q crosses the
// generator factors on its way to the front.
Tensor tensor_monomial_q(ModulePtr L, ModulePtr Q, const std::vector<int>& gens,
                         const Element& q_elt);

// i_u W, insertion of a tensor into a form: for u = z_1...z_k,
// (i_u W)(x_1,...,x_{l-k}) = (-1)^{u W} W(z_1,...,z_k,x_1,...,x_{l-k}).
// Inserting below the form arity gives the zero form.
Form insert(const Tensor& u, const Form& W);

// tensor_mu: the Sym_A(L,A)-module structure i_w U on tensors: w pairs with
// the trailing k factors after an unshuffle, picking up
// (-1)^{w (leading factor degrees)}. Below the layer it gives zero.
Tensor tensor_mu(const Form& w, const Tensor& U);

}  // namespace shlr
