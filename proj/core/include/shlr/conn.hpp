#pragma once

#include "shlr/shlr_algebra.hpp"

namespace shlr {

/// K-linear graded operator on the underlying space of a free module.
struct LinOp {
  ModulePtr M;
  int degree = 0;
  std::vector<Element> cols;

  static LinOp zero(ModulePtr M, int degree);
  bool is_zero() const;
  Element apply(const Element& x) const;
  Element apply_basis(int i) const { return cols[i]; }

  LinOp& operator+=(const LinOp& o);
  LinOp scaled(const Rat& c) const;
  friend LinOp compose(const LinOp& a, const LinOp& b);  // a after b
  friend LinOp graded_commutator(const LinOp& a, const LinOp& b);
  friend bool operator==(const LinOp& a, const LinOp& b);
  std::string str() const;
};

// Operator with T(a p) = (-1)^{T a} a T(p) + sign sigma(a) p, from its values
// on the generators. sign is +1 for the left convention, -1 for the right.
LinOp subordinate_op(ModulePtr M, int op_degree, const std::vector<Element>& gen_values,
                     const AlgDerivation& symbol, bool right);

/// Arity-indexed family of operator-valued forms on L: component k is an
/// A-multilinear graded symmetric map on (k-1) slots valued in operators on
/// M. Slot coefficients pull out with the left Der^L convention or the right
/// Der^R one.
struct DerFormFamily {
  ModulePtr L;
  ModulePtr M;
  int degree = 1;
  bool right = false;
  int cap = 4;
  std::map<int, std::map<std::vector<int>, LinOp>> comp;

  static DerFormFamily zero(ModulePtr L, ModulePtr M, int degree, bool right, int cap);

  bool is_zero() const;
  void set(int k, std::vector<int> key, LinOp op);
  void add(int k, std::vector<int> key, const LinOp& op);
  LinOp eval_gens(int k, const std::vector<int>& key) const;
  LinOp eval(int k, std::span<const Element> args) const;
  Element apply(int k, std::span<const Element> args, const Element& p) const;

  DerFormFamily& operator+=(const DerFormFamily& o);
  DerFormFamily scaled(const Rat& c) const;
};

// Gerstenhaber-type composition (F o X)_m = sum F(X(...), ...).
DerFormFamily gerst_compose(const DerFormFamily& F, const FormalMultiderivation& X);
// (13)-type bracket with operator commutators.
DerFormFamily family_bracket(const DerFormFamily& F, const DerFormFamily& G);

/// Left connection along a SH LR algebra: degree-1 operator-valued forms
/// subordinate to the structure, symbol(nabla(key)) = sigma_X(key).
struct LeftConnection {
  SHLRPtr S;
  ModulePtr P;
  DerFormFamily F;  // right = false
};

/// Right connection: symbol(delta(key)) = -sigma_X(key).
struct RightConnection {
  SHLRPtr S;
  ModulePtr Q;
  DerFormFamily F;  // right = true
};

Report check_subordination(const LeftConnection& C);
Report check_subordination(const RightConnection& C);

// Curvature by the component formulas: two unshuffle sums, second one with a
// plus sign on the left and a minus sign on the right. Values are A-linear.
DerFormFamily left_curvature(const LeftConnection& C);
DerFormFamily right_curvature(const RightConnection& C);

// The same curvature as the second component of (1/2)[(X,F),(X,F)] computed
// through the pair brackets; the independent route for the two-route checks.
DerFormFamily left_curvature_via_bracket(const LeftConnection& C);
DerFormFamily right_curvature_via_bracket(const RightConnection& C);

bool is_flat(const LeftConnection& C);
bool is_flat(const RightConnection& C);

// [nabla, J] - J o X; identically zero over a valid base.
DerFormFamily bianchi_left_residual(const LeftConnection& C);
// [delta, J] + J o X.
DerFormFamily bianchi_right_residual(const RightConnection& C);

// Pair brackets on L(P) and R(Q): ((X,F),(Y,G)) -> ([X,Y], F o Y -+ G o X
// +- [F,G]).
struct ConnPair {
  FormalMultiderivation X;
  DerFormFamily F;
};
ConnPair lpair_bracket(const ConnPair& a, const ConnPair& b);
ConnPair rpair_bracket(const ConnPair& a, const ConnPair& b);

// D_k of P-valued forms (the module Chevalley-Eilenberg operator).
Form ce_module_component(const LeftConnection& C, int k, const Form& W);
// All components present in the structure or the connection.
std::map<int, Form> ce_module_operator(const LeftConnection& C, const Form& W);
// J_k of P-valued forms from the curvature family.
Form curvature_operator_component(const LeftConnection& C, const DerFormFamily& J, int k,
                                  const Form& W);

// D_k of tensors (the Rinehart operator); lowers the layer by k-1.
Tensor rinehart_component(const RightConnection& C, int k, const Tensor& U);
std::map<int, Tensor> rinehart_operator(const RightConnection& C, const Tensor& U);
Tensor curvature_operator_component(const RightConnection& C, const DerFormFamily& J, int k,
                                    const Tensor& U);

// eta^L: connections to operator families on P-valued forms, and back.
struct PFormOperator {
  ModulePtr L, P;
  int degree = 1;
  std::map<int, std::function<Form(const Form&)>> comp;
  Form apply(int k, const Form& W) const;
};
PFormOperator eta_L(const LeftConnection& C);
// nabla_D(key|p) = (-1)^{(key degrees) p} (D p)(key).
LeftConnection eta_L_inverse(const SHLRPtr& S, ModulePtr P, const PFormOperator& D);

struct TensorOperator {
  ModulePtr L, Q;
  int degree = 1;
  std::map<int, std::function<Tensor(const Tensor&)>> comp;
  Tensor apply(int k, const Tensor& U) const;
};
TensorOperator eta_R(const RightConnection& C);
// delta_D(key|q) = D(key-product (x) q).
RightConnection eta_R_inverse(const SHLRPtr& S, ModulePtr Q, const TensorOperator& D);

// Free tensor and Hom modules with element embeddings.
ModulePtr tensor_module(const ModulePtr& P, const ModulePtr& P2);
Element tensor_elem(const ModulePtr& T, const ModulePtr& P, const ModulePtr& P2,
                    const Element& x, const Element& y);
ModulePtr hom_module(const ModulePtr& P, const ModulePtr& P2);
Element hom_apply(const ModulePtr& H, const ModulePtr& P, const ModulePtr& P2,
                  const Element& phi, const Element& p);
Element hom_from_gen_values(const ModulePtr& H, const ModulePtr& P, const ModulePtr& P2,
                            const std::vector<Element>& values);

// Operations with connections.
LeftConnection tensor_left(const LeftConnection& C, const LeftConnection& C2);
LeftConnection hom_left(const LeftConnection& C, const LeftConnection& C2);
// Appendix-style composites of right (and mixed) connections:
LeftConnection right_tensor(const RightConnection& D, const RightConnection& D2);
LeftConnection right_hom(const RightConnection& D, const RightConnection& D2);
RightConnection diamond(const LeftConnection& C, const RightConnection& D);        // P (x) Q
RightConnection diamond_hom_pq(const LeftConnection& C, const RightConnection& D);  // Hom(P,Q)
RightConnection diamond_hom_qp(const RightConnection& D, const LeftConnection& C);  // Hom(Q,P)

/// Graded algebra extension A in script-A, presented as a free A-module with
/// a distinguished degree-0 generator acting as the unit.
struct AlgebraExtension {
  AlgebraPtr base;
  ModulePtr module;
  AlgebraPtr algebra;  // product on the same K-space as module->kspace
  int one_gen = 0;
};

AlgebraExtension extension_from_gen_products(
    AlgebraPtr base, const std::vector<std::pair<std::string, int>>& gens, int one_gen,
    const std::map<std::pair<int, int>, Element>& gen_products);

// The embedding a -> a . 1 of the base into the extension.
Element extension_embed(const AlgebraExtension& E, const Element& a);

// The connection values must be derivations of the extension algebra.
Report check_action(const AlgebraExtension& E, const LeftConnection& C);

// The transformation structure on (script-A, script-A (x)_A L) induced by an
// action; refuses a non-flat pre-action.
SHLRPtr transformation_lr(const AlgebraExtension& E, const LeftConnection& action);

/// Module over the extension that is simultaneously a free module over the
/// base, with the two coordinatizations identified.
struct ExtModule {
  AlgebraExtension ext;
  std::vector<std::pair<std::string, int>> pgens;
  ModulePtr over_ext;
  ModulePtr over_base;
};

ExtModule make_ext_module(const AlgebraExtension& E,
                          std::vector<std::pair<std::string, int>> pgens);
Element ext_to_base(const ExtModule& M, const Element& x);
Element base_to_ext(const ExtModule& M, const Element& x);
// f . p through the extension coordinates.
Element ext_act(const ExtModule& M, const Element& f, const Element& p_over_base);

Report check_derivative_rep_left(const ExtModule& M, const LeftConnection& Cp,
                                 const LeftConnection& action);
Report check_derivative_rep_right(const ExtModule& M, const RightConnection& Dq,
                                  const LeftConnection& action);

// Extension to an (ext, ext (x) L)-connection and restriction back; the two
// are mutually inverse on derivative pre-representations.
LeftConnection extend_rep_left(const ExtModule& M, const SHLRPtr& St, const LeftConnection& Cp);
LeftConnection restrict_rep_left(const ExtModule& M, const SHLRPtr& Sbase,
                                 const LeftConnection& action, const LeftConnection& Cext);
RightConnection extend_rep_right(const ExtModule& M, const SHLRPtr& St,
                                 const RightConnection& Dq);
RightConnection restrict_rep_right(const ExtModule& M, const SHLRPtr& Sbase,
                                   const LeftConnection& action, const RightConnection& Dext);

}  // namespace shlr
