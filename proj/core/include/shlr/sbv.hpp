#pragma once

#include "shlr/conn.hpp"

namespace shlr {

/// Family of degree-1 operators square-summing to zero on a
/// finite-dimensional graded algebra; the matrix of each operator is stored
/// on the algebra basis. The order of each component is probed, never
/// assumed.
struct OperatorFamily {
  AlgebraPtr B;
  std::map<int, std::vector<Element>> ops;  // declared order -> columns

  Element apply(int k, const Element& x) const;
};

// square-zero family conditions: each op kills 1 and sum_{i+j=k} [op_i,op_j]
// vanishes for every k
Report check_bv(const OperatorFamily& F);

// Higher derived brackets Lambda_k(u_1,...,u_k) = [...[[op_k,u_1],u_2]...,u_k] 1
// from the graded family; requires check_bv to pass.
PInfinityAlgebra derived_brackets(const OperatorFamily& F, int cap);

// The same extraction from the single total operator op = sum op_k; these
// brackets differ from the graded ones in general.
std::map<int, SymMultiMap> derived_brackets_total(const OperatorFamily& F, int cap);

/// K-basis of the P-valued forms of arity <= max_arity.
struct FormWindow {
  ModulePtr L, P;
  int max_arity = 3;
  struct Item {
    int arity;
    std::vector<int> gens;
    int pk;
    int degree;
  };
  std::vector<Item> items;
  std::map<std::pair<std::vector<int>, int>, int> index;  // (gens, pk) -> item

  static FormWindow make(ModulePtr L, ModulePtr P, int max_arity);
  int dim() const { return static_cast<int>(items.size()); }
  Form form_of(int item) const;
  // coords += scale * f; entries above the window are dropped when truncate
  // is set and rejected otherwise
  void accumulate(const Form& f, std::vector<Rat>& coords, const Rat& scale,
                  bool truncate) const;
  RatMatrix matrix_of(const std::function<Form(const Form&)>& op, bool truncate) const;
};

/// K-basis of the tensors of layer <= max_layer.
struct TensorWindow {
  ModulePtr L, Q;
  int max_layer = 3;
  std::vector<Tensor::Key> items;
  std::map<Tensor::Key, int> index;

  static TensorWindow make(ModulePtr L, ModulePtr Q, int max_layer);
  int dim() const { return static_cast<int>(items.size()); }
  int item_degree(int i) const;
  int item_layer(int i) const { return static_cast<int>(items[i].gens.size()); }
  Tensor tensor_of(int item) const;
  void accumulate(const Tensor& t, std::vector<Rat>& coords, const Rat& scale,
                  bool truncate) const;
  RatMatrix matrix_of(const std::function<Tensor(const Tensor&)>& op, bool truncate) const;
};

// Windowed matrices of the calculus operators. All of them truncate above
// the window; callers compare only on inputs whose excursions stay inside.
RatMatrix dnabla_matrix(const LeftConnection& C, int k, const FormWindow& win);
RatMatrix insertion_matrix(const Tensor& u, const FormWindow& win);
RatMatrix ddelta_matrix(const RightConnection& C, int k, const TensorWindow& win);
RatMatrix mu_matrix(const Tensor& u, const TensorWindow& win);

// Smallest k <= bound such that every (k+1)-fold commutator with the given
// multiplication operators vanishes; bound+1 when the probe bound is
// exceeded. Multiplication operators come with their degrees. When a column
// mask is given, only the masked columns enter the zero tests: truncated
// windows corrupt the columns whose excursions leave them, and those columns
// must not decide the order.
int diff_order(const RatMatrix& op, int op_degree,
               const std::vector<std::pair<RatMatrix, int>>& mults, int bound,
               const std::vector<char>* check_cols = nullptr);

// [...[[op, m_1], m_2]..., m_n] as matrices, tracking degrees.
RatMatrix nested_commutator(RatMatrix op, int op_degree,
                            const std::vector<std::pair<RatMatrix, int>>& ms);

// The k-fold nested commutator [...[[D_k, i_{u_1}], i_{u_2}]...,i_{u_k}]
// applied to a form; equals -(-1)^k i_{bracket of the u's} of it.
Form nested_comm_left(const LeftConnection& C, int k, std::span<const Tensor> us, const Form& W);

// Its mirror [...[[D_k, mu_{u_1}],...], mu_{u_k}] on tensors; equals
// multiplication by the bracket of the u's.
Tensor nested_comm_right(const RightConnection& C, int k, std::span<const Tensor> us,
                         const Tensor& U);

// Homotopy Lie derivative L_k(u_1,...,u_{k-1}|W) =
// -(-1)^k [...[[D_k, i_{u_1}], i_{u_2}]...,i_{u_{k-1}}] W, evaluated exactly
// on forms (no window).
Form lie_derivative(const LeftConnection& C, int k, std::span<const Tensor> us, const Form& W);

// Right action R_k(u_1,...,u_{k-1}|U) = [...[[D_k, mu_{u_1}],...],mu_{u_{k-1}}] U.
Tensor right_action(const RightConnection& C, int k, std::span<const Tensor> us,
                    const Tensor& U);

// The right module structure a flat connection induces on the tensors:
// rho_k = -(-1)^k R_k. The normalization mirrors the explicit -(-1)^k in the
// homotopy Lie derivative; with it the flat case satisfies the right module
// axioms on the window.
Tensor right_module_action(const RightConnection& C, int k, std::span<const Tensor> us,
                           const Tensor& U);

/// The Rinehart family of a flat right connection on Q = A, materialized on a
/// tensor window: a square-zero family of order-k operators generating the
/// induced brackets.
struct WindowedBV {
  TensorWindow win;
  std::map<int, RatMatrix> ops;  // k -> matrix of D_k
  Report eq_bv;                  // family conditions within the window
};

// Requires Q = A (rank one, degree 0) and a flat connection.
WindowedBV bv_from_right_module(const RightConnection& C, int max_layer);

// Derived brackets of a windowed family, evaluated at 1: returns the bracket
// of the given basis tensors.
Tensor windowed_derived_bracket(const WindowedBV& B, int k, std::span<const Tensor> us);

/// One (arity, degree) cell of the windowed Chevalley-Eilenberg cohomology.
/// The differential matrices are kept so an independent rank oracle can be run
/// on the same data. Cells whose outgoing differential leaves the declared
/// window are reported as incomplete.
struct CohomologyCell {
  int arity = 0;
  int degree = 0;
  int space_dim = 0;
  int h_dim = 0;
  bool complete = true;
  RatMatrix d_out;  // cell -> next cell
  RatMatrix d_in;   // previous cell -> cell
};

// Cohomology of D (A-valued forms) or D^nabla (P-valued, when a connection is
// given) on the window. Requires a flat single-arity structure: the cells are
// only well defined when one bracket arity is active.
std::vector<CohomologyCell> ce_cohomology(const SHLRPtr& S,
                                          const std::optional<LeftConnection>& C, int arity_max,
                                          int degree_bound);

}  // namespace shlr
