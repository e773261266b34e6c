#include "shlr/sbv.hpp"

#include <algorithm>
#include <stdexcept>

namespace shlr {

Element OperatorFamily::apply(int k, const Element& x) const {
  auto it = ops.find(k);
  Element out = Element::zero(B->space);
  if (it == ops.end()) return out;
  for (const auto& [i, c] : x.coeffs()) out += it->second[i].scaled(c);
  return out;
}

Report check_bv(const OperatorFamily& F) {
  Report rep;
  const int n = F.B->space->dim();
  for (const auto& [k, cols] : F.ops) {
    Element at_unit = cols[F.B->unit_index];
    if (!at_unit.is_zero())
      rep.fail("eq-bv", "op_" + std::to_string(k) + "(1)", at_unit.str(), "0");
  }
  int maxk = 0;
  for (const auto& [k, cols] : F.ops) maxk = std::max(maxk, k);
  for (int m = 2; m <= 2 * maxk; ++m) {
    std::vector<Element> acc(n, Element::zero(F.B->space));
    bool any = false;
    for (const auto& [i, ci] : F.ops)
      for (const auto& [j, cj] : F.ops) {
        if (i + j != m) continue;
        any = true;
        for (int col = 0; col < n; ++col) {
          acc[col] += F.apply(i, cj[col]);
          acc[col] += F.apply(j, ci[col]);
        }
      }
    if (!any) continue;
    for (int col = 0; col < n; ++col)
      if (!acc[col].is_zero())
        rep.fail("eq-bv", "sum [op_i, op_j], i+j=" + std::to_string(m) + " at " +
                              F.B->space->names[col],
                 acc[col].str(), "0");
  }
  return rep;
}

namespace {

// [...[[op, mu_{u_1}], mu_{u_2}]...,mu_{u_n}] applied to x, recursively.
Element nested_mult_comm(const GradedAlgebra& B,
                         const std::function<Element(const Element&)>& op, int op_deg,
                         std::span<const Element> us, const Element& x) {
  if (us.empty()) return op(x);
  const Element& u = us.back();
  auto rest = us.first(us.size() - 1);
  int inner_deg = op_deg;
  for (const Element& v : rest) inner_deg += v.degree().value_or(0);
  const int pu = parity(u.degree().value_or(0));
  Element lhs = nested_mult_comm(B, op, op_deg, rest, B.mul(u, x));
  Element rhs = B.mul(u, nested_mult_comm(B, op, op_deg, rest, x));
  return lhs - rhs.scaled(Rat(sign_pow(parity(inner_deg) & pu)));
}

}  // namespace

PInfinityAlgebra derived_brackets(const OperatorFamily& F, int cap) {
  Report bv = check_bv(F);
  if (!bv.ok())
    throw std::invalid_argument("derived_brackets: square-zero family conditions fail:\n" +
                                bv.str());
  PInfinityAlgebra out;
  out.P = F.B;
  out.degree = 1;
  out.cap = cap;
  const int n = F.B->space->dim();
  for (const auto& [k, cols] : F.ops) {
    if (k > cap) continue;
    auto op = [&](const Element& x) { return F.apply(k, x); };
    SymMultiMap lk = SymMultiMap::zero(k, 1, F.B->space, F.B->space);
    for_each_sorted_tuple(n, k, [&](const std::vector<int>& key) {
      if (has_odd_repeat(*F.B->space, key)) return;
      std::vector<Element> us;
      for (int i : key) us.push_back(Element::basis(F.B->space, i));
      lk.set(key, nested_mult_comm(*F.B, op, 1, us, F.B->unit));
    });
    if (!lk.is_zero()) out.lambda.emplace(k, AlgMultiderivation{std::move(lk)});
  }
  return out;
}

std::map<int, SymMultiMap> derived_brackets_total(const OperatorFamily& F, int cap) {
  std::map<int, SymMultiMap> out;
  const int n = F.B->space->dim();
  auto op = [&](const Element& x) {
    Element v = Element::zero(F.B->space);
    for (const auto& [k, cols] : F.ops) v += F.apply(k, x);
    return v;
  };
  for (int k = 1; k <= cap; ++k) {
    SymMultiMap lk = SymMultiMap::zero(k, 1, F.B->space, F.B->space);
    for_each_sorted_tuple(n, k, [&](const std::vector<int>& key) {
      if (has_odd_repeat(*F.B->space, key)) return;
      std::vector<Element> us;
      for (int i : key) us.push_back(Element::basis(F.B->space, i));
      lk.set(key, nested_mult_comm(*F.B, op, 1, us, F.B->unit));
    });
    if (!lk.is_zero()) out.emplace(k, std::move(lk));
  }
  return out;
}

FormWindow FormWindow::make(ModulePtr L, ModulePtr P, int max_arity) {
  FormWindow w;
  w.L = std::move(L);
  w.P = std::move(P);
  w.max_arity = max_arity;
  for (int ar = 0; ar <= max_arity; ++ar) {
    for_each_sorted_tuple(w.L->ngens(), ar, [&](const std::vector<int>& gens) {
      for (size_t i = 1; i < gens.size(); ++i)
        if (gens[i] == gens[i - 1] && parity(w.L->gen_degrees[gens[i]])) return;
      for (int pk = 0; pk < w.P->kspace->dim(); ++pk) {
        int deg = w.P->kspace->degree(pk);
        for (int g : gens) deg -= w.L->gen_degrees[g];
        w.index.emplace(std::make_pair(gens, pk), static_cast<int>(w.items.size()));
        w.items.push_back({ar, gens, pk, deg});
      }
    });
  }
  return w;
}

Form FormWindow::form_of(int item) const {
  const Item& it = items[item];
  Form f = Form::zero(L, P, it.arity, it.degree);
  f.set(it.gens, Element::basis(P->kspace, it.pk));
  return f;
}

void FormWindow::accumulate(const Form& f, std::vector<Rat>& coords, const Rat& scale,
                            bool truncate) const {
  if (f.arity > max_arity) {
    if (truncate) return;
    throw std::out_of_range("FormWindow: form arity above the window");
  }
  for (const auto& [gens, v] : f.table)
    for (const auto& [pk, c] : v.coeffs()) {
      auto it = index.find({gens, pk});
      if (it == index.end()) throw std::logic_error("FormWindow: missing item");
      coords[it->second] += scale * c;
    }
}

RatMatrix FormWindow::matrix_of(const std::function<Form(const Form&)>& op,
                                bool truncate) const {
  RatMatrix m(dim(), dim());
  for (int j = 0; j < dim(); ++j) {
    Form img = op(form_of(j));
    std::vector<Rat> col(dim());
    accumulate(img, col, Rat(1), truncate);
    for (int i = 0; i < dim(); ++i) m.at(i, j) = col[i];
  }
  return m;
}

TensorWindow TensorWindow::make(ModulePtr L, ModulePtr Q, int max_layer) {
  TensorWindow w;
  w.L = std::move(L);
  w.Q = std::move(Q);
  w.max_layer = max_layer;
  for (int layer = 0; layer <= max_layer; ++layer) {
    for_each_sorted_tuple(w.L->ngens(), layer, [&](const std::vector<int>& gens) {
      for (size_t i = 1; i < gens.size(); ++i)
        if (gens[i] == gens[i - 1] && parity(w.L->gen_degrees[gens[i]])) return;
      for (int a = 0; a < w.L->algebra->space->dim(); ++a)
        for (int q = 0; q < w.Q->ngens(); ++q) {
          Tensor::Key key{a, gens, q};
          w.index.emplace(key, static_cast<int>(w.items.size()));
          w.items.push_back(std::move(key));
        }
    });
  }
  return w;
}

int TensorWindow::item_degree(int i) const {
  const Tensor::Key& k = items[i];
  int d = L->algebra->space->degree(k.a) + Q->gen_degrees[k.q];
  for (int g : k.gens) d += L->gen_degrees[g];
  return d;
}

Tensor TensorWindow::tensor_of(int item) const {
  Tensor t = Tensor::zero(L, Q);
  t.add_key(items[item], Rat(1));
  return t;
}

void TensorWindow::accumulate(const Tensor& t, std::vector<Rat>& coords, const Rat& scale,
                              bool truncate) const {
  for (const auto& [key, c] : t.coeffs) {
    auto it = index.find(key);
    if (it == index.end()) {
      if (static_cast<int>(key.gens.size()) > max_layer && truncate) continue;
      throw std::out_of_range("TensorWindow: key outside the window");
    }
    coords[it->second] += scale * c;
  }
}

RatMatrix TensorWindow::matrix_of(const std::function<Tensor(const Tensor&)>& op,
                                  bool truncate) const {
  RatMatrix m(dim(), dim());
  for (int j = 0; j < dim(); ++j) {
    Tensor img = op(tensor_of(j));
    std::vector<Rat> col(dim());
    accumulate(img, col, Rat(1), truncate);
    for (int i = 0; i < dim(); ++i) m.at(i, j) = col[i];
  }
  return m;
}

RatMatrix dnabla_matrix(const LeftConnection& C, int k, const FormWindow& win) {
  return win.matrix_of([&](const Form& f) { return ce_module_component(C, k, f); }, true);
}

RatMatrix insertion_matrix(const Tensor& u, const FormWindow& win) {
  return win.matrix_of([&](const Form& f) { return insert(u, f); }, true);
}

RatMatrix ddelta_matrix(const RightConnection& C, int k, const TensorWindow& win) {
  return win.matrix_of([&](const Tensor& t) { return rinehart_component(C, k, t); }, true);
}

RatMatrix mu_matrix(const Tensor& u, const TensorWindow& win) {
  return win.matrix_of([&](const Tensor& t) { return tensor_product(u, t); }, true);
}

int diff_order(const RatMatrix& op, int op_degree,
               const std::vector<std::pair<RatMatrix, int>>& mults, int bound,
               const std::vector<char>* check_cols) {
  // multiplication operators of a graded commutative algebra commute, so the
  // nested commutator is symmetric in them: multisets of probes suffice
  struct Node {
    RatMatrix m;
    int deg;
    int last;  // first mult index allowed next
  };
  auto masked_zero = [&](const RatMatrix& m) {
    if (!check_cols) return m.is_zero();
    for (int c = 0; c < m.cols; ++c) {
      if (!(*check_cols)[c]) continue;
      for (int r = 0; r < m.rows; ++r)
        if (!m.at(r, c).is_zero()) return false;
    }
    return true;
  };
  std::vector<Node> level = {{op, op_degree, 0}};
  for (int k = 0; k <= bound; ++k) {
    std::vector<Node> next;
    bool all_zero = true;
    for (const Node& nd : level)
      for (size_t mi = nd.last; mi < mults.size(); ++mi) {
        RatMatrix c = graded_commutator(nd.m, nd.deg, mults[mi].first, mults[mi].second);
        if (!masked_zero(c)) all_zero = false;
        if (!c.is_zero())
          next.push_back({std::move(c), nd.deg + mults[mi].second, static_cast<int>(mi)});
      }
    if (all_zero) return k;
    level = std::move(next);
  }
  return bound + 1;
}

RatMatrix nested_commutator(RatMatrix op, int op_degree,
                            const std::vector<std::pair<RatMatrix, int>>& ms) {
  RatMatrix cur = std::move(op);
  int deg = op_degree;
  for (const auto& [m, d] : ms) {
    cur = graded_commutator(cur, deg, m, d);
    deg += d;
  }
  return cur;
}

namespace {

Form nested_insert_comm(const LeftConnection& C, int k, std::span<const Tensor> us,
                        const Form& W) {
  if (us.empty()) return ce_module_component(C, k, W);
  const Tensor& u = us.back();
  auto rest = us.first(us.size() - 1);
  int inner_deg = C.F.degree;
  for (const Tensor& v : rest) inner_deg += v.degree().value_or(0);
  const int pu = parity(u.degree().value_or(0));
  Form lhs = nested_insert_comm(C, k, rest, insert(u, W));
  Form rhs = insert(u, nested_insert_comm(C, k, rest, W));
  lhs -= rhs.scaled(Rat(sign_pow(parity(inner_deg) & pu)));
  return lhs;
}

Tensor nested_mu_comm(const RightConnection& C, int k, std::span<const Tensor> us,
                      const Tensor& U) {
  if (us.empty()) return rinehart_component(C, k, U);
  const Tensor& u = us.back();
  auto rest = us.first(us.size() - 1);
  int inner_deg = C.F.degree;
  for (const Tensor& v : rest) inner_deg += v.degree().value_or(0);
  const int pu = parity(u.degree().value_or(0));
  Tensor lhs = nested_mu_comm(C, k, rest, tensor_product(u, U));
  Tensor rhs = tensor_product(u, nested_mu_comm(C, k, rest, U));
  lhs -= rhs.scaled(Rat(sign_pow(parity(inner_deg) & pu)));
  return lhs;
}

}  // namespace

Form nested_comm_left(const LeftConnection& C, int k, std::span<const Tensor> us,
                      const Form& W) {
  if (static_cast<int>(us.size()) != k)
    throw std::invalid_argument("nested_comm_left: expected k tensors");
  return nested_insert_comm(C, k, us, W);
}

Tensor nested_comm_right(const RightConnection& C, int k, std::span<const Tensor> us,
                         const Tensor& U) {
  if (static_cast<int>(us.size()) != k)
    throw std::invalid_argument("nested_comm_right: expected k tensors");
  return nested_mu_comm(C, k, us, U);
}

Form lie_derivative(const LeftConnection& C, int k, std::span<const Tensor> us, const Form& W) {
  if (static_cast<int>(us.size()) != k - 1)
    throw std::invalid_argument("lie_derivative: expected k-1 tensors");
  Form out = nested_insert_comm(C, k, us, W);
  return out.scaled(Rat(-sign_pow(k)));
}

Tensor right_action(const RightConnection& C, int k, std::span<const Tensor> us,
                    const Tensor& U) {
  if (static_cast<int>(us.size()) != k - 1)
    throw std::invalid_argument("right_action: expected k-1 tensors");
  return nested_mu_comm(C, k, us, U);
}

Tensor right_module_action(const RightConnection& C, int k, std::span<const Tensor> us,
                           const Tensor& U) {
  return right_action(C, k, us, U).scaled(Rat(-sign_pow(k)));
}

WindowedBV bv_from_right_module(const RightConnection& C, int max_layer) {
  if (C.Q->ngens() != 1 || C.Q->gen_degrees[0] != 0)
    throw std::invalid_argument("bv_from_right_module: coefficients must be the algebra");
  if (!is_flat(C)) throw std::invalid_argument("bv_from_right_module: connection is not flat");
  WindowedBV out;
  out.win = TensorWindow::make(C.S->L, C.Q, max_layer);
  for (int k = 1; k <= C.F.cap; ++k) {
    if (!C.S->X.component(k) && !C.F.comp.count(k)) continue;
    RatMatrix m = ddelta_matrix(C, k, out.win);
    if (!m.is_zero()) out.ops.emplace(k, std::move(m));
  }
  // family conditions within the window: ops kill the unit tensor and the
  // graded squares cancel
  int unit_item = out.win.index.at(Tensor::Key{C.S->L->algebra->unit_index, {}, 0});
  for (const auto& [k, m] : out.ops) {
    bool zero = true;
    for (int r = 0; r < m.rows; ++r) zero &= m.at(r, unit_item).is_zero();
    if (!zero)
      out.eq_bv.fail("eq-bv", "D_" + std::to_string(k) + "(1)", "nonzero", "0");
  }
  int maxk = 0;
  for (const auto& [k, m] : out.ops) maxk = std::max(maxk, k);
  for (int s = 2; s <= 2 * maxk; ++s) {
    RatMatrix acc(out.win.dim(), out.win.dim());
    bool any = false;
    for (const auto& [i, mi] : out.ops)
      for (const auto& [j, mj] : out.ops) {
        if (i + j != s) continue;
        any = true;
        acc = acc + mi * mj + mj * mi;
      }
    if (any && !acc.is_zero())
      out.eq_bv.fail("eq-bv", "sum [D_i, D_j], i+j=" + std::to_string(s), "nonzero", "0");
  }
  return out;
}

std::vector<CohomologyCell> ce_cohomology(const SHLRPtr& S,
                                          const std::optional<LeftConnection>& C, int arity_max,
                                          int degree_bound) {
  if (!S->valid()) throw std::invalid_argument("ce_cohomology: structure is not flat");
  if (C && !is_flat(*C)) throw std::invalid_argument("ce_cohomology: connection is not flat");
  std::vector<int> arities;
  for (const auto& [k, comp] : S->X.comp) arities.push_back(k);
  if (C)
    for (const auto& [k, tab] : C->F.comp)
      if (std::find(arities.begin(), arities.end(), k) == arities.end()) arities.push_back(k);
  if (arities.size() > 1)
    throw std::invalid_argument(
        "ce_cohomology: per-cell dimensions need a single active bracket arity");
  const int k0 = arities.empty() ? 0 : arities.front();

  // the declared window is the hard boundary: cells whose outgoing
  // differential would land beyond it are computed against the truncation and
  // flagged incomplete
  ModulePtr P = C ? C->P : FreeModule::algebra_as_module(S->L->algebra);
  FormWindow win = FormWindow::make(S->L, P, arity_max);

  // cell items grouped by (arity, degree)
  std::map<std::pair<int, int>, std::vector<int>> cells;
  for (int i = 0; i < win.dim(); ++i) {
    const auto& it = win.items[i];
    cells[{it.arity, it.degree}].push_back(i);
  }

  auto apply_d = [&](const Form& f) -> Form {
    if (k0 == 0) return Form::zero(S->L, P, f.arity, f.degree + 1);
    if (C) return ce_module_component(*C, k0, f);
    return ce_component(*S, k0, f);
  };

  auto cell_matrix = [&](const std::vector<int>& from, const std::vector<int>& to) {
    RatMatrix m(static_cast<int>(to.size()), static_cast<int>(from.size()));
    for (size_t j = 0; j < from.size(); ++j) {
      Form img = apply_d(win.form_of(from[j]));
      std::vector<Rat> coords(win.dim());
      win.accumulate(img, coords, Rat(1), true);
      for (size_t i = 0; i < to.size(); ++i) m.at(static_cast<int>(i), static_cast<int>(j)) = coords[to[i]];
    }
    return m;
  };

  std::vector<CohomologyCell> out;
  for (const auto& [ad, items] : cells) {
    const auto [ar, deg] = ad;
    if (ar > arity_max || std::abs(deg) > degree_bound) continue;
    CohomologyCell cell;
    cell.arity = ar;
    cell.degree = deg;
    cell.space_dim = static_cast<int>(items.size());
    const int next_ar = ar + std::max(1, k0) - 1;
    const int prev_ar = ar - std::max(1, k0) + 1;
    std::vector<int> next_items, prev_items;
    if (auto it = cells.find({next_ar, deg + 1}); it != cells.end() && k0 != 0)
      next_items = it->second;
    if (auto it = cells.find({prev_ar, deg - 1}); it != cells.end() && k0 != 0 && prev_ar >= 0)
      prev_items = it->second;
    cell.complete = k0 == 0 || next_ar <= arity_max;
    cell.d_out = cell_matrix(items, next_items);
    cell.d_in = cell_matrix(prev_items, items);
    const int rank_out = rank_rref(cell.d_out);
    const int rank_in = rank_rref(cell.d_in);
    cell.h_dim = cell.space_dim - rank_out - rank_in;
    out.push_back(std::move(cell));
  }
  return out;
}

Tensor windowed_derived_bracket(const WindowedBV& B, int k, std::span<const Tensor> us) {
  auto it = B.ops.find(k);
  Tensor out = Tensor::zero(B.win.L, B.win.Q);
  if (it == B.ops.end()) return out;
  std::vector<std::pair<RatMatrix, int>> ms;
  for (const Tensor& u : us) {
    ms.emplace_back(B.win.matrix_of([&](const Tensor& t) { return tensor_product(u, t); }, true),
                    u.degree().value_or(0));
  }
  RatMatrix nc = nested_commutator(it->second, 1, ms);
  int unit_item = B.win.index.at(Tensor::Key{B.win.L->algebra->unit_index, {}, 0});
  for (int r = 0; r < nc.rows; ++r) {
    const Rat& c = nc.at(r, unit_item);
    if (!c.is_zero()) out.add_key(B.win.items[r], c);
  }
  return out;
}

}  // namespace shlr
