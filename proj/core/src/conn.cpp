#include "shlr/conn.hpp"

#include <algorithm>
#include <stdexcept>

namespace shlr {

namespace {

DegreeSeq gen_degs(const FreeModule& L, const std::vector<int>& key) {
  DegreeSeq d;
  d.reserve(key.size());
  for (int g : key) d.push_back(L.gen_degrees[g]);
  return d;
}

bool gen_odd_repeat(const FreeModule& L, const std::vector<int>& key) {
  for (size_t i = 1; i < key.size(); ++i)
    if (key[i] == key[i - 1] && parity(L.gen_degrees[key[i]])) return true;
  return false;
}

}  // namespace

LinOp LinOp::zero(ModulePtr M, int degree) {
  LinOp t;
  t.degree = degree;
  t.cols.assign(M->kspace->dim(), Element::zero(M->kspace));
  t.M = std::move(M);
  return t;
}

bool LinOp::is_zero() const {
  for (const Element& c : cols)
    if (!c.is_zero()) return false;
  return true;
}

Element LinOp::apply(const Element& x) const {
  Element out = Element::zero(M->kspace);
  for (const auto& [i, c] : x.coeffs()) out += cols[i].scaled(c);
  return out;
}

LinOp& LinOp::operator+=(const LinOp& o) {
  if (!same_module(M, o.M)) throw std::invalid_argument("LinOp: module mismatch");
  if (!o.is_zero() && !is_zero() && degree != o.degree)
    throw std::invalid_argument("LinOp: degree mismatch");
  if (is_zero()) degree = o.degree;
  for (size_t i = 0; i < cols.size(); ++i) cols[i] += o.cols[i];
  return *this;
}

LinOp LinOp::scaled(const Rat& c) const {
  LinOp r = *this;
  for (Element& col : r.cols) col = col.scaled(c);
  return r;
}

LinOp compose(const LinOp& a, const LinOp& b) {
  LinOp r = LinOp::zero(a.M, a.degree + b.degree);
  for (size_t i = 0; i < b.cols.size(); ++i) r.cols[i] = a.apply(b.cols[i]);
  return r;
}

LinOp graded_commutator(const LinOp& a, const LinOp& b) {
  LinOp ab = compose(a, b);
  LinOp ba = compose(b, a).scaled(Rat(-sign_pow(parity(a.degree) & parity(b.degree))));
  ab += ba;
  return ab;
}

bool operator==(const LinOp& a, const LinOp& b) {
  return same_module(a.M, b.M) && a.cols == b.cols && (a.degree == b.degree || a.is_zero());
}

std::string LinOp::str() const {
  std::string out;
  for (int i = 0; i < M->kspace->dim(); ++i) {
    if (cols[i].is_zero()) continue;
    if (!out.empty()) out += "; ";
    out += M->kspace->names[i] + " -> " + cols[i].str();
  }
  return out.empty() ? "0" : out;
}

LinOp subordinate_op(ModulePtr M, int op_degree, const std::vector<Element>& gen_values,
                     const AlgDerivation& symbol, bool right) {
  LinOp t = LinOp::zero(M, op_degree);
  const auto& A = *M->algebra;
  for (int i = 0; i < M->kspace->dim(); ++i) {
    const int a = M->a_of(i);
    const int g = M->g_of(i);
    Element v = M->act_basis(a, gen_values[g])
                    .scaled(Rat(sign_pow(parity(op_degree) & parity(A.space->degree(a)))));
    Element sv = M->act(symbol.apply_basis(a), M->gen(g));
    if (right)
      v -= sv;
    else
      v += sv;
    t.cols[i] = std::move(v);
  }
  return t;
}

DerFormFamily DerFormFamily::zero(ModulePtr L, ModulePtr M, int degree, bool right, int cap) {
  DerFormFamily f;
  f.L = std::move(L);
  f.M = std::move(M);
  f.degree = degree;
  f.right = right;
  f.cap = cap;
  return f;
}

bool DerFormFamily::is_zero() const {
  for (const auto& [k, tab] : comp)
    for (const auto& [key, op] : tab)
      if (!op.is_zero()) return false;
  return true;
}

void DerFormFamily::set(int k, std::vector<int> key, LinOp op) {
  if (static_cast<int>(key.size()) != k - 1)
    throw std::invalid_argument("DerFormFamily: key arity");
  SortedKey sk = sort_key(key, gen_degs(*L, key));
  LinOp v = op.scaled(Rat(sk.sign));
  if (gen_odd_repeat(*L, sk.key)) {
    if (!v.is_zero()) throw std::invalid_argument("DerFormFamily: odd-repeated key");
    return;
  }
  int expected = degree;
  for (int g : sk.key) expected += L->gen_degrees[g];
  v.degree = expected;
  for (int i = 0; i < M->kspace->dim(); ++i)
    if (!v.cols[i].homogeneous_of(expected + M->kspace->degree(i)))
      throw std::invalid_argument("DerFormFamily: column degree mismatch");
  auto& tab = comp[k];
  if (v.is_zero())
    tab.erase(sk.key);
  else
    tab.insert_or_assign(std::move(sk.key), std::move(v));
  if (tab.empty()) comp.erase(k);
}

void DerFormFamily::add(int k, std::vector<int> key, const LinOp& op) {
  LinOp cur = eval_gens(k, key);
  cur += op;
  set(k, std::move(key), std::move(cur));
}

LinOp DerFormFamily::eval_gens(int k, const std::vector<int>& key) const {
  SortedKey sk = sort_key(key, gen_degs(*L, key));
  int expected = degree;
  for (int g : sk.key) expected += L->gen_degrees[g];
  auto itk = comp.find(k);
  if (itk == comp.end()) return LinOp::zero(M, expected);
  auto it = itk->second.find(sk.key);
  if (it == itk->second.end()) return LinOp::zero(M, expected);
  return it->second.scaled(Rat(sk.sign));
}

LinOp DerFormFamily::eval(int k, std::span<const Element> args) const {
  if (static_cast<int>(args.size()) != k - 1)
    throw std::invalid_argument("DerFormFamily: arity mismatch");
  int deg = degree;
  for (const Element& a : args) deg += a.degree().value_or(0);
  LinOp out = LinOp::zero(M, deg);
  std::vector<std::pair<int, int>> slots(args.size());
  std::function<void(size_t, Rat)> rec = [&](size_t i, Rat c) {
    if (i == args.size()) {
      int e = 0;
      int acc = parity(degree);
      Element aprod = L->algebra->unit;
      std::vector<int> gens;
      for (const auto& [a, g] : slots) {
        e ^= parity(L->algebra->space->degree(a)) & acc;
        acc ^= parity(L->gen_degrees[g]);
        aprod = L->algebra->mul(aprod, Element::basis(L->algebra->space, a));
        gens.push_back(g);
      }
      if (aprod.is_zero()) return;
      LinOp T = eval_gens(k, gens);
      LinOp term = LinOp::zero(M, deg);
      if (!right) {
        for (int col = 0; col < M->kspace->dim(); ++col)
          term.cols[col] = M->act(aprod, T.cols[col]);
      } else {
        const int s = parity(aprod.degree().value_or(0)) & parity(T.degree);
        for (int col = 0; col < M->kspace->dim(); ++col)
          term.cols[col] = T.apply(M->act(aprod, Element::basis(M->kspace, col)))
                               .scaled(Rat(sign_pow(s)));
      }
      term = term.scaled(c * Rat(sign_pow(e)));
      out += term;
      return;
    }
    for (const auto& [kidx, x] : args[i].coeffs()) {
      slots[i] = {L->a_of(kidx), L->g_of(kidx)};
      rec(i + 1, c * x);
    }
  };
  rec(0, Rat(1));
  return out;
}

Element DerFormFamily::apply(int k, std::span<const Element> args, const Element& p) const {
  return eval(k, args).apply(p);
}

DerFormFamily& DerFormFamily::operator+=(const DerFormFamily& o) {
  if (degree != o.degree || right != o.right || !same_module(L, o.L) || !same_module(M, o.M))
    throw std::invalid_argument("DerFormFamily: shape mismatch");
  for (const auto& [k, tab] : o.comp)
    for (const auto& [key, op] : tab) add(k, key, op);
  return *this;
}

DerFormFamily DerFormFamily::scaled(const Rat& c) const {
  DerFormFamily r = zero(L, M, degree, right, cap);
  if (c.is_zero()) return r;
  for (const auto& [k, tab] : comp)
    for (const auto& [key, op] : tab) r.comp[k].emplace(key, op.scaled(c));
  return r;
}

DerFormFamily gerst_compose(const DerFormFamily& F, const FormalMultiderivation& X) {
  DerFormFamily out =
      DerFormFamily::zero(F.L, F.M, F.degree + X.degree, F.right, F.cap);
  for (const auto& [k, tab] : F.comp) {
    if (k < 2) continue;  // no slot to compose into
    for (const auto& [l, Xl] : X.comp) {
      const int m = k + l - 1;
      if (m > F.cap) continue;
      for_each_sorted_tuple(F.L->ngens(), m - 1, [&](const std::vector<int>& key) {
        if (gen_odd_repeat(*F.L, key)) return;
        const DegreeSeq degs = gen_degs(*F.L, key);
        LinOp val = LinOp::zero(F.M, 0);
        for (const Permutation& s : unshuffles(l, k - 2)) {
          std::vector<int> inner(l);
          for (int i = 0; i < l; ++i) inner[i] = key[s[i] - 1];
          std::vector<Element> args;
          args.reserve(k - 1);
          args.push_back(Xl.x_eval_gens(inner));
          for (int i = l; i < m - 1; ++i) args.push_back(F.L->gen(key[s[i] - 1]));
          val += F.eval(k, args).scaled(Rat(koszul_alpha(s, degs)));
        }
        out.add(m, key, val);
      });
    }
  }
  return out;
}

DerFormFamily family_bracket(const DerFormFamily& F, const DerFormFamily& G) {
  DerFormFamily out =
      DerFormFamily::zero(F.L, F.M, F.degree + G.degree, F.right, std::min(F.cap, G.cap));
  for (const auto& [k, ftab] : F.comp)
    for (const auto& [l, gtab] : G.comp) {
      const int m = k + l - 1;
      if (m > out.cap) continue;
      for_each_sorted_tuple(F.L->ngens(), m - 1, [&](const std::vector<int>& key) {
        if (gen_odd_repeat(*F.L, key)) return;
        const DegreeSeq degs = gen_degs(*F.L, key);
        LinOp val = LinOp::zero(F.M, 0);
        for (const Permutation& s : unshuffles(k - 1, l - 1)) {
          std::vector<int> first(k - 1), second(l - 1);
          int first_par = 0;
          for (int i = 0; i < k - 1; ++i) {
            first[i] = key[s[i] - 1];
            first_par ^= parity(degs[s[i] - 1]);
          }
          for (int i = 0; i < l - 1; ++i) second[i] = key[s[k - 1 + i] - 1];
          LinOp c = graded_commutator(F.eval_gens(k, first), G.eval_gens(l, second));
          val += c.scaled(Rat(koszul_alpha(s, degs) * sign_pow(parity(G.degree) & first_par)));
        }
        out.add(m, key, val);
      });
    }
  return out;
}

namespace {

Report check_subordination_impl(const SHLRAlgebra& S, const DerFormFamily& F, bool right) {
  Report rep;
  const auto& L = S.L;
  const auto& M = F.M;
  const auto& A = *L->algebra;
  for (int k = 1; k <= F.cap; ++k) {
    const ModMultiderivation* Xk = S.X.component(k);
    const bool has_f = F.comp.count(k) != 0;
    if (!Xk && !has_f) continue;
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      LinOp op = F.eval_gens(k, key);
      AlgDerivation sig = Xk ? Xk->sigma_eval_gens(key)
                             : AlgDerivation::zero(L->algebra, 0);
      for (int a = 0; a < A.space->dim(); ++a)
        for (int i = 0; i < M->kspace->dim(); ++i) {
          Element p = Element::basis(M->kspace, i);
          Element lhs = op.apply(M->act_basis(a, p));
          Element rhs = M->act_basis(a, op.apply(p))
                            .scaled(Rat(sign_pow(parity(op.degree) & parity(A.space->degree(a)))));
          Element sv = M->act(sig.apply_basis(a), p);
          if (right)
            rhs -= sv;
          else
            rhs += sv;
          if (!(lhs == rhs)) {
            std::string where = "k=" + std::to_string(k) + " (";
            for (size_t t = 0; t < key.size(); ++t) {
              if (t) where += ",";
              where += L->gen_names[key[t]];
            }
            where += ") a=" + A.space->names[a] + " p=" + M->kspace->names[i];
            rep.fail("subordination", where, lhs.str(), rhs.str());
          }
        }
    });
  }
  return rep;
}

}  // namespace

Report check_subordination(const LeftConnection& C) {
  return check_subordination_impl(*C.S, C.F, false);
}

Report check_subordination(const RightConnection& C) {
  return check_subordination_impl(*C.S, C.F, true);
}

namespace {

// two unshuffle sums of the curvature; `second_sign` is +1 on the left and
// -1 on the right
DerFormFamily curvature_formula(const SHLRAlgebra& S, const DerFormFamily& F, int second_sign) {
  const auto& L = S.L;
  DerFormFamily out = DerFormFamily::zero(L, F.M, 2 * F.degree, false, F.cap);
  const int pX = parity(S.X.degree);
  for (int k = 1; k <= F.cap; ++k) {
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      const DegreeSeq degs = gen_degs(*L, key);
      LinOp val = LinOp::zero(F.M, 0);
      for (int i = 1; i <= k - 1; ++i) {
        const int j = k - i;
        const ModMultiderivation* Xi = S.X.component(i);
        if (!Xi) continue;
        for (const Permutation& s : unshuffles(i, j - 1)) {
          std::vector<int> inner(i);
          for (int t = 0; t < i; ++t) inner[t] = key[s[t] - 1];
          std::vector<Element> args;
          args.reserve(j);
          args.push_back(Xi->x_eval_gens(inner));
          for (int t = i; t < k - 1; ++t) args.push_back(L->gen(key[s[t] - 1]));
          val += F.eval(j + 1, args).scaled(Rat(koszul_alpha(s, degs)));
        }
      }
      for (int i = 0; i <= k - 1; ++i) {
        const int j = k - i;
        for (const Permutation& s : unshuffles(i, j - 1)) {
          std::vector<int> outer(i), inner(j - 1);
          int chi = 0;
          for (int t = 0; t < i; ++t) {
            outer[t] = key[s[t] - 1];
            chi ^= parity(degs[s[t] - 1]);
          }
          for (int t = 0; t < j - 1; ++t) inner[t] = key[s[i + t] - 1];
          LinOp c = compose(F.eval_gens(i + 1, outer), F.eval_gens(j, inner));
          val += c.scaled(
              Rat(second_sign * koszul_alpha(s, degs) * sign_pow(chi & pX)));
        }
      }
      out.add(k, key, val);
    });
  }
  return out;
}

}  // namespace

DerFormFamily left_curvature(const LeftConnection& C) {
  return curvature_formula(*C.S, C.F, +1);
}

DerFormFamily right_curvature(const RightConnection& C) {
  return curvature_formula(*C.S, C.F, -1);
}

ConnPair lpair_bracket(const ConnPair& a, const ConnPair& b) {
  ConnPair out;
  out.X = mder_bracket(a.X, b.X);
  const int sgn = sign_pow(parity(a.X.degree) & parity(b.X.degree));
  DerFormFamily f = gerst_compose(a.F, b.X);
  f += gerst_compose(b.F, a.X).scaled(Rat(-sgn));
  f += family_bracket(a.F, b.F);
  out.F = std::move(f);
  return out;
}

ConnPair rpair_bracket(const ConnPair& a, const ConnPair& b) {
  ConnPair out;
  out.X = mder_bracket(a.X, b.X);
  const int sgn = sign_pow(parity(a.X.degree) & parity(b.X.degree));
  DerFormFamily f = gerst_compose(a.F, b.X);
  f += gerst_compose(b.F, a.X).scaled(Rat(-sgn));
  f += family_bracket(a.F, b.F).scaled(Rat(-1));
  out.F = std::move(f);
  return out;
}

DerFormFamily left_curvature_via_bracket(const LeftConnection& C) {
  ConnPair p{C.S->X, C.F};
  ConnPair b = lpair_bracket(p, p);
  DerFormFamily out = b.F.scaled(Rat(1, 2));
  out.right = false;
  return out;
}

DerFormFamily right_curvature_via_bracket(const RightConnection& C) {
  ConnPair p{C.S->X, C.F};
  ConnPair b = rpair_bracket(p, p);
  DerFormFamily out = b.F.scaled(Rat(1, 2));
  out.right = false;
  return out;
}

bool is_flat(const LeftConnection& C) { return left_curvature(C).is_zero(); }
bool is_flat(const RightConnection& C) { return right_curvature(C).is_zero(); }

DerFormFamily bianchi_left_residual(const LeftConnection& C) {
  DerFormFamily J = left_curvature(C);
  DerFormFamily out = family_bracket(C.F, J);
  out += gerst_compose(J, C.S->X).scaled(Rat(-1));
  return out;
}

DerFormFamily bianchi_right_residual(const RightConnection& C) {
  DerFormFamily J = right_curvature(C);
  J.right = true;  // evaluated only on generator keys below; values A-linear
  DerFormFamily out = family_bracket(C.F, J);
  DerFormFamily jx = gerst_compose(J, C.S->X);
  jx.right = out.right;
  out += jx;
  return out;
}

Form ce_module_component(const LeftConnection& C, int k, const Form& W) {
  const auto& L = C.S->L;
  if (!same_module(W.L, L) || !same_module(W.P, C.P))
    throw std::invalid_argument("ce_module_component: form shape mismatch");
  const ModMultiderivation* Xk = C.S->X.component(k);
  const bool has_f = C.F.comp.count(k) != 0;
  const int l = W.arity;
  Form out = Form::zero(L, C.P, l + k - 1, W.degree + C.F.degree);
  if (!Xk && !has_f) return out;
  const int pw = parity(W.degree);
  const int pX = parity(C.F.degree);
  for_each_sorted_tuple(L->ngens(), l + k - 1, [&](const std::vector<int>& key) {
    if (gen_odd_repeat(*L, key)) return;
    const DegreeSeq degs = gen_degs(*L, key);
    Element val = Element::zero(C.P->kspace);
    for (const Permutation& s : unshuffles(k - 1, l)) {
      std::vector<int> first(k - 1), second(l);
      int first_par = 0;
      for (int i = 0; i < k - 1; ++i) {
        first[i] = key[s[i] - 1];
        first_par ^= parity(degs[s[i] - 1]);
      }
      for (int i = 0; i < l; ++i) second[i] = key[s[k - 1 + i] - 1];
      Element wv = W.eval_gens(second);
      if (wv.is_zero()) continue;
      val += C.F.eval_gens(k, first).apply(wv).scaled(
          Rat(koszul_alpha(s, degs) * sign_pow(pw & first_par)));
    }
    if (l >= 1 && Xk) {
      for (const Permutation& s : unshuffles(k, l - 1)) {
        std::vector<int> inner(k);
        for (int i = 0; i < k; ++i) inner[i] = key[s[i] - 1];
        std::vector<Element> args;
        args.reserve(l);
        args.push_back(Xk->x_eval_gens(inner));
        for (int i = k; i < l + k - 1; ++i) args.push_back(L->gen(key[s[i] - 1]));
        val += W.eval(args).scaled(Rat(-sign_pow(pw & pX) * koszul_alpha(s, degs)));
      }
    }
    out.set(key, val);
  });
  return out;
}

std::map<int, Form> ce_module_operator(const LeftConnection& C, const Form& W) {
  std::map<int, Form> out;
  for (int k = 1; k <= C.F.cap; ++k) {
    if (!C.S->X.component(k) && !C.F.comp.count(k)) continue;
    out.emplace(k, ce_module_component(C, k, W));
  }
  return out;
}

Form curvature_operator_component(const LeftConnection& C, const DerFormFamily& J, int k,
                                  const Form& W) {
  const auto& L = C.S->L;
  const int l = W.arity;
  Form out = Form::zero(L, C.P, l + k - 1, W.degree + 2 * C.F.degree);
  const int pw = parity(W.degree);
  for_each_sorted_tuple(L->ngens(), l + k - 1, [&](const std::vector<int>& key) {
    if (gen_odd_repeat(*L, key)) return;
    const DegreeSeq degs = gen_degs(*L, key);
    Element val = Element::zero(C.P->kspace);
    for (const Permutation& s : unshuffles(k - 1, l)) {
      std::vector<int> first(k - 1), second(l);
      int first_par = 0;
      for (int i = 0; i < k - 1; ++i) {
        first[i] = key[s[i] - 1];
        first_par ^= parity(degs[s[i] - 1]);
      }
      for (int i = 0; i < l; ++i) second[i] = key[s[k - 1 + i] - 1];
      Element wv = W.eval_gens(second);
      if (wv.is_zero()) continue;
      val += J.eval_gens(k, first).apply(wv).scaled(
          Rat(koszul_alpha(s, degs) * sign_pow(pw & first_par)));
    }
    out.set(key, val);
  });
  return out;
}

namespace {

Element qelem_from_tensor(const Tensor& t) {
  Element out = Element::zero(t.Q->kspace);
  for (const auto& [k, c] : t.coeffs) {
    if (!k.gens.empty()) throw std::logic_error("qelem_from_tensor: positive layer");
    out.add_term(t.Q->kindex(k.a, k.q), c);
  }
  return out;
}

Tensor tensor_from_qelem(const ModulePtr& L, const ModulePtr& Q, const Element& q) {
  Tensor t = Tensor::zero(L, Q);
  for (const auto& [kidx, c] : q.coeffs())
    t.add_key(Tensor::Key{Q->a_of(kidx), {}, Q->g_of(kidx)}, c);
  return t;
}

}  // namespace

Tensor rinehart_component(const RightConnection& C, int k, const Tensor& U) {
  const auto& L = C.S->L;
  if (!same_module(U.L, L) || !same_module(U.Q, C.Q))
    throw std::invalid_argument("rinehart_component: tensor shape mismatch");
  Tensor out = Tensor::zero(L, C.Q);
  const ModMultiderivation* Xk = C.S->X.component(k);
  const int pX = parity(C.F.degree);
  for (const auto& [tk, coeff] : U.coeffs) {
    const int l = static_cast<int>(tk.gens.size());
    if (l < k - 1) continue;
    if (l == 0) {
      // layer zero only supports k = 1: D_1 restricted to Q
      if (k != 1) continue;
      Element q = Element::basis(C.Q->kspace, C.Q->kindex(tk.a, tk.q));
      Element dq = C.F.eval_gens(1, {}).apply(q).scaled(Rat(-1));
      out += tensor_from_qelem(L, C.Q, dq).scaled(coeff);
      continue;
    }
    // slot elements; the key coefficient decorates the first factor
    std::vector<Element> slots;
    DegreeSeq degs;
    for (int i = 0; i < l; ++i) {
      Element e = L->gen(tk.gens[i]);
      if (i == 0) e = L->act_basis(tk.a, e);
      degs.push_back(e.degree().value());
      slots.push_back(std::move(e));
    }
    Element q = Element::basis(C.Q->kspace, C.Q->kindex(L->algebra->unit_index, tk.q));

    if (Xk && l >= k) {
      for (const Permutation& s : unshuffles(k, l - k)) {
        std::vector<Element> args;
        for (int t = 0; t < k; ++t) args.push_back(slots[s[t] - 1]);
        Element v = Xk->x_eval(args);
        if (v.is_zero()) continue;
        Tensor tail = tensor_from_qelem(L, C.Q, q);
        for (int t = l - 1; t >= k; --t) tail = tensor_mul_elem(slots[s[t] - 1], tail);
        out += tensor_mul_elem(v, tail).scaled(coeff * Rat(koszul_alpha(s, degs)));
      }
    }
    for (const Permutation& s : unshuffles(l - k + 1, k - 1)) {
      std::vector<Element> dargs;
      int chi = 0;
      for (int t = 0; t < l - k + 1; ++t) chi ^= parity(degs[s[t] - 1]);
      for (int t = l - k + 1; t < l; ++t) dargs.push_back(slots[s[t] - 1]);
      Element dq = C.F.eval(k, dargs).apply(q);
      if (dq.is_zero()) continue;
      Tensor tail = tensor_from_qelem(L, C.Q, dq);
      for (int t = l - k; t >= 0; --t) tail = tensor_mul_elem(slots[s[t] - 1], tail);
      out += tail.scaled(coeff * Rat(-koszul_alpha(s, degs) * sign_pow(chi & pX)));
    }
  }
  return out;
}

std::map<int, Tensor> rinehart_operator(const RightConnection& C, const Tensor& U) {
  std::map<int, Tensor> out;
  for (int k = 1; k <= C.F.cap; ++k) {
    if (!C.S->X.component(k) && !C.F.comp.count(k)) continue;
    out.emplace(k, rinehart_component(C, k, U));
  }
  return out;
}

// With the Rinehart operator normalized as above (its layer-zero restriction
// is -delta), the transported curvature (1/2)[D,D] is minus the single
// unshuffle sum of J(delta) over the tensor factors.
Tensor curvature_operator_component(const RightConnection& C, const DerFormFamily& J, int k,
                                    const Tensor& U) {
  const auto& L = C.S->L;
  Tensor out = Tensor::zero(L, C.Q);
  for (const auto& [tk, coeff] : U.coeffs) {
    const int l = static_cast<int>(tk.gens.size());
    if (l < k - 1) continue;
    if (l == 0) {
      if (k != 1) continue;
      Element q = Element::basis(C.Q->kspace, C.Q->kindex(tk.a, tk.q));
      out += tensor_from_qelem(L, C.Q, J.eval_gens(1, {}).apply(q)).scaled(-coeff);
      continue;
    }
    std::vector<Element> slots;
    DegreeSeq degs;
    for (int i = 0; i < l; ++i) {
      Element e = L->gen(tk.gens[i]);
      if (i == 0) e = L->act_basis(tk.a, e);
      degs.push_back(e.degree().value());
      slots.push_back(std::move(e));
    }
    Element q = Element::basis(C.Q->kspace, C.Q->kindex(L->algebra->unit_index, tk.q));
    for (const Permutation& s : unshuffles(l - k + 1, k - 1)) {
      std::vector<Element> jargs;
      for (int t = l - k + 1; t < l; ++t) jargs.push_back(slots[s[t] - 1]);
      Element jq = J.eval(k, jargs).apply(q);
      if (jq.is_zero()) continue;
      Tensor tail = tensor_from_qelem(L, C.Q, jq);
      for (int t = l - k; t >= 0; --t) tail = tensor_mul_elem(slots[s[t] - 1], tail);
      out += tail.scaled(coeff * Rat(-koszul_alpha(s, degs)));
    }
  }
  return out;
}

Form PFormOperator::apply(int k, const Form& W) const {
  auto it = comp.find(k);
  if (it == comp.end()) return Form::zero(L, P, W.arity + k - 1, W.degree + degree);
  return it->second(W);
}

PFormOperator eta_L(const LeftConnection& C) {
  PFormOperator D;
  D.L = C.S->L;
  D.P = C.P;
  D.degree = C.F.degree;
  for (int k = 1; k <= C.F.cap; ++k) {
    if (!C.S->X.component(k) && !C.F.comp.count(k)) continue;
    LeftConnection copy = C;
    D.comp.emplace(k, [copy, k](const Form& W) { return ce_module_component(copy, k, W); });
  }
  return D;
}

LeftConnection eta_L_inverse(const SHLRPtr& S, ModulePtr P, const PFormOperator& D) {
  LeftConnection C;
  C.S = S;
  C.P = P;
  C.F = DerFormFamily::zero(S->L, P, D.degree, false, S->cap());
  const auto& L = S->L;
  for (const auto& [k, Dk] : D.comp) {
    if (k > S->cap()) continue;
    // cache D applied to the 0-forms given by the P basis
    std::vector<Form> dp;
    for (int i = 0; i < P->kspace->dim(); ++i)
      dp.push_back(Dk(Form::from_value(L, P, Element::basis(P->kspace, i))));
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      int tpar = 0;
      for (int g : key) tpar ^= parity(L->gen_degrees[g]);
      LinOp op = LinOp::zero(P, 0);
      for (int i = 0; i < P->kspace->dim(); ++i) {
        const int pp = parity(P->kspace->degree(i));
        op.cols[i] = dp[i].eval_gens(key).scaled(Rat(sign_pow(tpar & pp)));
      }
      C.F.set(k, key, std::move(op));
    });
  }
  return C;
}

Tensor TensorOperator::apply(int k, const Tensor& U) const {
  auto it = comp.find(k);
  if (it == comp.end()) return Tensor::zero(L, Q);
  return it->second(U);
}

TensorOperator eta_R(const RightConnection& C) {
  TensorOperator D;
  D.L = C.S->L;
  D.Q = C.Q;
  D.degree = C.F.degree;
  for (int k = 1; k <= C.F.cap; ++k) {
    if (!C.S->X.component(k) && !C.F.comp.count(k)) continue;
    RightConnection copy = C;
    D.comp.emplace(k, [copy, k](const Tensor& U) { return rinehart_component(copy, k, U); });
  }
  return D;
}

RightConnection eta_R_inverse(const SHLRPtr& S, ModulePtr Q, const TensorOperator& D) {
  RightConnection C;
  C.S = S;
  C.Q = Q;
  C.F = DerFormFamily::zero(S->L, Q, D.degree, true, S->cap());
  const auto& L = S->L;
  for (const auto& [k, Dk] : D.comp) {
    if (k > S->cap()) continue;
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      LinOp op = LinOp::zero(Q, 0);
      for (int i = 0; i < Q->kspace->dim(); ++i) {
        Element q = Element::basis(Q->kspace, i);
        Tensor t = tensor_monomial_q(L, Q, key, q);
        // D_k(key-monomial (x) q) = -delta(key|q) under the Rinehart formula
        op.cols[i] = qelem_from_tensor(Dk(t)).scaled(Rat(-1));
      }
      C.F.set(k, key, std::move(op));
    });
  }
  return C;
}

ModulePtr tensor_module(const ModulePtr& P, const ModulePtr& P2) {
  std::vector<std::pair<std::string, int>> gens;
  for (int i = 0; i < P->ngens(); ++i)
    for (int j = 0; j < P2->ngens(); ++j)
      gens.emplace_back(P->gen_names[i] + "(x)" + P2->gen_names[j],
                        P->gen_degrees[i] + P2->gen_degrees[j]);
  return FreeModule::make(P->algebra, std::move(gens));
}

Element tensor_elem(const ModulePtr& T, const ModulePtr& P, const ModulePtr& P2,
                    const Element& x, const Element& y) {
  Element out = Element::zero(T->kspace);
  const auto& A = *P->algebra;
  for (const auto& [xi, c] : x.coeffs()) {
    const int a = P->a_of(xi), i = P->g_of(xi);
    for (const auto& [yj, d] : y.coeffs()) {
      const int b = P2->a_of(yj), j = P2->g_of(yj);
      const int s = parity(A.space->degree(b)) & parity(P->gen_degrees[i]);
      Element ab = A.mul_basis(a, b);
      for (const auto& [mi, mc] : ab.coeffs())
        out.add_term(T->kindex(mi, i * P2->ngens() + j), c * d * mc * Rat(sign_pow(s)));
    }
  }
  return out;
}

ModulePtr hom_module(const ModulePtr& P, const ModulePtr& P2) {
  std::vector<std::pair<std::string, int>> gens;
  for (int i = 0; i < P->ngens(); ++i)
    for (int j = 0; j < P2->ngens(); ++j)
      gens.emplace_back("[" + P->gen_names[i] + "->" + P2->gen_names[j] + "]",
                        P2->gen_degrees[j] - P->gen_degrees[i]);
  return FreeModule::make(P->algebra, std::move(gens));
}

Element hom_apply(const ModulePtr& H, const ModulePtr& P, const ModulePtr& P2,
                  const Element& phi, const Element& p) {
  Element out = Element::zero(P2->kspace);
  const auto& A = *P->algebra;
  for (const auto& [hi, c] : phi.coeffs()) {
    const int a = H->a_of(hi);
    const int r = H->g_of(hi) / P2->ngens();
    const int s = H->g_of(hi) % P2->ngens();
    const int phi_deg = A.space->degree(a) + H->gen_degrees[H->g_of(hi)];
    for (const auto& [pi, d] : p.coeffs()) {
      const int b = P->a_of(pi);
      if (P->g_of(pi) != r) continue;
      const int sign = parity(phi_deg) & parity(A.space->degree(b));
      Element ba = A.mul_basis(b, a);
      for (const auto& [mi, mc] : ba.coeffs())
        out.add_term(P2->kindex(mi, s), c * d * mc * Rat(sign_pow(sign)));
    }
  }
  return out;
}

Element hom_from_gen_values(const ModulePtr& H, const ModulePtr& P, const ModulePtr& P2,
                            const std::vector<Element>& values) {
  Element out = Element::zero(H->kspace);
  for (int r = 0; r < P->ngens(); ++r)
    for (const auto& [kidx, c] : values[r].coeffs())
      out.add_term(H->kindex(P2->a_of(kidx), r * P2->ngens() + P2->g_of(kidx)), c);
  return out;
}

namespace {

// build a connection on a derived module from generator values computed per
// component and key
template <typename ValueFn>
DerFormFamily derived_family(const SHLRPtr& S, const ModulePtr& M, int degree, bool right,
                             int cap, ValueFn&& fn) {
  DerFormFamily F = DerFormFamily::zero(S->L, M, degree, right, cap);
  const auto& L = S->L;
  for (int k = 1; k <= cap; ++k) {
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      std::vector<Element> gen_values(M->ngens(), Element::zero(M->kspace));
      bool any = fn(k, key, gen_values);
      const ModMultiderivation* Xk = S->X.component(k);
      AlgDerivation sym = Xk ? Xk->sigma_eval_gens(key) : AlgDerivation::zero(L->algebra, 0);
      if (!any && sym.is_zero()) return;
      int opdeg = degree;
      for (int g : key) opdeg += L->gen_degrees[g];
      F.set(k, key, subordinate_op(M, opdeg, gen_values, sym, right));
    });
  }
  return F;
}

}  // namespace

LeftConnection tensor_left(const LeftConnection& C, const LeftConnection& C2) {
  if (C.S != C2.S && !(same_module(C.S->L, C2.S->L) && C.S->X == C2.S->X))
    throw std::invalid_argument("tensor_left: base mismatch");
  ModulePtr T = tensor_module(C.P, C2.P);
  LeftConnection out;
  out.S = C.S;
  out.P = T;
  out.F = derived_family(
      C.S, T, C.F.degree, false, C.F.cap,
      [&](int k, const std::vector<int>& key, std::vector<Element>& gv) {
        LinOp a = C.F.eval_gens(k, key);
        LinOp b = C2.F.eval_gens(k, key);
        if (a.is_zero() && b.is_zero()) return false;
        int keypar = parity(C.F.degree);
        for (int g : key) keypar ^= parity(C.S->L->gen_degrees[g]);
        for (int i = 0; i < C.P->ngens(); ++i)
          for (int j = 0; j < C2.P->ngens(); ++j) {
            Element v = tensor_elem(T, C.P, C2.P, a.apply(C.P->gen(i)), C2.P->gen(j));
            const int s = keypar & parity(C.P->gen_degrees[i]);
            v += tensor_elem(T, C.P, C2.P, C.P->gen(i), b.apply(C2.P->gen(j)))
                     .scaled(Rat(sign_pow(s)));
            gv[i * C2.P->ngens() + j] = std::move(v);
          }
        return true;
      });
  return out;
}

LeftConnection hom_left(const LeftConnection& C, const LeftConnection& C2) {
  ModulePtr H = hom_module(C.P, C2.P);
  LeftConnection out;
  out.S = C.S;
  out.P = H;
  out.F = derived_family(
      C.S, H, C.F.degree, false, C.F.cap,
      [&](int k, const std::vector<int>& key, std::vector<Element>& gv) {
        LinOp a = C.F.eval_gens(k, key);
        LinOp b = C2.F.eval_gens(k, key);
        if (a.is_zero() && b.is_zero()) return false;
        int keypar = parity(C.F.degree);
        for (int g : key) keypar ^= parity(C.S->L->gen_degrees[g]);
        for (int r = 0; r < C.P->ngens(); ++r)
          for (int s = 0; s < C2.P->ngens(); ++s) {
            Element phi = H->gen(r * C2.P->ngens() + s);
            const int pphi = parity(H->gen_degrees[r * C2.P->ngens() + s]);
            std::vector<Element> vals(C.P->ngens(), Element::zero(C2.P->kspace));
            for (int t = 0; t < C.P->ngens(); ++t) {
              Element ft = hom_apply(H, C.P, C2.P, phi, C.P->gen(t));
              Element v = b.apply(ft);
              v -= hom_apply(H, C.P, C2.P, phi, a.apply(C.P->gen(t)))
                       .scaled(Rat(sign_pow(keypar & pphi)));
              vals[t] = std::move(v);
            }
            gv[r * C2.P->ngens() + s] = hom_from_gen_values(H, C.P, C2.P, vals);
          }
        return true;
      });
  return out;
}

LeftConnection right_tensor(const RightConnection& D, const RightConnection& D2) {
  ModulePtr T = tensor_module(D.Q, D2.Q);
  LeftConnection out;
  out.S = D.S;
  out.P = T;
  out.F = derived_family(
      D.S, T, D.F.degree, false, D.F.cap,
      [&](int k, const std::vector<int>& key, std::vector<Element>& gv) {
        LinOp a = D.F.eval_gens(k, key);
        LinOp b = D2.F.eval_gens(k, key);
        if (a.is_zero() && b.is_zero()) return false;
        int keypar = parity(D.F.degree);
        for (int g : key) keypar ^= parity(D.S->L->gen_degrees[g]);
        for (int i = 0; i < D.Q->ngens(); ++i)
          for (int j = 0; j < D2.Q->ngens(); ++j) {
            Element v =
                tensor_elem(T, D.Q, D2.Q, a.apply(D.Q->gen(i)), D2.Q->gen(j)).scaled(Rat(-1));
            const int s = keypar & parity(D.Q->gen_degrees[i]);
            v -= tensor_elem(T, D.Q, D2.Q, D.Q->gen(i), b.apply(D2.Q->gen(j)))
                     .scaled(Rat(sign_pow(s)));
            gv[i * D2.Q->ngens() + j] = std::move(v);
          }
        return true;
      });
  return out;
}

LeftConnection right_hom(const RightConnection& D, const RightConnection& D2) {
  ModulePtr H = hom_module(D.Q, D2.Q);
  LeftConnection out;
  out.S = D.S;
  out.P = H;
  out.F = derived_family(
      D.S, H, D.F.degree, false, D.F.cap,
      [&](int k, const std::vector<int>& key, std::vector<Element>& gv) {
        LinOp a = D.F.eval_gens(k, key);
        LinOp b = D2.F.eval_gens(k, key);
        if (a.is_zero() && b.is_zero()) return false;
        int keypar = parity(D.F.degree);
        for (int g : key) keypar ^= parity(D.S->L->gen_degrees[g]);
        for (int r = 0; r < D.Q->ngens(); ++r)
          for (int s = 0; s < D2.Q->ngens(); ++s) {
            Element phi = H->gen(r * D2.Q->ngens() + s);
            const int pphi = parity(H->gen_degrees[r * D2.Q->ngens() + s]);
            std::vector<Element> vals(D.Q->ngens(), Element::zero(D2.Q->kspace));
            for (int t = 0; t < D.Q->ngens(); ++t) {
              Element v = hom_apply(H, D.Q, D2.Q, phi, a.apply(D.Q->gen(t)))
                              .scaled(Rat(sign_pow(keypar & pphi)));
              v -= b.apply(hom_apply(H, D.Q, D2.Q, phi, D.Q->gen(t)));
              vals[t] = std::move(v);
            }
            gv[r * D2.Q->ngens() + s] = hom_from_gen_values(H, D.Q, D2.Q, vals);
          }
        return true;
      });
  return out;
}

RightConnection diamond(const LeftConnection& C, const RightConnection& D) {
  ModulePtr T = tensor_module(C.P, D.Q);
  RightConnection out;
  out.S = C.S;
  out.Q = T;
  out.F = derived_family(
      C.S, T, C.F.degree, true, C.F.cap,
      [&](int k, const std::vector<int>& key, std::vector<Element>& gv) {
        LinOp a = C.F.eval_gens(k, key);
        LinOp b = D.F.eval_gens(k, key);
        if (a.is_zero() && b.is_zero()) return false;
        int keypar = parity(C.F.degree);
        for (int g : key) keypar ^= parity(C.S->L->gen_degrees[g]);
        for (int i = 0; i < C.P->ngens(); ++i)
          for (int j = 0; j < D.Q->ngens(); ++j) {
            const int s = keypar & parity(C.P->gen_degrees[i]);
            Element v = tensor_elem(T, C.P, D.Q, C.P->gen(i), b.apply(D.Q->gen(j)))
                            .scaled(Rat(sign_pow(s)));
            v -= tensor_elem(T, C.P, D.Q, a.apply(C.P->gen(i)), D.Q->gen(j));
            gv[i * D.Q->ngens() + j] = std::move(v);
          }
        return true;
      });
  return out;
}

RightConnection diamond_hom_pq(const LeftConnection& C, const RightConnection& D) {
  ModulePtr H = hom_module(C.P, D.Q);
  RightConnection out;
  out.S = C.S;
  out.Q = H;
  out.F = derived_family(
      C.S, H, C.F.degree, true, C.F.cap,
      [&](int k, const std::vector<int>& key, std::vector<Element>& gv) {
        LinOp a = C.F.eval_gens(k, key);
        LinOp b = D.F.eval_gens(k, key);
        if (a.is_zero() && b.is_zero()) return false;
        int keypar = parity(C.F.degree);
        for (int g : key) keypar ^= parity(C.S->L->gen_degrees[g]);
        for (int r = 0; r < C.P->ngens(); ++r)
          for (int s = 0; s < D.Q->ngens(); ++s) {
            Element phi = H->gen(r * D.Q->ngens() + s);
            const int pphi = parity(H->gen_degrees[r * D.Q->ngens() + s]);
            std::vector<Element> vals(C.P->ngens(), Element::zero(D.Q->kspace));
            for (int t = 0; t < C.P->ngens(); ++t) {
              Element v = hom_apply(H, C.P, D.Q, phi, a.apply(C.P->gen(t)))
                              .scaled(Rat(sign_pow(keypar & pphi)));
              v += b.apply(hom_apply(H, C.P, D.Q, phi, C.P->gen(t)));
              vals[t] = std::move(v);
            }
            gv[r * D.Q->ngens() + s] = hom_from_gen_values(H, C.P, D.Q, vals);
          }
        return true;
      });
  return out;
}

RightConnection diamond_hom_qp(const RightConnection& D, const LeftConnection& C) {
  ModulePtr H = hom_module(D.Q, C.P);
  RightConnection out;
  out.S = C.S;
  out.Q = H;
  out.F = derived_family(
      C.S, H, C.F.degree, true, C.F.cap,
      [&](int k, const std::vector<int>& key, std::vector<Element>& gv) {
        LinOp a = C.F.eval_gens(k, key);   // nabla on P
        LinOp b = D.F.eval_gens(k, key);   // delta on Q
        if (a.is_zero() && b.is_zero()) return false;
        int keypar = parity(C.F.degree);
        for (int g : key) keypar ^= parity(C.S->L->gen_degrees[g]);
        for (int r = 0; r < D.Q->ngens(); ++r)
          for (int s = 0; s < C.P->ngens(); ++s) {
            Element phi = H->gen(r * C.P->ngens() + s);
            const int pphi = parity(H->gen_degrees[r * C.P->ngens() + s]);
            std::vector<Element> vals(D.Q->ngens(), Element::zero(C.P->kspace));
            for (int t = 0; t < D.Q->ngens(); ++t) {
              Element v = a.apply(hom_apply(H, D.Q, C.P, phi, D.Q->gen(t))).scaled(Rat(-1));
              v -= hom_apply(H, D.Q, C.P, phi, b.apply(D.Q->gen(t)))
                       .scaled(Rat(sign_pow(keypar & pphi)));
              vals[t] = std::move(v);
            }
            gv[r * C.P->ngens() + s] = hom_from_gen_values(H, D.Q, C.P, vals);
          }
        return true;
      });
  return out;
}

AlgebraExtension extension_from_gen_products(
    AlgebraPtr base, const std::vector<std::pair<std::string, int>>& gens, int one_gen,
    const std::map<std::pair<int, int>, Element>& gen_products) {
  AlgebraExtension E;
  E.base = base;
  E.module = FreeModule::make(base, gens);
  E.one_gen = one_gen;
  const auto& M = E.module;
  SymMultiMap prod = SymMultiMap::zero(2, 0, M->kspace, M->kspace);
  const int dim = M->kspace->dim();
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      const int a = M->a_of(i), g = M->g_of(i);
      const int b = M->a_of(j), h = M->g_of(j);
      auto it = gen_products.find({g, h});
      Element gh = it != gen_products.end() ? it->second : Element::zero(M->kspace);
      if (g == h && parity(M->gen_degrees[g])) gh = Element::zero(M->kspace);
      // (a g)(b h) = (-1)^{b g} (a b) (g h)
      const int s = parity(base->space->degree(b)) & parity(M->gen_degrees[g]);
      Element v = M->act(base->mul_basis(a, b), gh).scaled(Rat(sign_pow(s)));
      prod.set({i, j}, v);
    }
  E.algebra = GradedAlgebra::make(M->kspace, std::move(prod),
                                  Element::basis(M->kspace, M->kindex(base->unit_index, one_gen)));
  return E;
}

Element extension_embed(const AlgebraExtension& E, const Element& a) {
  Element out = Element::zero(E.module->kspace);
  for (const auto& [i, c] : a.coeffs()) out.add_term(E.module->kindex(i, E.one_gen), c);
  return out;
}

Report check_action(const AlgebraExtension& E, const LeftConnection& C) {
  Report rep;
  if (!same_module(C.P, E.module)) {
    rep.fail("action", "module", "connection module", "extension module");
    return rep;
  }
  const auto& A = *E.algebra;
  const int dim = A.space->dim();
  for (const auto& [k, tab] : C.F.comp)
    for (const auto& [key, op] : tab) {
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          Element f = Element::basis(A.space, i), g = Element::basis(A.space, j);
          Element lhs = op.apply(A.mul(f, g));
          Element rhs = A.mul(op.apply(f), g);
          rhs += A.mul(f, op.apply(g))
                     .scaled(Rat(sign_pow(parity(op.degree) & parity(A.space->degree(i)))));
          if (!(lhs == rhs)) {
            std::string where = "k=" + std::to_string(k) + " " + A.space->names[i] + "," +
                                A.space->names[j];
            rep.fail("action-derivation", where, lhs.str(), rhs.str());
          }
        }
    }
  return rep;
}

SHLRPtr transformation_lr(const AlgebraExtension& E, const LeftConnection& action) {
  Report act = check_action(E, action);
  if (!act.ok())
    throw std::invalid_argument("transformation_lr: not a pre-action:\n" + act.str());
  if (!is_flat(action))
    throw std::invalid_argument("transformation_lr: pre-action is not flat");
  const auto& S = action.S;
  const auto& L = S->L;
  std::vector<std::pair<std::string, int>> gens;
  for (int g = 0; g < L->ngens(); ++g) gens.emplace_back(L->gen_names[g], L->gen_degrees[g]);
  ModulePtr Lt = FreeModule::make(E.algebra, gens);

  auto embed = [&](const Element& x) {
    Element out = Element::zero(Lt->kspace);
    for (const auto& [kidx, c] : x.coeffs()) {
      const int a = L->a_of(kidx), g = L->g_of(kidx);
      out.add_term(Lt->kindex(E.module->kindex(a, E.one_gen), g), c);
    }
    return out;
  };

  FormalMultiderivation Xt = FormalMultiderivation::zero(Lt, S->X.degree, S->cap());
  for (int k = 1; k <= S->cap(); ++k) {
    const ModMultiderivation* comp = S->X.component(k);
    if (!comp && !action.F.comp.count(k)) continue;
    ModMultiderivation ct = ModMultiderivation::zero(Lt, k, S->X.degree);
    if (comp)
      for (const auto& [key, v] : comp->x_table) ct.set_x(key, embed(v));
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      LinOp op = action.F.eval_gens(k, key);
      if (op.is_zero()) return;
      AlgDerivation d = AlgDerivation::zero(E.algebra, op.degree);
      d.cols = op.cols;
      ct.set_sigma(key, std::move(d));
    });
    if (!ct.is_zero()) Xt.set_component(std::move(ct));
  }
  return make_shlr(std::move(Xt));
}

ExtModule make_ext_module(const AlgebraExtension& E,
                          std::vector<std::pair<std::string, int>> pgens) {
  ExtModule M;
  M.ext = E;
  M.pgens = pgens;
  M.over_ext = FreeModule::make(E.algebra, pgens);
  std::vector<std::pair<std::string, int>> base_gens;
  for (int t = 0; t < E.module->ngens(); ++t)
    for (const auto& [pn, pd] : pgens)
      base_gens.emplace_back(E.module->gen_names[t] + "*" + pn, E.module->gen_degrees[t] + pd);
  M.over_base = FreeModule::make(E.base, base_gens);
  return M;
}

Element ext_to_base(const ExtModule& M, const Element& x) {
  // over_ext kspace index: ((aA, tgen) as ext-basis, pgen)
  Element out = Element::zero(M.over_base->kspace);
  const int np = static_cast<int>(M.pgens.size());
  for (const auto& [kidx, c] : x.coeffs()) {
    const int ext_basis = M.over_ext->a_of(kidx);
    const int p = M.over_ext->g_of(kidx);
    const int aA = M.ext.module->a_of(ext_basis);
    const int t = M.ext.module->g_of(ext_basis);
    out.add_term(M.over_base->kindex(aA, t * np + p), c);
  }
  return out;
}

Element base_to_ext(const ExtModule& M, const Element& x) {
  Element out = Element::zero(M.over_ext->kspace);
  const int np = static_cast<int>(M.pgens.size());
  for (const auto& [kidx, c] : x.coeffs()) {
    const int aA = M.over_base->a_of(kidx);
    const int tp = M.over_base->g_of(kidx);
    const int t = tp / np;
    const int p = tp % np;
    out.add_term(M.over_ext->kindex(M.ext.module->kindex(aA, t), p), c);
  }
  return out;
}

Element ext_act(const ExtModule& M, const Element& f, const Element& p_over_base) {
  return ext_to_base(M, M.over_ext->act(f, base_to_ext(M, p_over_base)));
}

namespace {

Report check_rep_impl(const ExtModule& M, const DerFormFamily& F, const LeftConnection& action,
                      bool right) {
  Report rep;
  const auto& L = action.S->L;
  const int dimE = M.ext.algebra->space->dim();
  for (int k = 1; k <= F.cap; ++k) {
    const bool has = F.comp.count(k) || action.F.comp.count(k);
    if (!has) continue;
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      LinOp op = F.eval_gens(k, key);
      LinOp act = action.F.eval_gens(k, key);
      for (int fi = 0; fi < dimE; ++fi)
        for (int pi = 0; pi < M.over_base->kspace->dim(); ++pi) {
          Element f = Element::basis(M.ext.algebra->space, fi);
          Element p = Element::basis(M.over_base->kspace, pi);
          Element lhs = op.apply(ext_act(M, f, p));
          Element rhs = ext_act(M, f, op.apply(p))
                            .scaled(Rat(sign_pow(parity(op.degree) &
                                                 parity(M.ext.algebra->space->degree(fi)))));
          Element av = ext_act(M, act.apply(f), p);
          if (right)
            rhs -= av;
          else
            rhs += av;
          if (!(lhs == rhs)) {
            std::string where = "k=" + std::to_string(k) + " f=" +
                                M.ext.algebra->space->names[fi] + " p=" +
                                M.over_base->kspace->names[pi];
            rep.fail(right ? "right-derivative-rep" : "left-derivative-rep", where, lhs.str(),
                     rhs.str());
          }
        }
    });
  }
  return rep;
}

}  // namespace

Report check_derivative_rep_left(const ExtModule& M, const LeftConnection& Cp,
                                 const LeftConnection& action) {
  return check_rep_impl(M, Cp.F, action, false);
}

Report check_derivative_rep_right(const ExtModule& M, const RightConnection& Dq,
                                  const LeftConnection& action) {
  return check_rep_impl(M, Dq.F, action, true);
}

namespace {

template <bool Right>
DerFormFamily transport_family(const ExtModule& M, const SHLRPtr& St, const DerFormFamily& F) {
  // values on (1 (x) g)-tuples, as operators on over_ext
  DerFormFamily out = DerFormFamily::zero(St->L, M.over_ext, F.degree, Right, F.cap);
  const auto& L = F.L;
  for (int k = 1; k <= F.cap; ++k) {
    if (!F.comp.count(k) && !St->X.component(k)) continue;
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      LinOp op = F.eval_gens(k, key);
      LinOp t = LinOp::zero(M.over_ext, op.degree);
      for (int i = 0; i < M.over_ext->kspace->dim(); ++i)
        t.cols[i] =
            base_to_ext(M, op.apply(ext_to_base(M, Element::basis(M.over_ext->kspace, i))));
      out.set(k, key, std::move(t));
    });
  }
  return out;
}

template <bool Right>
DerFormFamily restrict_family(const ExtModule& M, const SHLRPtr& Sbase,
                              const DerFormFamily& Fext) {
  DerFormFamily out = DerFormFamily::zero(Sbase->L, M.over_base, Fext.degree, Right, Fext.cap);
  const auto& Lb = Sbase->L;
  const auto& Lt = Fext.L;
  for (int k = 1; k <= Fext.cap; ++k) {
    if (!Fext.comp.count(k) && !Sbase->X.component(k)) continue;
    for_each_sorted_tuple(Lb->ngens(), k - 1, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*Lb, key)) return;
      // evaluate on the (1 (x) g) tuple
      std::vector<Element> args;
      for (int g : key) args.push_back(Lt->gen(g));
      LinOp op = Fext.eval(k, args);
      LinOp t = LinOp::zero(M.over_base, op.degree);
      for (int i = 0; i < M.over_base->kspace->dim(); ++i)
        t.cols[i] =
            ext_to_base(M, op.apply(base_to_ext(M, Element::basis(M.over_base->kspace, i))));
      out.set(k, key, std::move(t));
    });
  }
  return out;
}

}  // namespace

LeftConnection extend_rep_left(const ExtModule& M, const SHLRPtr& St, const LeftConnection& Cp) {
  LeftConnection out;
  out.S = St;
  out.P = M.over_ext;
  out.F = transport_family<false>(M, St, Cp.F);
  return out;
}

LeftConnection restrict_rep_left(const ExtModule& M, const SHLRPtr& Sbase,
                                 const LeftConnection& action, const LeftConnection& Cext) {
  (void)action;
  LeftConnection out;
  out.S = Sbase;
  out.P = M.over_base;
  out.F = restrict_family<false>(M, Sbase, Cext.F);
  return out;
}

RightConnection extend_rep_right(const ExtModule& M, const SHLRPtr& St,
                                 const RightConnection& Dq) {
  RightConnection out;
  out.S = St;
  out.Q = M.over_ext;
  out.F = transport_family<true>(M, St, Dq.F);
  return out;
}

RightConnection restrict_rep_right(const ExtModule& M, const SHLRPtr& Sbase,
                                   const LeftConnection& action, const RightConnection& Dext) {
  (void)action;
  RightConnection out;
  out.S = Sbase;
  out.Q = M.over_base;
  out.F = restrict_family<true>(M, Sbase, Dext.F);
  return out;
}

}  // namespace shlr
