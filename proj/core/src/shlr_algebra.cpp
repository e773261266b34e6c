#include "shlr/shlr_algebra.hpp"

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

std::string key_str(const FreeModule& L, const std::vector<int>& key) {
  std::string s = "(";
  for (size_t i = 0; i < key.size(); ++i) {
    if (i) s += ",";
    s += L.gen_names[key[i]];
  }
  return s + ")";
}

}  // namespace

FormalMultiderivation jacobiator(const FormalMultiderivation& X) {
  FormalMultiderivation b = mder_bracket(X, X);
  return b.scaled(Rat(1, 2));
}

Report validate_structure(const FormalMultiderivation& X) {
  Report rep;
  if (!parity(X.degree))
    rep.fail("structure-degree", "total degree", std::to_string(X.degree), "odd");
  for (const auto& [k, comp] : X.comp) {
    Report sub = check_mder(comp);
    for (auto& f : sub.failures)
      rep.fail(f.check, "arity " + std::to_string(k) + " " + f.where, f.lhs, f.rhs);
  }
  FormalMultiderivation jac = jacobiator(X);
  for (const auto& [k, comp] : jac.comp) {
    for (const auto& [key, v] : comp.x_table)
      rep.fail("jacobiator", "arity " + std::to_string(k) + " " + key_str(*X.L, key), v.str(),
               "0");
    for (const auto& [key, d] : comp.s_table)
      rep.fail("jacobiator-symbol", "arity " + std::to_string(k) + " " + key_str(*X.L, key),
               d.str(), "0");
  }
  return rep;
}

SHLRPtr make_shlr(FormalMultiderivation X) {
  auto S = std::make_shared<SHLRAlgebra>();
  S->L = X.L;
  S->validation = validate_structure(X);
  S->truncated = mder_bracket(X, X).truncated;
  S->X = std::move(X);
  return S;
}

ModulePtr linfinity_module(std::vector<std::pair<std::string, int>> basis_of_V) {
  return FreeModule::make(GradedAlgebra::ground_field(), std::move(basis_of_V));
}

Form ce_component(const SHLRAlgebra& S, int k, const Form& w) {
  if (!S.valid())
    throw std::invalid_argument("ce_component: structure failed validation:\n" +
                                S.validation.str());
  if (w.P->ngens() != 1 || w.P->gen_degrees[0] != 0)
    throw std::invalid_argument("ce_component: form must be A-valued");
  const auto& L = S.L;
  const ModMultiderivation* Xk = S.X.component(k);
  const int l = w.arity;
  Form out = Form::zero(L, w.P, l + k - 1, w.degree + S.X.degree);
  if (!Xk) return out;
  const int pw = parity(w.degree);
  for_each_sorted_tuple(L->ngens(), l + k - 1, [&](const std::vector<int>& key) {
    if (gen_odd_repeat(*L, key)) return;
    const DegreeSeq degs = gen_degs(*L, key);
    Element val = Element::zero(L->algebra->space);
    for (const Permutation& s : unshuffles(k - 1, l)) {
      std::vector<int> first(k - 1), second(l);
      int first_par = 0;
      for (int i = 0; i < k - 1; ++i) {
        first[i] = key[s[i] - 1];
        first_par ^= parity(degs[s[i] - 1]);
      }
      for (int i = 0; i < l; ++i) second[i] = key[s[k - 1 + i] - 1];
      Element wv = to_algebra(*w.P, w.eval_gens(second));
      if (wv.is_zero()) continue;
      val += Xk->sigma_eval_gens(first).apply(wv).scaled(
          Rat(koszul_alpha(s, degs) * sign_pow(pw & first_par)));
    }
    if (l >= 1) {
      for (const Permutation& s : unshuffles(k, l - 1)) {
        std::vector<int> inner(k);
        for (int i = 0; i < k; ++i) inner[i] = key[s[i] - 1];
        std::vector<Element> args;
        args.reserve(l);
        args.push_back(Xk->x_eval_gens(inner));
        for (int i = k; i < l + k - 1; ++i) args.push_back(L->gen(key[s[i] - 1]));
        val += to_algebra(*w.P, w.eval(args)).scaled(Rat(-sign_pow(pw) * koszul_alpha(s, degs)));
      }
    }
    out.set(key, from_algebra(*w.P, val));
  });
  return out;
}

std::map<int, Form> ce_differential(const SHLRAlgebra& S, const Form& w) {
  std::map<int, Form> out;
  for (const auto& [k, c] : S.X.comp) out.emplace(k, ce_component(S, k, w));
  return out;
}

void ModuleMapFamily::set(int k, std::vector<int> vkey, int w, Element value) {
  if (static_cast<int>(vkey.size()) != k - 1)
    throw std::invalid_argument("ModuleMapFamily: key arity");
  DegreeSeq degs;
  for (int i : vkey) degs.push_back(V->degree(i));
  SortedKey sk = sort_key(std::move(vkey), degs);
  Element v = value.scaled(Rat(sk.sign));
  bool odd_rep = false;
  for (size_t i = 1; i < sk.key.size(); ++i)
    if (sk.key[i] == sk.key[i - 1] && parity(V->degree(sk.key[i]))) odd_rep = true;
  if (odd_rep) {
    if (!v.is_zero()) throw std::invalid_argument("ModuleMapFamily: odd-repeated key");
    return;
  }
  auto& tab = comp[k];
  auto mk = std::make_pair(std::move(sk.key), w);
  if (v.is_zero())
    tab.erase(mk);
  else
    tab.insert_or_assign(std::move(mk), std::move(v));
}

Element ModuleMapFamily::eval_basis(int k, const std::vector<int>& vkey, int w) const {
  DegreeSeq degs;
  for (int i : vkey) degs.push_back(V->degree(i));
  SortedKey sk = sort_key(vkey, degs);
  auto itk = comp.find(k);
  if (itk == comp.end()) return Element::zero(W);
  auto it = itk->second.find({sk.key, w});
  if (it == itk->second.end()) return Element::zero(W);
  return it->second.scaled(Rat(sk.sign));
}

Element ModuleMapFamily::eval(int k, std::span<const Element> vargs, const Element& w) const {
  if (static_cast<int>(vargs.size()) != k - 1)
    throw std::invalid_argument("ModuleMapFamily: arity mismatch");
  Element out = Element::zero(W);
  std::vector<int> key(k - 1);
  std::function<void(int, Rat)> rec = [&](int slot, Rat c) {
    if (slot == k - 1) {
      for (const auto& [wi, wc] : w.coeffs()) out += eval_basis(k, key, wi).scaled(c * wc);
      return;
    }
    for (const auto& [i, x] : vargs[slot].coeffs()) {
      key[slot] = i;
      rec(slot + 1, c * x);
    }
  };
  rec(0, Rat(1));
  return out;
}

namespace {

Report check_module_axioms(const std::map<int, SymMultiMap>& lambda, const ModuleMapFamily& mu,
                           bool right) {
  Report rep;
  const auto& V = mu.V;
  const auto& W = mu.W;
  const int pmu = parity(mu.degree);
  for (int k = 1; k <= mu.cap; ++k) {
    for_each_sorted_tuple(V->dim(), k - 1, [&](const std::vector<int>& vkey) {
      bool odd_rep = false;
      for (size_t i = 1; i < vkey.size(); ++i)
        if (vkey[i] == vkey[i - 1] && parity(V->degree(vkey[i]))) odd_rep = true;
      if (odd_rep) return;
      DegreeSeq degs;
      for (int i : vkey) degs.push_back(V->degree(i));
      for (int w = 0; w < W->dim(); ++w) {
        Element sum1 = Element::zero(W);
        Element sum2 = Element::zero(W);
        for (int i = 1; i <= k - 1; ++i) {
          const int j = k - i;
          auto itl = lambda.find(i);
          if (itl == lambda.end()) continue;
          for (const Permutation& s : unshuffles(i, j - 1)) {
            std::vector<int> inner(i);
            for (int t = 0; t < i; ++t) inner[t] = vkey[s[t] - 1];
            std::vector<Element> vargs;
            vargs.push_back(itl->second.eval_basis(inner));
            for (int t = i; t < k - 1; ++t) vargs.push_back(Element::basis(V, vkey[s[t] - 1]));
            sum1 += mu.eval(j + 1, vargs, Element::basis(W, w)).scaled(Rat(koszul_alpha(s, degs)));
          }
        }
        for (int i = 0; i <= k - 1; ++i) {
          const int j = k - i;
          for (const Permutation& s : unshuffles(i, j - 1)) {
            int chi = 0;
            std::vector<Element> outer;
            for (int t = 0; t < i; ++t) {
              outer.push_back(Element::basis(V, vkey[s[t] - 1]));
              chi ^= parity(degs[s[t] - 1]);
            }
            std::vector<int> inner_key(j - 1);
            for (int t = 0; t < j - 1; ++t) inner_key[t] = vkey[s[i + t] - 1];
            Element innerw = mu.eval_basis(j, inner_key, w);
            if (innerw.is_zero()) continue;
            sum2 += mu.eval(i + 1, outer, innerw)
                        .scaled(Rat(koszul_alpha(s, degs) * sign_pow(chi & pmu)));
          }
        }
        Element resid = right ? sum1 - sum2 : sum1 + sum2;
        if (!resid.is_zero()) {
          std::string where = "k=" + std::to_string(k) + " (";
          for (size_t t = 0; t < vkey.size(); ++t) {
            if (t) where += ",";
            where += V->names[vkey[t]];
          }
          where += "|" + W->names[w] + ")";
          rep.fail(right ? "right-module" : "left-module", where, sum1.str(),
                   right ? sum2.str() : sum2.scaled(Rat(-1)).str());
        }
      }
    });
  }
  return rep;
}

}  // namespace

Report check_linf_module(const std::map<int, SymMultiMap>& lambda, const ModuleMapFamily& mu) {
  return check_module_axioms(lambda, mu, false);
}

Report check_right_linf_module(const std::map<int, SymMultiMap>& lambda,
                               const ModuleMapFamily& rho) {
  return check_module_axioms(lambda, rho, true);
}

std::map<int, SymMultiMap> brackets_as_symmaps(const SHLRAlgebra& S) {
  std::map<int, SymMultiMap> out;
  for (const auto& [k, comp] : S.X.comp) {
    SymMultiMap m = SymMultiMap::zero(k, S.X.degree, S.L->kspace, S.L->kspace);
    for_each_sorted_tuple(S.L->kspace->dim(), k, [&](const std::vector<int>& key) {
      if (has_odd_repeat(*S.L->kspace, key)) return;
      std::vector<Element> args;
      for (int i : key) args.push_back(Element::basis(S.L->kspace, i));
      m.set(key, comp.x_eval(args));
    });
    if (!m.is_zero()) out.emplace(k, std::move(m));
  }
  return out;
}

SkewMultiMap SkewMultiMap::zero(int arity, int map_degree, SpacePtr dom, SpacePtr cod) {
  SkewMultiMap m;
  m.arity = arity;
  m.map_degree = map_degree;
  m.domain = std::move(dom);
  m.codomain = std::move(cod);
  return m;
}

namespace {

struct SkewSorted {
  std::vector<int> key;
  int sign;
};

SkewSorted skew_sort(const GradedSpace& space, const std::vector<int>& key) {
  DegreeSeq degs;
  for (int i : key) degs.push_back(space.degree(i));
  const int n = static_cast<int>(key.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  Permutation sigma(n);
  std::vector<int> rank(n);
  for (int pos = 0; pos < n; ++pos) rank[order[pos]] = pos;
  for (int j = 0; j < n; ++j) sigma[j] = rank[j] + 1;
  DegreeSeq sorted_degs(n);
  std::vector<int> sorted(n);
  for (int pos = 0; pos < n; ++pos) {
    sorted[pos] = key[order[pos]];
    sorted_degs[pos] = degs[order[pos]];
  }
  int inv = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (sigma[i] > sigma[j]) inv ^= 1;
  return SkewSorted{std::move(sorted), koszul_alpha(sigma, sorted_degs) * sign_pow(inv)};
}

bool even_repeat(const GradedSpace& space, const std::vector<int>& key) {
  for (size_t i = 1; i < key.size(); ++i)
    if (key[i] == key[i - 1] && !parity(space.degree(key[i]))) return true;
  return false;
}

}  // namespace

void SkewMultiMap::set(std::vector<int> key, Element value) {
  if (static_cast<int>(key.size()) != arity) throw std::invalid_argument("SkewMultiMap: arity");
  SkewSorted sk = skew_sort(*domain, key);
  Element v = value.scaled(Rat(sk.sign));
  if (even_repeat(*domain, sk.key)) {
    if (!v.is_zero()) throw std::invalid_argument("SkewMultiMap: nonzero on even-repeated key");
    return;
  }
  int expected = map_degree;
  for (int i : sk.key) expected += domain->degree(i);
  if (!v.homogeneous_of(expected)) throw std::invalid_argument("SkewMultiMap: value degree");
  if (v.is_zero())
    table.erase(sk.key);
  else
    table.insert_or_assign(std::move(sk.key), std::move(v));
}

Element SkewMultiMap::eval_basis(const std::vector<int>& key) const {
  SkewSorted sk = skew_sort(*domain, key);
  auto it = table.find(sk.key);
  if (it == table.end()) return Element::zero(codomain);
  return it->second.scaled(Rat(sk.sign));
}

bool operator==(const SkewMultiMap& a, const SkewMultiMap& b) {
  return a.arity == b.arity && a.map_degree == b.map_degree && same_space(a.domain, b.domain) &&
         same_space(a.codomain, b.codomain) && a.table == b.table;
}

SHLRPtr decalage_convert(const ClassicalLInfinity& c) {
  std::vector<std::pair<std::string, int>> gens;
  for (int i = 0; i < c.V->dim(); ++i) gens.emplace_back(c.V->names[i], c.V->degree(i) - 1);
  ModulePtr L = linfinity_module(std::move(gens));
  FormalMultiderivation X = FormalMultiderivation::zero(L, 1, c.cap);
  for (const auto& [k, lk] : c.lambda) {
    if (lk.map_degree != 2 - k)
      throw std::invalid_argument("decalage_convert: bracket degree must be 2-k");
    ModMultiderivation comp = ModMultiderivation::zero(L, k, 1);
    for (const auto& [key, v] : lk.table) {
      DegreeSeq vdegs;
      for (int i : key) vdegs.push_back(c.V->degree(i));
      Element shifted(L->kspace);
      for (const auto& [i, coeff] : v.coeffs())
        shifted.add_term(L->kindex(L->algebra->unit_index, i), coeff);
      comp.set_x(key, shifted.scaled(Rat(decalage_sign(vdegs))));
    }
    if (!comp.is_zero()) X.set_component(std::move(comp));
  }
  return make_shlr(std::move(X));
}

ClassicalLInfinity decalage_invert(const SHLRAlgebra& s, SpacePtr V_unshifted) {
  if (s.L->algebra->space->dim() != 1)
    throw std::invalid_argument("decalage_invert: structure is not over the ground field");
  ClassicalLInfinity c;
  c.V = std::move(V_unshifted);
  c.cap = s.X.cap;
  for (int i = 0; i < c.V->dim(); ++i)
    if (c.V->degree(i) != s.L->gen_degrees[i] + 1)
      throw std::invalid_argument("decalage_invert: degree shift mismatch");
  for (const auto& [k, comp] : s.X.comp) {
    SkewMultiMap lk = SkewMultiMap::zero(k, 2 - k, c.V, c.V);
    for (const auto& [key, v] : comp.x_table) {
      DegreeSeq vdegs;
      for (int i : key) vdegs.push_back(c.V->degree(i));
      Element unshifted(c.V);
      for (const auto& [kidx, coeff] : v.coeffs()) unshifted.add_term(s.L->g_of(kidx), coeff);
      lk.set(key, unshifted.scaled(Rat(decalage_sign(vdegs))));
    }
    if (!lk.table.empty()) c.lambda.emplace(k, std::move(lk));
  }
  return c;
}

Report validate_pinfinity(const PInfinityAlgebra& p) {
  Report rep;
  if (!parity(p.degree))
    rep.fail("structure-degree", "total degree", std::to_string(p.degree), "odd");
  for (const auto& [k, lk] : p.lambda) {
    Report sub = check_alg_multiderivation(*p.P, lk);
    for (auto& f : sub.failures)
      rep.fail(f.check, "Lambda_" + std::to_string(k) + " " + f.where, f.lhs, f.rhs);
  }
  for (int m = 1; m <= p.cap; ++m) {
    SymMultiMap acc = SymMultiMap::zero(m, 2 * p.degree, p.P->space, p.P->space);
    for (const auto& [i, li] : p.lambda)
      for (const auto& [j, lj] : p.lambda) {
        if (i + j - 1 != m) continue;
        acc += gcirc(li.map, lj.map);
      }
    for (const auto& [key, v] : acc.table) {
      std::string where = "arity " + std::to_string(m) + " (";
      for (size_t t = 0; t < key.size(); ++t) {
        if (t) where += ",";
        where += p.P->space->names[key[t]];
      }
      rep.fail("pinfinity-jacobiator", where + ")", v.str(), "0");
    }
  }
  return rep;
}

Tensor InducedPInfinity::bracket(int k, std::span<const Tensor> args) const {
  return nu_apply(base->X, k, args);
}

InducedPInfinity induced_pinfinity(const SHLRPtr& S, int window) {
  InducedPInfinity out;
  out.base = S;
  out.window = window;
  if (!S->valid()) {
    out.validation.fail("base", "structure", "invalid", "valid");
    return out;
  }
  const auto& L = S->L;
  auto Striv = FreeModule::algebra_as_module(L->algebra);
  std::vector<Tensor> basis;
  std::vector<int> basis_layer;
  std::vector<int> word;
  const int ng = L->ngens();
  std::function<void(int)> rec = [&](int lo) {
    for (int a = 0; a < L->algebra->space->dim(); ++a) {
      Tensor t = Tensor::zero(L, Striv);
      t.add_key(Tensor::Key{a, word, 0}, Rat(1));
      if (!t.is_zero()) {
        basis.push_back(std::move(t));
        basis_layer.push_back(static_cast<int>(word.size()));
      }
    }
    if (static_cast<int>(word.size()) >= window) return;
    for (int g = lo; g < ng; ++g) {
      if (!word.empty() && word.back() == g && parity(L->gen_degrees[g])) continue;
      word.push_back(g);
      rec(g);
      word.pop_back();
    }
  };
  rec(0);

  const int cap = S->cap();
  for (int m = 1; m <= std::min(cap, 3); ++m) {
    std::vector<int> pick(m);
    std::function<void(int, int, int)> loop = [&](int slot, int lo, int layer_sum) {
      if (slot == m) {
        std::vector<Tensor> args;
        DegreeSeq degs;
        for (int b : pick) {
          args.push_back(basis[b]);
          degs.push_back(basis[b].degree().value());
        }
        Tensor resid = Tensor::zero(L, Striv);
        for (int i = 1; i <= m; ++i) {
          const int j = m - i;
          if (j + 1 > cap || i > cap) continue;
          for (const Permutation& s : unshuffles(i, j)) {
            std::vector<Tensor> inner;
            for (int t = 0; t < i; ++t) inner.push_back(args[s[t] - 1]);
            Tensor li = nu_apply(S->X, i, inner);
            std::vector<Tensor> outer;
            outer.push_back(li);
            for (int t = i; t < m; ++t) outer.push_back(args[s[t] - 1]);
            resid += nu_apply(S->X, j + 1, outer).scaled(Rat(koszul_alpha(s, degs)));
          }
        }
        if (!resid.is_zero())
          out.validation.fail("pinfinity-window", "m=" + std::to_string(m), resid.str(), "0");
        return;
      }
      for (int b = lo; b < static_cast<int>(basis.size()); ++b) {
        if (layer_sum + basis_layer[b] > window) continue;
        pick[slot] = b;
        loop(slot + 1, b, layer_sum + basis_layer[b]);
      }
    };
    loop(0, 0, 0);
  }
  return out;
}

KahlerResult kahler_lr(const PInfinityInput& in, int cap) {
  KahlerResult out;
  const auto& A = in.P.algebra;
  const int n = A->space->dim();

  // T = P (x) P[-1]: basis (i,j) at flat index i*n + j
  auto tidx = [&](int i, int j) { return i * n + j; };

  std::vector<std::vector<Rat>> rows;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      std::vector<Rat> base(n * n, Rat(0));
      Element ab = A->mul_basis(a, b);
      for (const auto& [mm, c] : ab.coeffs()) base[tidx(A->unit_index, mm)] += c;
      const int pa = parity(A->space->degree(a));
      const int pb = parity(A->space->degree(b));
      base[tidx(a, b)] += Rat(-sign_pow(pa));
      base[tidx(b, a)] += Rat(-sign_pow((pa ^ 1) & pb));
      for (int c = 0; c < n; ++c) {
        std::vector<Rat> row(n * n, Rat(0));
        for (int x = 0; x < n; ++x)
          for (int y = 0; y < n; ++y) {
            if (base[tidx(x, y)].is_zero()) continue;
            Element cx = A->mul_basis(c, x);
            for (const auto& [mm, cc] : cx.coeffs()) row[tidx(mm, y)] += cc * base[tidx(x, y)];
          }
        bool nonzero = false;
        for (const Rat& r : row) nonzero |= !r.is_zero();
        if (nonzero) rows.push_back(std::move(row));
      }
    }

  RatMatrix Q(static_cast<int>(rows.size()), n * n);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < n * n; ++c) Q.at(static_cast<int>(r), c) = rows[r][c];
  const int rankQ = rank_rref(Q);
  out.quotient_dim = n * n - rankQ;
  if (out.quotient_dim == 0) {
    out.degenerate = true;
    out.note = "the Kahler quotient is the zero module";
    return out;
  }

  const int m = static_cast<int>(in.P.gens.size());
  std::vector<int> gen_basis;
  for (int g = 0; g < m; ++g) gen_basis.push_back(in.P.gen_index(g));
  const int nm = n * m;
  if (out.quotient_dim != nm) {
    out.degenerate = true;
    out.note = "quotient dimension " + std::to_string(out.quotient_dim) +
               " does not match a free module of rank " + std::to_string(m);
    return out;
  }
  {
    RatMatrix stack(static_cast<int>(rows.size()) + nm, n * n);
    for (size_t r = 0; r < rows.size(); ++r)
      for (int c = 0; c < n * n; ++c) stack.at(static_cast<int>(r), c) = rows[r][c];
    int rr = static_cast<int>(rows.size());
    for (int c = 0; c < n; ++c)
      for (int g = 0; g < m; ++g) stack.at(rr + c * m + g, tidx(c, gen_basis[g])) = Rat(1);
    if (rank_rref(stack) != rankQ + nm) {
      out.degenerate = true;
      out.note = "d(generators) do not span the quotient freely";
      return out;
    }
  }

  std::vector<std::pair<std::string, int>> omega_gens;
  for (int g = 0; g < m; ++g)
    omega_gens.emplace_back("d" + in.P.gens[g].first, in.P.gens[g].second + 1);
  ModulePtr omega1 = FreeModule::make(A, omega_gens);
  out.omega1 = omega1;

  // d(e_b) = [1 (x) e_b]: solve 1(x)e_b = sum x_{c,g} e_c (x) g mod Q
  {
    const int cols = n * n;
    const int unknowns = nm + static_cast<int>(rows.size());
    for (int b = 0; b < n; ++b) {
      RatMatrix M(cols, unknowns + 1);
      for (int c = 0; c < n; ++c)
        for (int g = 0; g < m; ++g) M.at(tidx(c, gen_basis[g]), c * m + g) = Rat(1);
      for (size_t r = 0; r < rows.size(); ++r)
        for (int cc = 0; cc < cols; ++cc) M.at(cc, nm + static_cast<int>(r)) = rows[r][cc];
      M.at(tidx(A->unit_index, b), unknowns) = Rat(1);
      int rank = 0;
      std::vector<int> pivot_col(cols, -1);
      for (int col = 0; col < unknowns && rank < cols; ++col) {
        int piv = -1;
        for (int r = rank; r < cols; ++r)
          if (!M.at(r, col).is_zero()) {
            piv = r;
            break;
          }
        if (piv < 0) continue;
        for (int c2 = 0; c2 <= unknowns; ++c2) std::swap(M.at(piv, c2), M.at(rank, c2));
        const Rat inv = Rat(1) / M.at(rank, col);
        for (int c2 = 0; c2 <= unknowns; ++c2) M.at(rank, c2) *= inv;
        for (int r = 0; r < cols; ++r) {
          if (r == rank || M.at(r, col).is_zero()) continue;
          const Rat f = M.at(r, col);
          for (int c2 = 0; c2 <= unknowns; ++c2) M.at(r, c2) -= f * M.at(rank, c2);
        }
        pivot_col[rank] = col;
        ++rank;
      }
      Element db(omega1->kspace);
      for (int r = 0; r < rank; ++r) {
        if (pivot_col[r] < nm && !M.at(r, unknowns).is_zero()) {
          const int c = pivot_col[r] / m;
          const int g = pivot_col[r] % m;
          db.add_term(omega1->kindex(c, g), M.at(r, unknowns));
        }
      }
      for (int r = rank; r < cols; ++r)
        if (!M.at(r, unknowns).is_zero()) {
          out.degenerate = true;
          out.note = "universal derivation image left the candidate span";
          return out;
        }
      out.d.push_back(std::move(db));
    }
  }

  FormalMultiderivation X = FormalMultiderivation::zero(omega1, -1, cap);
  for (const auto& [k, lk] : in.lambda) {
    if (lk.map_degree != k - 2)
      throw std::invalid_argument("kahler_lr: Lambda_k must have degree k-2");
    if (k > cap) continue;
    ModMultiderivation comp = ModMultiderivation::zero(omega1, k, -1);
    for_each_sorted_tuple(m, k, [&](const std::vector<int>& gkey) {
      bool odd_rep = false;
      for (size_t i = 1; i < gkey.size(); ++i)
        if (gkey[i] == gkey[i - 1] && parity(omega_gens[gkey[i]].second)) odd_rep = true;
      if (odd_rep) return;
      DegreeSeq fdegs;
      std::vector<int> abasis;
      for (int g : gkey) {
        fdegs.push_back(in.P.gens[g].second);
        abasis.push_back(gen_basis[g]);
      }
      Element lval = lk.eval_basis(abasis);
      Element dval(omega1->kspace);
      for (const auto& [i, c] : lval.coeffs()) dval += out.d[i].scaled(c);
      comp.set_x(gkey, dval.scaled(Rat(decalage_sign(fdegs))));
    });
    for_each_sorted_tuple(m, k - 1, [&](const std::vector<int>& gkey) {
      bool odd_rep = false;
      for (size_t i = 1; i < gkey.size(); ++i)
        if (gkey[i] == gkey[i - 1] && parity(omega_gens[gkey[i]].second)) odd_rep = true;
      if (odd_rep) return;
      DegreeSeq fdegs;
      std::vector<int> abasis;
      for (int g : gkey) {
        fdegs.push_back(in.P.gens[g].second);
        abasis.push_back(gen_basis[g]);
      }
      AlgDerivation d = AlgDerivation::zero(A, 0);
      for (int f = 0; f < n; ++f) {
        std::vector<int> args = abasis;
        args.push_back(f);
        d.cols[f] = lk.eval_basis(args).scaled(Rat(decalage_sign(fdegs)));
      }
      comp.set_sigma(gkey, std::move(d));
    });
    if (!comp.is_zero()) X.set_component(std::move(comp));
  }
  out.S = make_shlr(std::move(X));
  return out;
}

}  // namespace shlr
