#include "shlr/mder.hpp"

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

AlgDerivation AlgDerivation::zero(AlgebraPtr A, int degree) {
  AlgDerivation d;
  d.degree = degree;
  d.cols.assign(A->space->dim(), Element::zero(A->space));
  d.algebra = std::move(A);
  return d;
}

bool AlgDerivation::is_zero() const {
  for (const Element& c : cols)
    if (!c.is_zero()) return false;
  return true;
}

Element AlgDerivation::apply(const Element& a) const {
  Element out = Element::zero(algebra->space);
  for (const auto& [i, c] : a.coeffs()) out += cols[i].scaled(c);
  return out;
}

AlgDerivation& AlgDerivation::operator+=(const AlgDerivation& o) {
  if (!same_algebra(algebra, o.algebra)) throw std::invalid_argument("AlgDerivation: algebra mismatch");
  if (!o.is_zero() && !is_zero() && degree != o.degree)
    throw std::invalid_argument("AlgDerivation: degree mismatch");
  if (is_zero()) degree = o.degree;
  for (size_t i = 0; i < cols.size(); ++i) cols[i] += o.cols[i];
  return *this;
}

AlgDerivation AlgDerivation::scaled(const Rat& c) const {
  AlgDerivation r = *this;
  for (Element& col : r.cols) col = col.scaled(c);
  return r;
}

AlgDerivation AlgDerivation::act_scale(const Element& a) const {
  AlgDerivation r = zero(algebra, degree + a.degree().value_or(0));
  for (size_t i = 0; i < cols.size(); ++i) r.cols[i] = algebra->mul(a, cols[i]);
  return r;
}

AlgDerivation graded_commutator(const AlgDerivation& a, const AlgDerivation& b) {
  AlgDerivation r = AlgDerivation::zero(a.algebra, a.degree + b.degree);
  const int sign = sign_pow(parity(a.degree) & parity(b.degree));
  for (int i = 0; i < a.algebra->space->dim(); ++i)
    r.cols[i] = a.apply(b.cols[i]) - b.apply(a.cols[i]).scaled(Rat(sign));
  return r;
}

bool operator==(const AlgDerivation& a, const AlgDerivation& b) {
  return same_algebra(a.algebra, b.algebra) && a.cols == b.cols &&
         (a.degree == b.degree || a.is_zero());
}

std::string AlgDerivation::str() const {
  std::string out;
  for (int i = 0; i < algebra->space->dim(); ++i) {
    if (cols[i].is_zero()) continue;
    if (!out.empty()) out += "; ";
    out += algebra->space->names[i] + " -> " + cols[i].str();
  }
  return out.empty() ? "0" : out;
}

Report check_derivation(const AlgDerivation& D) {
  Report rep;
  const auto& A = *D.algebra;
  const int n = A.space->dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Element ei = Element::basis(A.space, i), ej = Element::basis(A.space, j);
      Element lhs = D.apply(A.mul(ei, ej));
      Element rhs = A.mul(D.apply(ei), ej) +
                    A.mul(ei, D.apply(ej))
                        .scaled(Rat(sign_pow(parity(D.degree) & parity(A.space->degree(i)))));
      if (!(lhs == rhs))
        rep.fail("leibniz", A.space->names[i] + "," + A.space->names[j], lhs.str(), rhs.str());
    }
  return rep;
}

AlgDerivation derivation_from_gen_values(const FreeCommPresentation& P,
                                         const std::vector<Element>& gen_values, int degree) {
  const auto& A = *P.algebra;
  AlgDerivation D = AlgDerivation::zero(P.algebra, degree);
  for (size_t b = 0; b < P.monomials.size(); ++b) {
    const auto& word = P.monomials[b];
    Element val = Element::zero(A.space);
    for (size_t t = 0; t < word.size(); ++t) {
      // D(g_1 ... g_r) = sum (-1)^{D (g_1 + ... + g_{t-1})} g_1...D(g_t)...g_r
      int lead_par = 0;
      Element term = A.unit;
      for (size_t r = 0; r < t; ++r) {
        term = A.mul(term, Element::basis(A.space, P.gen_index(word[r])));
        lead_par ^= parity(P.gens[word[r]].second);
      }
      term = A.mul(term, gen_values[word[t]]);
      for (size_t r = t + 1; r < word.size(); ++r)
        term = A.mul(term, Element::basis(A.space, P.gen_index(word[r])));
      val += term.scaled(Rat(sign_pow(parity(degree) & lead_par)));
    }
    D.cols[b] = std::move(val);
  }
  return D;
}

Report check_alg_multiderivation(const GradedAlgebra& A, const AlgMultiderivation& H) {
  Report rep;
  const int k = H.arity();
  const int n = A.space->dim();
  if (k < 1) return rep;
  for_each_sorted_tuple(n, k - 1, [&](const std::vector<int>& t) {
    int front_par = parity(H.degree());
    for (int i : t) front_par ^= parity(A.space->degree(i));
    std::vector<Element> args;
    for (int i : t) args.push_back(Element::basis(A.space, i));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Element ea = Element::basis(A.space, a), eb = Element::basis(A.space, b);
        std::vector<Element> lhs_args = args;
        lhs_args.push_back(A.mul(ea, eb));
        Element lhs = H.map.eval(lhs_args);
        std::vector<Element> args_b = args, args_a = args;
        args_b.push_back(eb);
        args_a.push_back(ea);
        Element rhs = A.mul(ea, H.map.eval(args_b))
                          .scaled(Rat(sign_pow(front_par & parity(A.space->degree(a)))));
        rhs += A.mul(H.map.eval(args_a), eb);
        if (!(lhs == rhs))
          rep.fail("multiderivation",
                   "last slot " + A.space->names[a] + "*" + A.space->names[b], lhs.str(),
                   rhs.str());
      }
  });
  return rep;
}

ModMultiderivation ModMultiderivation::zero(ModulePtr L, int arity, int degree) {
  ModMultiderivation m;
  m.L = std::move(L);
  m.arity = arity;
  m.degree = degree;
  return m;
}

void ModMultiderivation::set_x(std::vector<int> key, Element value) {
  if (static_cast<int>(key.size()) != arity) throw std::invalid_argument("mder: x key arity");
  SortedKey sk = sort_key(key, gen_degs(*L, key));
  Element v = value.scaled(Rat(sk.sign));
  if (gen_odd_repeat(*L, sk.key)) {
    if (!v.is_zero()) throw std::invalid_argument("mder: nonzero x on odd-repeated key");
    return;
  }
  int expected = degree;
  for (int g : sk.key) expected += L->gen_degrees[g];
  if (!v.homogeneous_of(expected)) throw std::invalid_argument("mder: x value degree mismatch");
  if (v.is_zero())
    x_table.erase(sk.key);
  else
    x_table.insert_or_assign(std::move(sk.key), std::move(v));
}

void ModMultiderivation::add_x(std::vector<int> key, const Element& value) {
  Element cur = x_eval_gens(key);
  cur += value;
  set_x(std::move(key), std::move(cur));
}

void ModMultiderivation::set_sigma(std::vector<int> key, AlgDerivation value) {
  if (static_cast<int>(key.size()) != arity - 1)
    throw std::invalid_argument("mder: sigma key arity");
  SortedKey sk = sort_key(key, gen_degs(*L, key));
  AlgDerivation v = value.scaled(Rat(sk.sign));
  if (gen_odd_repeat(*L, sk.key)) {
    if (!v.is_zero()) throw std::invalid_argument("mder: nonzero sigma on odd-repeated key");
    return;
  }
  int expected = degree;
  for (int g : sk.key) expected += L->gen_degrees[g];
  v.degree = expected;
  if (v.is_zero())
    s_table.erase(sk.key);
  else
    s_table.insert_or_assign(std::move(sk.key), std::move(v));
}

void ModMultiderivation::add_sigma(std::vector<int> key, const AlgDerivation& value) {
  AlgDerivation cur = sigma_eval_gens(key);
  cur += value;
  set_sigma(std::move(key), std::move(cur));
}

Element ModMultiderivation::x_eval_gens(const std::vector<int>& key) const {
  SortedKey sk = sort_key(key, gen_degs(*L, key));
  auto it = x_table.find(sk.key);
  if (it == x_table.end()) return Element::zero(L->kspace);
  return it->second.scaled(Rat(sk.sign));
}

AlgDerivation ModMultiderivation::sigma_eval_gens(const std::vector<int>& key) const {
  SortedKey sk = sort_key(key, gen_degs(*L, key));
  int expected = degree;
  for (int g : sk.key) expected += L->gen_degrees[g];
  auto it = s_table.find(sk.key);
  if (it == s_table.end()) return AlgDerivation::zero(L->algebra, expected);
  return it->second.scaled(Rat(sk.sign));
}

namespace {

struct Slot {
  int a;
  int g;
};

int slot_degree(const FreeModule& L, const Slot& s) {
  return L.algebra->space->degree(s.a) + L.gen_degrees[s.g];
}

}  // namespace

AlgDerivation ModMultiderivation::sigma_eval(std::span<const Element> args) const {
  if (static_cast<int>(args.size()) != arity - 1)
    throw std::invalid_argument("mder: sigma arity mismatch");
  int deg = degree;
  for (const Element& a : args) deg += a.degree().value_or(0);
  AlgDerivation out = AlgDerivation::zero(L->algebra, deg);
  std::vector<Slot> slots(args.size());
  std::function<void(size_t, Rat)> rec = [&](size_t i, Rat c) {
    if (i == args.size()) {
      int e = 0;
      int acc = parity(degree);
      Element aprod = L->algebra->unit;
      std::vector<int> gens;
      for (const Slot& s : slots) {
        e ^= parity(L->algebra->space->degree(s.a)) & acc;
        acc ^= parity(L->gen_degrees[s.g]);
        aprod = L->algebra->mul(aprod, Element::basis(L->algebra->space, s.a));
        gens.push_back(s.g);
      }
      if (aprod.is_zero()) return;
      AlgDerivation d = sigma_eval_gens(gens).act_scale(aprod).scaled(c * Rat(sign_pow(e)));
      d.degree = out.degree;
      out += d;
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

Element ModMultiderivation::sigma_at(std::span<const Element> args, const Element& a) const {
  return sigma_eval(args).apply(a);
}

Element ModMultiderivation::x_eval(std::span<const Element> args) const {
  if (static_cast<int>(args.size()) != arity) throw std::invalid_argument("mder: x arity mismatch");
  const int unit_idx = L->algebra->unit_index;
  Element out = Element::zero(L->kspace);

  std::function<Element(std::vector<Slot>&)> eval_slots = [&](std::vector<Slot>& slots) -> Element {
    int j = -1;
    for (size_t i = 0; i < slots.size(); ++i)
      if (slots[i].a != unit_idx) {
        j = static_cast<int>(i);
        break;
      }
    if (j < 0) {
      std::vector<int> gens;
      gens.reserve(slots.size());
      for (const Slot& s : slots) gens.push_back(s.g);
      return x_eval_gens(gens);
    }
    // move slot j to the end; Koszul sign over full slot degrees
    int move_par = 0;
    for (size_t r = j + 1; r < slots.size(); ++r) move_par ^= parity(slot_degree(*L, slots[r]));
    move_par &= parity(slot_degree(*L, slots[j]));
    Slot last = slots[j];
    std::vector<Slot> rest;
    rest.reserve(slots.size() - 1);
    for (size_t r = 0; r < slots.size(); ++r)
      if (static_cast<int>(r) != j) rest.push_back(slots[r]);

    // X(rest, a g) = sigma(rest|a) g + (-1)^{(deg + rest degrees) a} a X(rest, g)
    std::vector<Element> rest_elems;
    rest_elems.reserve(rest.size());
    int rest_par = parity(degree);
    for (const Slot& s : rest) {
      rest_elems.push_back(L->act_basis(s.a, L->gen(s.g)));
      rest_par ^= parity(slot_degree(*L, s));
    }
    const int pa = parity(L->algebra->space->degree(last.a));
    Element sig_val = sigma_eval(rest_elems).apply(Element::basis(L->algebra->space, last.a));
    Element term1 = L->act(sig_val, L->gen(last.g));

    std::vector<Slot> rec_slots = rest;
    rec_slots.push_back({unit_idx, last.g});
    Element term2 = L->act_basis(last.a, eval_slots(rec_slots)).scaled(Rat(sign_pow(rest_par & pa)));

    Element sum = term1 + term2;
    return sum.scaled(Rat(sign_pow(move_par)));
  };

  std::vector<Slot> slots(arity);
  std::function<void(int, Rat)> expand = [&](int i, Rat c) {
    if (i == arity) {
      std::vector<Slot> s = slots;
      out += eval_slots(s).scaled(c);
      return;
    }
    for (const auto& [kidx, x] : args[i].coeffs()) {
      slots[i] = {L->a_of(kidx), L->g_of(kidx)};
      expand(i + 1, c * x);
    }
  };
  expand(0, Rat(1));
  return out;
}

ModMultiderivation& ModMultiderivation::operator+=(const ModMultiderivation& o) {
  if (arity != o.arity || degree != o.degree || !same_module(L, o.L))
    throw std::invalid_argument("mder: shape mismatch in sum");
  for (const auto& [k, v] : o.x_table) add_x(k, v);
  for (const auto& [k, v] : o.s_table) add_sigma(k, v);
  return *this;
}

ModMultiderivation ModMultiderivation::scaled(const Rat& c) const {
  ModMultiderivation r = zero(L, arity, degree);
  if (c.is_zero()) return r;
  for (const auto& [k, v] : x_table) r.x_table.emplace(k, v.scaled(c));
  for (const auto& [k, v] : s_table) r.s_table.emplace(k, v.scaled(c));
  return r;
}

bool operator==(const ModMultiderivation& a, const ModMultiderivation& b) {
  return a.arity == b.arity && a.degree == b.degree && same_module(a.L, b.L) &&
         a.x_table == b.x_table && a.s_table == b.s_table;
}

Report check_mder(const ModMultiderivation& X) {
  Report rep;
  for (const auto& [key, d] : X.s_table) {
    Report sub = check_derivation(d);
    for (auto& f : sub.failures) {
      std::string where = "sigma(";
      for (size_t i = 0; i < key.size(); ++i) {
        if (i) where += ",";
        where += X.L->gen_names[key[i]];
      }
      where += ") " + f.where;
      rep.fail("symbol-derivation", where, f.lhs, f.rhs);
    }
  }
  return rep;
}

FormalMultiderivation FormalMultiderivation::zero(ModulePtr L, int degree, int cap) {
  FormalMultiderivation f;
  f.L = std::move(L);
  f.degree = degree;
  f.cap = cap;
  return f;
}

bool FormalMultiderivation::is_zero() const {
  for (const auto& [k, c] : comp)
    if (!c.is_zero()) return false;
  return true;
}

void FormalMultiderivation::set_component(ModMultiderivation c) {
  if (c.degree != degree || !same_module(c.L, L))
    throw std::invalid_argument("formal mder: component shape mismatch");
  if (c.arity < 1 || c.arity > cap)
    throw std::invalid_argument("formal mder: component arity outside 1..cap");
  if (c.is_zero())
    comp.erase(c.arity);
  else
    comp.insert_or_assign(c.arity, std::move(c));
}

const ModMultiderivation* FormalMultiderivation::component(int k) const {
  auto it = comp.find(k);
  return it == comp.end() ? nullptr : &it->second;
}

FormalMultiderivation& FormalMultiderivation::operator+=(const FormalMultiderivation& o) {
  if (degree != o.degree || !same_module(L, o.L))
    throw std::invalid_argument("formal mder: shape mismatch in sum");
  truncated |= o.truncated;
  for (const auto& [k, c] : o.comp) {
    if (k > cap) {
      truncated = true;
      continue;
    }
    auto it = comp.find(k);
    if (it == comp.end()) {
      comp.emplace(k, c);
    } else {
      it->second += c;
      if (it->second.is_zero()) comp.erase(it);
    }
  }
  return *this;
}

FormalMultiderivation FormalMultiderivation::scaled(const Rat& c) const {
  FormalMultiderivation r = zero(L, degree, cap);
  r.truncated = truncated;
  if (c.is_zero()) return r;
  for (const auto& [k, x] : comp) r.comp.emplace(k, x.scaled(c));
  return r;
}

bool operator==(const FormalMultiderivation& a, const FormalMultiderivation& b) {
  return a.degree == b.degree && same_module(a.L, b.L) && a.comp == b.comp;
}

namespace {

// Contribution of (X_k, Y_l) to [X,Y] in arity k + l - 1.
ModMultiderivation bracket_pair(const ModMultiderivation& Xk, const ModMultiderivation& Yl,
                                int deg_x, int deg_y) {
  const auto& L = Xk.L;
  const int k = Xk.arity, l = Yl.arity;
  const int m = k + l - 1;
  const int sign_xy = sign_pow(parity(deg_x) & parity(deg_y));
  ModMultiderivation out = ModMultiderivation::zero(L, m, deg_x + deg_y);

  for_each_sorted_tuple(L->ngens(), m, [&](const std::vector<int>& key) {
    if (gen_odd_repeat(*L, key)) return;
    const DegreeSeq degs = gen_degs(*L, key);
    Element val = Element::zero(L->kspace);
    for (const Permutation& s : unshuffles(l, k - 1)) {
      std::vector<int> inner(l);
      for (int i = 0; i < l; ++i) inner[i] = key[s[i] - 1];
      std::vector<Element> args;
      args.reserve(k);
      args.push_back(Yl.x_eval_gens(inner));
      for (int i = l; i < m; ++i) args.push_back(L->gen(key[s[i] - 1]));
      val += Xk.x_eval(args).scaled(Rat(koszul_alpha(s, degs)));
    }
    for (const Permutation& s : unshuffles(k, l - 1)) {
      std::vector<int> inner(k);
      for (int i = 0; i < k; ++i) inner[i] = key[s[i] - 1];
      std::vector<Element> args;
      args.reserve(l);
      args.push_back(Xk.x_eval_gens(inner));
      for (int i = k; i < m; ++i) args.push_back(L->gen(key[s[i] - 1]));
      val += Yl.x_eval(args).scaled(Rat(-sign_xy * koszul_alpha(s, degs)));
    }
    out.set_x(key, val);
  });

  for_each_sorted_tuple(L->ngens(), m - 1, [&](const std::vector<int>& key) {
    if (gen_odd_repeat(*L, key)) return;
    const DegreeSeq degs = gen_degs(*L, key);
    int expected = out.degree;
    for (int g : key) expected += L->gen_degrees[g];
    AlgDerivation val = AlgDerivation::zero(L->algebra, expected);
    if (k >= 2) {
      for (const Permutation& s : unshuffles(l, k - 2)) {
        std::vector<int> inner(l);
        for (int i = 0; i < l; ++i) inner[i] = key[s[i] - 1];
        std::vector<Element> args;
        args.reserve(k - 1);
        args.push_back(Yl.x_eval_gens(inner));
        for (int i = l; i < m - 1; ++i) args.push_back(L->gen(key[s[i] - 1]));
        AlgDerivation d = Xk.sigma_eval(args).scaled(Rat(koszul_alpha(s, degs)));
        d.degree = expected;
        val += d;
      }
    }
    if (l >= 2) {
      for (const Permutation& s : unshuffles(k, l - 2)) {
        std::vector<int> inner(k);
        for (int i = 0; i < k; ++i) inner[i] = key[s[i] - 1];
        std::vector<Element> args;
        args.reserve(l - 1);
        args.push_back(Xk.x_eval_gens(inner));
        for (int i = k; i < m - 1; ++i) args.push_back(L->gen(key[s[i] - 1]));
        AlgDerivation d = Yl.sigma_eval(args).scaled(Rat(-sign_xy * koszul_alpha(s, degs)));
        d.degree = expected;
        val += d;
      }
    }
    for (const Permutation& s : unshuffles(k - 1, l - 1)) {
      std::vector<int> first(k - 1), second(l - 1);
      int first_par = 0;
      for (int i = 0; i < k - 1; ++i) {
        first[i] = key[s[i] - 1];
        first_par ^= parity(degs[s[i] - 1]);
      }
      for (int i = 0; i < l - 1; ++i) second[i] = key[s[k - 1 + i] - 1];
      AlgDerivation c = graded_commutator(Xk.sigma_eval_gens(first), Yl.sigma_eval_gens(second));
      c = c.scaled(Rat(koszul_alpha(s, degs) * sign_pow(parity(deg_y) & first_par)));
      c.degree = expected;
      val += c;
    }
    out.set_sigma(key, val);
  });

  return out;
}

}  // namespace

FormalMultiderivation mder_bracket(const FormalMultiderivation& a,
                                   const FormalMultiderivation& b) {
  if (!same_module(a.L, b.L)) throw std::invalid_argument("mder_bracket: module mismatch");
  const int cap = std::min(a.cap, b.cap);
  FormalMultiderivation out = FormalMultiderivation::zero(a.L, a.degree + b.degree, cap);
  for (const auto& [k, Xk] : a.comp)
    for (const auto& [l, Yl] : b.comp) {
      if (k + l - 1 > cap) {
        out.truncated = true;
        continue;
      }
      ModMultiderivation c = bracket_pair(Xk, Yl, a.degree, b.degree);
      auto it = out.comp.find(c.arity);
      if (it == out.comp.end()) {
        if (!c.is_zero()) out.comp.emplace(c.arity, std::move(c));
      } else {
        it->second += c;
        if (it->second.is_zero()) out.comp.erase(it);
      }
    }
  return out;
}

Form FormDerivation::apply(int k, const Form& w) const {
  auto it = comp.find(k);
  if (it == comp.end()) return Form::zero(L, A_mod, w.arity + k - 1, w.degree + degree);
  return it->second(w);
}

std::map<int, Form> FormDerivation::apply_all(const Form& w) const {
  std::map<int, Form> out;
  for (const auto& [k, f] : comp) out.emplace(k, f(w));
  return out;
}

FormDerivation eta(const FormalMultiderivation& X) {
  FormDerivation D;
  D.L = X.L;
  D.A_mod = FreeModule::algebra_as_module(X.L->algebra);
  D.degree = X.degree;
  for (const auto& [arity, comp] : X.comp) {
    const ModMultiderivation Xk = comp;
    const int k = arity;
    const int deg = X.degree;
    ModulePtr A_mod = D.A_mod;
    D.comp.emplace(k, [Xk, k, deg, A_mod](const Form& w) -> Form {
      const auto& L = Xk.L;
      if (!same_module(w.L, L)) throw std::invalid_argument("eta: form domain mismatch");
      if (w.P->ngens() != 1 || w.P->gen_degrees[0] != 0)
        throw std::invalid_argument("eta: form must be A-valued");
      const int l = w.arity;
      Form out = Form::zero(L, A_mod, l + k - 1, w.degree + deg);
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
          val += Xk.sigma_eval_gens(first).apply(wv).scaled(
              Rat(koszul_alpha(s, degs) * sign_pow(pw & first_par)));
        }
        if (l >= 1) {
          const int sxw = sign_pow(parity(deg) & pw);
          for (const Permutation& s : unshuffles(k, l - 1)) {
            std::vector<int> inner(k);
            for (int i = 0; i < k; ++i) inner[i] = key[s[i] - 1];
            std::vector<Element> args;
            args.reserve(l);
            args.push_back(Xk.x_eval_gens(inner));
            for (int i = k; i < l + k - 1; ++i) args.push_back(L->gen(key[s[i] - 1]));
            val += to_algebra(*w.P, w.eval(args)).scaled(Rat(-sxw * koszul_alpha(s, degs)));
          }
        }
        out.set(key, from_algebra(*A_mod, val));
      });
      return out;
    });
  }
  return D;
}

FormalMultiderivation eta_inverse(const FormDerivation& D, ModulePtr L, int cap,
                                  int leibniz_arity) {
  auto A_mod = FreeModule::algebra_as_module(L->algebra);
  const int n = L->algebra->space->dim();
  // reject non-derivations
  std::vector<Form> probes;
  for (int ar = 0; ar <= leibniz_arity; ++ar) {
    for_each_sorted_tuple(L->ngens(), ar, [&](const std::vector<int>& key) {
      if (gen_odd_repeat(*L, key)) return;
      for (int i = 0; i < n; ++i) {
        int deg = L->algebra->space->degree(i);
        for (int g : key) deg -= L->gen_degrees[g];
        Form f = Form::zero(L, A_mod, ar, deg);
        f.set(key, from_algebra(*A_mod, Element::basis(L->algebra->space, i)));
        probes.push_back(std::move(f));
      }
    });
  }
  for (const auto& [k, Dk] : D.comp) {
    for (const Form& f : probes)
      for (const Form& g : probes) {
        if (f.arity + g.arity > leibniz_arity) continue;
        Form lhs = Dk(form_product(f, g));
        Form rhs = form_product(Dk(f), g);
        rhs += form_product(f, Dk(g)).scaled(Rat(sign_pow(parity(D.degree) & parity(f.degree))));
        if (!(lhs == rhs))
          throw std::invalid_argument("eta_inverse: component " + std::to_string(k) +
                                      " violates the Leibniz rule on forms");
      }
  }

  FormalMultiderivation X = FormalMultiderivation::zero(L, D.degree, cap);
  for (const auto& [k, Dk] : D.comp) {
    if (k > cap) {
      X.truncated = true;
      continue;
    }
    ModMultiderivation Xk = ModMultiderivation::zero(L, k, D.degree);
    // sigma_D(t|a) = (-1)^{(t degrees) a} (D a)(t)
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& t) {
      if (gen_odd_repeat(*L, t)) return;
      int tpar = 0;
      for (int g : t) tpar ^= parity(L->gen_degrees[g]);
      AlgDerivation d = AlgDerivation::zero(L->algebra, 0);
      for (int a = 0; a < n; ++a) {
        Form a0 =
            Form::from_value(L, A_mod, from_algebra(*A_mod, Element::basis(L->algebra->space, a)));
        Form Da = Dk(a0);
        d.cols[a] = to_algebra(*A_mod, Da.eval_gens(t))
                        .scaled(Rat(sign_pow(tpar & parity(L->algebra->space->degree(a)))));
      }
      Xk.set_sigma(t, std::move(d));
    });
    // X_D from dual one-forms: theta_i(X_D(t)) = (-1)^{theta_i D} (D theta_i)(t)
    std::vector<Form> dtheta;
    for (int i = 0; i < L->ngens(); ++i) {
      Form theta = Form::zero(L, A_mod, 1, -L->gen_degrees[i]);
      theta.set({i}, from_algebra(*A_mod, L->algebra->unit));
      dtheta.push_back(Dk(theta));
    }
    for_each_sorted_tuple(L->ngens(), k, [&](const std::vector<int>& t) {
      if (gen_odd_repeat(*L, t)) return;
      int tpar = 0;
      for (int g : t) tpar ^= parity(L->gen_degrees[g]);
      Element val = Element::zero(L->kspace);
      for (int i = 0; i < L->ngens(); ++i) {
        const int pg = parity(L->gen_degrees[i]);
        Element ci = to_algebra(*A_mod, dtheta[i].eval_gens(t));
        if (ci.is_zero()) continue;
        // D theta_i(t) = -(-1)^{D g_i} theta_i(X(t)) on generator tuples, and
        // unwrapping theta_i(c_i g_i) = (-1)^{c_i g_i} c_i leaves this sign:
        ci = ci.scaled(Rat(-sign_pow((pg & tpar) ^ pg)));
        val += L->act(ci, L->gen(i));
      }
      Xk.set_x(t, val);
    });
    X.set_component(std::move(Xk));
  }
  return X;
}

namespace {

Tensor tensor_mul_right(const Tensor& U, const std::vector<int>& gens) {
  Tensor out = Tensor::zero(U.L, U.Q);
  for (const auto& [k, c] : U.coeffs) {
    Tensor::Key nk = k;
    nk.gens.insert(nk.gens.end(), gens.begin(), gens.end());
    out.add_key(std::move(nk), c);
  }
  return out;
}

}  // namespace

Tensor nu_apply(const FormalMultiderivation& X, int k, std::span<const Tensor> args) {
  if (static_cast<int>(args.size()) != k || k < 1)
    throw std::invalid_argument("nu: arity mismatch");
  const auto& L = X.L;
  for (const Tensor& t : args)
    if (!same_module(t.L, L) || t.Q->ngens() != 1 || t.Q->gen_degrees[0] != 0)
      throw std::invalid_argument("nu: arguments must be plain tensors over L");
  ModulePtr S = args[0].Q;
  Tensor out = Tensor::zero(L, S);
  const ModMultiderivation* Xk = X.component(k);
  if (!Xk) return out;
  const int unit_idx = L->algebra->unit_index;

  using Key = Tensor::Key;
  auto slot_deg = [&](const Key& s) {
    int d = L->algebra->space->degree(s.a);
    for (int g : s.gens) d += L->gen_degrees[g];
    return d;
  };

  std::function<Tensor(std::vector<Key>&)> eval_slots = [&](std::vector<Key>& slots) -> Tensor {
    int j = -1;
    for (size_t i = 0; i < slots.size(); ++i) {
      const Key& s = slots[i];
      if (s.gens.size() >= 2 || (s.gens.size() == 1 && s.a != unit_idx)) {
        j = static_cast<int>(i);
        break;
      }
    }
    if (j < 0) {
      std::vector<int> a_slots, gens;
      for (size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].gens.empty())
          a_slots.push_back(static_cast<int>(i));
        else
          gens.push_back(slots[i].gens[0]);
      }
      if (a_slots.size() >= 2) return Tensor::zero(L, S);
      if (a_slots.empty()) return tensor_of_elem(L, Xk->x_eval_gens(gens), S);
      // one algebra slot: move it last
      const int ai = a_slots[0];
      int move_par = 0;
      for (size_t r = ai + 1; r < slots.size(); ++r) move_par ^= parity(slot_deg(slots[r]));
      move_par &= parity(slot_deg(slots[ai]));
      std::vector<int> rest_gens;
      for (size_t r = 0; r < slots.size(); ++r)
        if (static_cast<int>(r) != ai) rest_gens.push_back(slots[r].gens[0]);
      Element v =
          Xk->sigma_eval_gens(rest_gens).apply(Element::basis(L->algebra->space, slots[ai].a));
      Tensor t = Tensor::zero(L, S);
      for (const auto& [i, c] : v.coeffs()) t.add_key(Key{i, {}, 0}, c);
      return t.scaled(Rat(sign_pow(move_par)));
    }
    // composite slot: move to the end, split off one factor, apply Leibniz
    int move_par = 0;
    for (size_t r = j + 1; r < slots.size(); ++r) move_par ^= parity(slot_deg(slots[r]));
    move_par &= parity(slot_deg(slots[j]));
    Key last = slots[j];
    std::vector<Key> rest;
    for (size_t r = 0; r < slots.size(); ++r)
      if (static_cast<int>(r) != j) rest.push_back(slots[r]);
    int rest_par = parity(X.degree);
    for (const Key& s : rest) rest_par ^= parity(slot_deg(s));

    Key v, w;  // last = v w
    if (last.a != unit_idx) {
      v = Key{last.a, {}, 0};
      w = Key{unit_idx, last.gens, 0};
    } else {
      v = Key{unit_idx, {last.gens[0]}, 0};
      w = Key{unit_idx, std::vector<int>(last.gens.begin() + 1, last.gens.end()), 0};
    }
    const int pv = parity(slot_deg(v));

    // nu(rest, v w) = (-1)^{(deg + rest) v} v nu(rest, w) + nu(rest, v) w
    std::vector<Key> s1 = rest;
    s1.push_back(w);
    Tensor t1 = eval_slots(s1);
    if (v.gens.empty())
      t1 = tensor_act(Element::basis(L->algebra->space, v.a), t1);
    else
      t1 = tensor_mul_gen(t1, v.gens[0]);
    t1 = t1.scaled(Rat(sign_pow(rest_par & pv)));

    std::vector<Key> s2 = rest;
    s2.push_back(v);
    Tensor t2 = eval_slots(s2);
    if (!w.gens.empty()) t2 = tensor_mul_right(t2, w.gens);

    Tensor sum = t1;
    sum += t2;
    return sum.scaled(Rat(sign_pow(move_par)));
  };

  std::vector<Key> slots(k);
  std::function<void(int, Rat)> expand = [&](int i, Rat c) {
    if (i == k) {
      std::vector<Key> s = slots;
      out += eval_slots(s).scaled(c);
      return;
    }
    for (const auto& [key, x] : args[i].coeffs) {
      slots[i] = key;
      expand(i + 1, c * x);
    }
  };
  expand(0, Rat(1));
  return out;
}

}  // namespace shlr
