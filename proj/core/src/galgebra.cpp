#include "shlr/galgebra.hpp"

#include <algorithm>
#include <stdexcept>

namespace shlr {

void Report::fail(std::string check, std::string where, std::string lhs, std::string rhs) {
  failures.push_back({std::move(check), std::move(where), std::move(lhs), std::move(rhs)});
}

std::string Report::str() const {
  if (ok()) return "ok";
  std::string out;
  for (const auto& f : failures) {
    out += f.check + " at " + f.where + ": lhs = " + f.lhs + ", rhs = " + f.rhs + "\n";
  }
  return out;
}

Element GradedAlgebra::mul(const Element& a, const Element& b) const {
  const Element args[2] = {a, b};
  return product.eval(args);
}

std::shared_ptr<const GradedAlgebra> GradedAlgebra::make(SpacePtr space, SymMultiMap product,
                                                         Element unit) {
  if (!same_space(product.domain, space) || !same_space(product.codomain, space))
    throw std::invalid_argument("GradedAlgebra: product space mismatch");
  if (product.arity != 2 || product.map_degree != 0)
    throw std::invalid_argument("GradedAlgebra: product must be binary of degree 0");
  if (unit.coeffs().size() != 1 || !unit.coeffs().begin()->second.is_one())
    throw std::invalid_argument("GradedAlgebra: unit must be a single basis vector");
  auto A = std::make_shared<GradedAlgebra>(std::move(space), std::move(product), std::move(unit));
  A->unit_index = A->unit.coeffs().begin()->first;
  if (A->space->degree(A->unit_index) != 0)
    throw std::invalid_argument("GradedAlgebra: unit must have degree 0");
  return A;
}

std::shared_ptr<const GradedAlgebra> GradedAlgebra::ground_field() {
  auto space = GradedSpace::make({{"1", 0}});
  SymMultiMap prod = SymMultiMap::zero(2, 0, space, space);
  prod.set({0, 0}, Element::basis(space, 0));
  return make(space, std::move(prod), Element::basis(space, 0));
}

bool same_algebra(const AlgebraPtr& a, const AlgebraPtr& b) {
  return a == b || (a && b && same_space(a->space, b->space) && a->product == b->product &&
                    a->unit == b->unit);
}

int FreeCommPresentation::gen_index(int g) const {
  for (size_t i = 0; i < monomials.size(); ++i)
    if (monomials[i].size() == 1 && monomials[i][0] == g) return static_cast<int>(i);
  throw std::logic_error("FreeCommPresentation: generator not in basis");
}

FreeCommPresentation free_graded_commutative_presented(
    const std::vector<std::pair<std::string, int>>& gens, int max_word_len) {
  const int n = static_cast<int>(gens.size());
  for (const auto& [name, d] : gens)
    if (!parity(d) && max_word_len > 32)
      throw std::invalid_argument("free_graded_commutative: even generator needs a word cap");
  std::vector<std::vector<int>> monos;  // ascending generator index words
  std::vector<int> word;
  std::function<void(int)> build = [&](int lo) {
    monos.push_back(word);
    if (static_cast<int>(word.size()) >= max_word_len) return;
    for (int g = lo; g < n; ++g) {
      if (!word.empty() && word.back() == g && parity(gens[g].second)) continue;
      word.push_back(g);
      build(g);
      word.pop_back();
    }
  };
  build(0);
  std::sort(monos.begin(), monos.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  auto name_of = [&](const std::vector<int>& m) {
    if (m.empty()) return std::string("1");
    std::string s;
    for (size_t i = 0; i < m.size(); ++i) {
      if (i) s += ".";
      s += gens[m[i]].first;
    }
    return s;
  };
  std::vector<std::pair<std::string, int>> basis;
  std::map<std::vector<int>, int> index;
  for (const auto& m : monos) {
    int d = 0;
    for (int g : m) d += gens[g].second;
    index.emplace(m, static_cast<int>(basis.size()));
    basis.emplace_back(name_of(m), d);
  }
  auto space = GradedSpace::make(basis);
  SymMultiMap prod = SymMultiMap::zero(2, 0, space, space);
  const int dim = static_cast<int>(monos.size());
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      std::vector<int> merged = monos[i];
      merged.insert(merged.end(), monos[j].begin(), monos[j].end());
      if (static_cast<int>(merged.size()) > max_word_len) continue;
      DegreeSeq degs;
      for (int g : merged) degs.push_back(gens[g].second);
      SortedKey sk = sort_key(merged, degs);
      bool odd_repeat = false;
      for (size_t t = 1; t < sk.key.size(); ++t)
        if (sk.key[t] == sk.key[t - 1] && parity(gens[sk.key[t]].second)) odd_repeat = true;
      if (odd_repeat) continue;
      auto it = index.find(sk.key);
      if (it == index.end()) continue;
      prod.set({i, j}, Element::basis(space, it->second).scaled(Rat(sk.sign)));
    }
  FreeCommPresentation out;
  out.algebra = GradedAlgebra::make(space, std::move(prod), Element::basis(space, 0));
  out.gens = gens;
  out.monomials = std::move(monos);
  return out;
}

AlgebraPtr free_graded_commutative(const std::vector<std::pair<std::string, int>>& gens,
                                   int max_word_len) {
  return free_graded_commutative_presented(gens, max_word_len).algebra;
}

Report validate_algebra(const GradedAlgebra& A) {
  Report rep;
  const int n = A.space->dim();
  for (int i = 0; i < n; ++i) {
    Element ei = Element::basis(A.space, i);
    Element left = A.mul(A.unit, ei);
    Element right = A.mul(ei, A.unit);
    if (!(left == ei))
      rep.fail("unit", A.space->names[i], left.str(), ei.str());
    else if (!(right == ei))
      rep.fail("unit", A.space->names[i], right.str(), ei.str());
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Element ei = Element::basis(A.space, i), ej = Element::basis(A.space, j),
                ek = Element::basis(A.space, k);
        Element lhs = A.mul(A.mul(ei, ej), ek);
        Element rhs = A.mul(ei, A.mul(ej, ek));
        if (!(lhs == rhs))
          rep.fail("associativity",
                   A.space->names[i] + "," + A.space->names[j] + "," + A.space->names[k],
                   lhs.str(), rhs.str());
      }
  return rep;
}

Element FreeModule::gen(int g) const {
  Element e(kspace);
  for (const auto& [i, c] : algebra->unit.coeffs()) e.add_term(kindex(i, g), c);
  return e;
}

Element FreeModule::act(const Element& a, const Element& m) const {
  Element out(kspace);
  for (const auto& [i, c] : a.coeffs())
    for (const auto& [kidx, d] : m.coeffs()) {
      Element prod = algebra->mul_basis(i, a_of(kidx));
      for (const auto& [ip, cp] : prod.coeffs()) out.add_term(kindex(ip, g_of(kidx)), c * d * cp);
    }
  return out;
}

Element FreeModule::act_basis(int a_idx, const Element& m) const {
  return act(Element::basis(algebra->space, a_idx), m);
}

std::vector<Element> FreeModule::alg_coords(const Element& m) const {
  std::vector<Element> out(ngens(), Element::zero(algebra->space));
  for (const auto& [kidx, c] : m.coeffs()) out[g_of(kidx)].add_term(a_of(kidx), c);
  return out;
}

std::shared_ptr<const FreeModule> FreeModule::make(
    AlgebraPtr algebra, std::vector<std::pair<std::string, int>> gens) {
  auto M = std::make_shared<FreeModule>();
  M->algebra = std::move(algebra);
  std::vector<std::pair<std::string, int>> basis;
  for (auto& [name, deg] : gens) {
    M->gen_names.push_back(name);
    M->gen_degrees.push_back(deg);
  }
  for (int i = 0; i < M->algebra->space->dim(); ++i)
    for (int g = 0; g < M->ngens(); ++g)
      basis.emplace_back(M->algebra->space->names[i] + "*" + M->gen_names[g],
                         M->algebra->space->degree(i) + M->gen_degrees[g]);
  M->kspace = GradedSpace::make(std::move(basis));
  return M;
}

std::shared_ptr<const FreeModule> FreeModule::algebra_as_module(AlgebraPtr algebra) {
  return make(std::move(algebra), {{"1", 0}});
}

bool same_module(const ModulePtr& a, const ModulePtr& b) {
  return a == b || (a && b && same_algebra(a->algebra, b->algebra) &&
                    a->gen_names == b->gen_names && a->gen_degrees == b->gen_degrees);
}

Element to_algebra(const FreeModule& rank_one, const Element& m) {
  if (rank_one.ngens() != 1) throw std::invalid_argument("to_algebra: module is not rank one");
  Element out(rank_one.algebra->space);
  for (const auto& [kidx, c] : m.coeffs()) out.add_term(rank_one.a_of(kidx), c);
  return out;
}

Element from_algebra(const FreeModule& rank_one, const Element& a) {
  if (rank_one.ngens() != 1) throw std::invalid_argument("from_algebra: module is not rank one");
  Element out(rank_one.kspace);
  for (const auto& [i, c] : a.coeffs()) out.add_term(rank_one.kindex(i, 0), c);
  return out;
}

Form Form::zero(ModulePtr L, ModulePtr P, int arity, int degree) {
  Form f;
  f.L = std::move(L);
  f.P = std::move(P);
  f.arity = arity;
  f.degree = degree;
  return f;
}

Form Form::from_value(ModulePtr L, ModulePtr P, const Element& value) {
  const auto d = value.degree();
  Form f = zero(std::move(L), std::move(P), 0, d.value_or(0));
  if (!value.is_zero()) {
    if (!d) throw std::invalid_argument("Form: 0-form value must be homogeneous");
    f.table.emplace(std::vector<int>{}, value);
  }
  return f;
}

namespace {
DegreeSeq gen_degrees_of(const FreeModule& L, const std::vector<int>& key) {
  DegreeSeq d;
  d.reserve(key.size());
  for (int g : key) d.push_back(L.gen_degrees[g]);
  return d;
}

bool key_has_odd_repeat(const FreeModule& L, const std::vector<int>& key) {
  for (size_t i = 1; i < key.size(); ++i)
    if (key[i] == key[i - 1] && parity(L.gen_degrees[key[i]])) return true;
  return false;
}
}  // namespace

void Form::set(std::vector<int> key, Element value) {
  if (static_cast<int>(key.size()) != arity) throw std::invalid_argument("Form: key arity");
  if (!same_space(value.space(), P->kspace)) throw std::invalid_argument("Form: value space");
  SortedKey sk = sort_key(key, gen_degrees_of(*L, key));
  Element v = value.scaled(Rat(sk.sign));
  if (key_has_odd_repeat(*L, sk.key)) {
    if (!v.is_zero()) throw std::invalid_argument("Form: nonzero value on odd-repeated key");
    return;
  }
  int expected = degree;
  for (int g : sk.key) expected += L->gen_degrees[g];
  if (!v.homogeneous_of(expected)) throw std::invalid_argument("Form: value degree mismatch");
  if (v.is_zero())
    table.erase(sk.key);
  else
    table.insert_or_assign(std::move(sk.key), std::move(v));
}

void Form::add(std::vector<int> key, Element value) {
  Element cur = eval_gens(key);
  cur += value;
  set(std::move(key), std::move(cur));
}

Element Form::eval_gens(const std::vector<int>& key) const {
  if (static_cast<int>(key.size()) != arity) throw std::invalid_argument("Form: key arity");
  SortedKey sk = sort_key(key, gen_degrees_of(*L, key));
  auto it = table.find(sk.key);
  if (it == table.end()) return Element::zero(P->kspace);
  return it->second.scaled(Rat(sk.sign));
}

Element Form::eval(std::span<const Element> args) const {
  if (static_cast<int>(args.size()) != arity) throw std::invalid_argument("Form: arity mismatch");
  Element out = Element::zero(P->kspace);
  std::vector<int> a_idx(arity), g_idx(arity);
  std::function<void(int, Rat)> rec = [&](int slot, Rat c) {
    if (slot == arity) {
      // pull coefficients out left to right: a_j crosses the form and the
      // generators of the earlier slots
      int e = 0;
      int acc = parity(degree);
      Element aprod = L->algebra->unit;
      for (int j = 0; j < arity; ++j) {
        e ^= parity(L->algebra->space->degree(a_idx[j])) & acc;
        acc ^= parity(L->gen_degrees[g_idx[j]]);
        aprod = L->algebra->mul(aprod, Element::basis(L->algebra->space, a_idx[j]));
      }
      if (aprod.is_zero()) return;
      Element v = P->act(aprod, eval_gens(g_idx));
      out += v.scaled(c * Rat(sign_pow(e)));
      return;
    }
    for (const auto& [kidx, x] : args[slot].coeffs()) {
      a_idx[slot] = L->a_of(kidx);
      g_idx[slot] = L->g_of(kidx);
      rec(slot + 1, c * x);
    }
  };
  rec(0, Rat(1));
  return out;
}

Form& Form::operator+=(const Form& o) {
  if (!same_module(L, o.L) || !same_module(P, o.P))
    throw std::invalid_argument("Form: module mismatch in sum");
  // a zero form belongs to every arity and degree
  if (o.is_zero()) return *this;
  if (is_zero()) {
    arity = o.arity;
    degree = o.degree;
  }
  if (arity != o.arity || degree != o.degree)
    throw std::invalid_argument("Form: shape mismatch in sum");
  for (const auto& [k, v] : o.table) add(k, v);
  return *this;
}

Form& Form::operator-=(const Form& o) {
  *this += o.scaled(Rat(-1));
  return *this;
}

Form Form::scaled(const Rat& c) const {
  Form r = zero(L, P, arity, degree);
  if (c.is_zero()) return r;
  for (const auto& [k, v] : table) r.table.emplace(k, v.scaled(c));
  return r;
}

bool operator==(const Form& a, const Form& b) {
  if (!same_module(a.L, b.L) || !same_module(a.P, b.P)) return false;
  if (a.table.empty() && b.table.empty()) return true;
  return a.arity == b.arity && a.degree == b.degree && a.table == b.table;
}

std::string Form::str() const {
  if (table.empty()) return "0";
  std::string out;
  for (const auto& [k, v] : table) {
    if (!out.empty()) out += "; ";
    out += "(";
    for (size_t i = 0; i < k.size(); ++i) {
      if (i) out += ",";
      out += L->gen_names[k[i]];
    }
    out += ") -> " + v.str();
  }
  return out;
}

Form form_product(const Form& w, const Form& W) {
  if (w.P->ngens() != 1 || w.P->gen_degrees[0] != 0)
    throw std::invalid_argument("form_product: left factor must be A-valued");
  return form_product_with(
      w, W, [&](const Element& a, const Element& p) { return W.P->act(to_algebra(*w.P, a), p); },
      W.P);
}

Form form_product_with(const Form& w, const Form& W,
                       const std::function<Element(const Element&, const Element&)>& pair,
                       ModulePtr out_values) {
  if (!same_module(w.L, W.L)) throw std::invalid_argument("form_product: domain mismatch");
  const int k = w.arity, kp = W.arity;
  Form r = Form::zero(W.L, std::move(out_values), k + kp, w.degree + W.degree);
  const auto shuffles = unshuffles(k, kp);
  for_each_sorted_tuple(w.L->ngens(), k + kp, [&](const std::vector<int>& key) {
    if (key_has_odd_repeat(*w.L, key)) return;
    const DegreeSeq degs = gen_degrees_of(*w.L, key);
    Element val = Element::zero(r.P->kspace);
    for (const Permutation& s : shuffles) {
      std::vector<int> left(k), right(kp);
      int chi = 0;
      for (int i = 0; i < k; ++i) {
        left[i] = key[s[i] - 1];
        chi ^= parity(degs[s[i] - 1]);
      }
      for (int i = 0; i < kp; ++i) right[i] = key[s[k + i] - 1];
      chi &= parity(W.degree);
      Element lv = w.eval_gens(left);
      if (lv.is_zero()) continue;
      Element rv = W.eval_gens(right);
      if (rv.is_zero()) continue;
      val += pair(lv, rv).scaled(Rat(koszul_alpha(s, degs) * sign_pow(chi)));
    }
    if (!val.is_zero()) r.table.emplace(key, std::move(val));
  });
  return r;
}

Tensor Tensor::zero(ModulePtr L, ModulePtr Q) {
  Tensor t;
  t.L = std::move(L);
  t.Q = std::move(Q);
  return t;
}

Tensor Tensor::unit(ModulePtr L, ModulePtr Q, int q_gen) {
  Tensor t = zero(std::move(L), std::move(Q));
  for (const auto& [i, c] : t.L->algebra->unit.coeffs()) t.coeffs[Key{i, {}, q_gen}] = c;
  return t;
}

Tensor Tensor::monomial(ModulePtr L, ModulePtr Q, std::vector<int> gens, int q_gen) {
  Tensor t = unit(L, Q, q_gen);
  for (auto it = gens.rbegin(); it != gens.rend(); ++it) t = tensor_mul_gen(t, *it);
  return t;
}

void Tensor::add_key(Key k, const Rat& c) {
  if (c.is_zero()) return;
  SortedKey sk = sort_key(k.gens, gen_degrees_of(*L, k.gens));
  if (key_has_odd_repeat(*L, sk.key)) return;  // odd squares vanish in S
  k.gens = std::move(sk.key);
  const Rat v = c * Rat(sk.sign);
  auto it = coeffs.find(k);
  if (it == coeffs.end()) {
    coeffs.emplace(std::move(k), v);
  } else {
    it->second += v;
    if (it->second.is_zero()) coeffs.erase(it);
  }
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (!same_module(L, o.L) || !same_module(Q, o.Q))
    throw std::invalid_argument("Tensor: module mismatch");
  for (const auto& [k, c] : o.coeffs) add_key(k, c);
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
  *this += o.scaled(Rat(-1));
  return *this;
}

Tensor Tensor::scaled(const Rat& c) const {
  Tensor r = zero(L, Q);
  if (c.is_zero()) return r;
  for (const auto& [k, x] : coeffs) r.coeffs.emplace(k, x * c);
  return r;
}

bool operator==(const Tensor& a, const Tensor& b) {
  return same_module(a.L, b.L) && same_module(a.Q, b.Q) && a.coeffs == b.coeffs;
}

int Tensor::key_degree(const Key& k) const {
  int d = L->algebra->space->degree(k.a) + Q->gen_degrees[k.q];
  for (int g : k.gens) d += L->gen_degrees[g];
  return d;
}

std::optional<int> Tensor::layer() const {
  std::optional<int> l;
  for (const auto& [k, c] : coeffs) {
    const int lk = static_cast<int>(k.gens.size());
    if (!l)
      l = lk;
    else if (*l != lk)
      return std::nullopt;
  }
  return l;
}

std::optional<int> Tensor::degree() const {
  std::optional<int> d;
  for (const auto& [k, c] : coeffs) {
    const int dk = key_degree(k);
    if (!d)
      d = dk;
    else if (*d != dk)
      return std::nullopt;
  }
  return d;
}

std::string Tensor::str() const {
  if (coeffs.empty()) return "0";
  std::string out;
  for (const auto& [k, c] : coeffs) {
    if (!out.empty()) out += " + ";
    out += "(" + c.str() + ")*" + L->algebra->space->names[k.a];
    for (int g : k.gens) out += "." + L->gen_names[g];
    out += "|" + Q->gen_names[k.q];
  }
  return out;
}

Tensor tensor_act(const Element& a, const Tensor& U) {
  Tensor out = Tensor::zero(U.L, U.Q);
  const auto& A = *U.L->algebra;
  for (const auto& [i, c] : a.coeffs())
    for (const auto& [k, d] : U.coeffs) {
      Element prod = A.mul_basis(i, k.a);
      for (const auto& [ip, cp] : prod.coeffs())
        out.add_key(Tensor::Key{ip, k.gens, k.q}, c * d * cp);
    }
  return out;
}

Tensor tensor_mul_gen(const Tensor& U, int gen) {
  Tensor out = Tensor::zero(U.L, U.Q);
  const int pg = parity(U.L->gen_degrees[gen]);
  for (const auto& [k, c] : U.coeffs) {
    const int pa = parity(U.L->algebra->space->degree(k.a));
    Tensor::Key nk = k;
    nk.gens.insert(nk.gens.begin(), gen);
    out.add_key(std::move(nk), c * Rat(sign_pow(pg & pa)));
  }
  return out;
}

Tensor tensor_mul_elem(const Element& x, const Tensor& U) {
  Tensor out = Tensor::zero(U.L, U.Q);
  for (const auto& [kidx, c] : x.coeffs()) {
    Tensor t = tensor_mul_gen(U, U.L->g_of(kidx));
    t = tensor_act(Element::basis(U.L->algebra->space, U.L->a_of(kidx)), t);
    out += t.scaled(c);
  }
  return out;
}

Tensor tensor_product(const Tensor& u, const Tensor& U) {
  if (!same_module(u.L, U.L)) throw std::invalid_argument("tensor_product: module mismatch");
  Tensor out = Tensor::zero(U.L, U.Q);
  for (const auto& [k, c] : u.coeffs) {
    Tensor t = U;
    for (auto it = k.gens.rbegin(); it != k.gens.rend(); ++it) t = tensor_mul_gen(t, *it);
    t = tensor_act(Element::basis(U.L->algebra->space, k.a), t);
    out += t.scaled(c);
  }
  return out;
}

Tensor tensor_of_elem(ModulePtr L, const Element& x, ModulePtr Q_trivial) {
  Tensor t = Tensor::zero(std::move(L), std::move(Q_trivial));
  for (const auto& [kidx, c] : x.coeffs())
    t.add_key(Tensor::Key{t.L->a_of(kidx), {t.L->g_of(kidx)}, 0}, c);
  return t;
}

Tensor tensor_monomial_q(ModulePtr L, ModulePtr Q, const std::vector<int>& gens,
                         const Element& q_elt) {
  Tensor t = Tensor::zero(std::move(L), std::move(Q));
  int gens_par = 0;
  for (int g : gens) gens_par ^= parity(t.L->gen_degrees[g]);
  for (const auto& [kidx, c] : q_elt.coeffs()) {
    const int b = t.Q->a_of(kidx);
    const int pb = parity(t.L->algebra->space->degree(b));
    t.add_key(Tensor::Key{b, gens, t.Q->g_of(kidx)}, c * Rat(sign_pow(pb & gens_par)));
  }
  return t;
}

Form insert(const Tensor& u, const Form& W) {
  if (!same_module(u.L, W.L)) throw std::invalid_argument("insert: module mismatch");
  if (u.Q->ngens() != 1 || u.Q->gen_degrees[0] != 0)
    throw std::invalid_argument("insert: tensor must have trivial coefficients");
  if (u.is_zero()) return Form::zero(W.L, W.P, std::max(0, W.arity), W.degree);
  const auto lay = u.layer();
  const auto deg = u.degree();
  if (!lay || !deg) throw std::invalid_argument("insert: tensor must be layer and degree pure");
  const int k = *lay;
  if (k > W.arity) return Form::zero(W.L, W.P, 0, *deg + W.degree);
  Form r = Form::zero(W.L, W.P, W.arity - k, *deg + W.degree);
  // (i_u W)(args) = (-1)^{u W} W(z_1,...,z_k,args); a layer-0 tensor acts on
  // the values with no sign.
  const int sgn_jump = k == 0 ? 0 : parity(*deg) & parity(W.degree);
  for_each_sorted_tuple(W.L->ngens(), W.arity - k, [&](const std::vector<int>& key) {
    if (key_has_odd_repeat(*W.L, key)) return;
    Element val = Element::zero(W.P->kspace);
    for (const auto& [tk, c] : u.coeffs) {
      if (k == 0) {
        val += W.P->act_basis(tk.a, W.eval_gens(key)).scaled(c);
        continue;
      }
      std::vector<Element> args;
      args.reserve(W.arity);
      for (size_t i = 0; i < tk.gens.size(); ++i) {
        Element g = W.L->gen(tk.gens[i]);
        if (i == 0) g = W.L->act_basis(tk.a, g);
        args.push_back(std::move(g));
      }
      for (int g : key) args.push_back(W.L->gen(g));
      val += W.eval(args).scaled(c);
    }
    val = val.scaled(Rat(sign_pow(sgn_jump)));
    if (!val.is_zero()) r.table.emplace(key, std::move(val));
  });
  return r;
}

Tensor tensor_mu(const Form& w, const Tensor& U) {
  if (!same_module(w.L, U.L)) throw std::invalid_argument("tensor_mu: module mismatch");
  if (w.P->ngens() != 1 || w.P->gen_degrees[0] != 0)
    throw std::invalid_argument("tensor_mu: form must be A-valued");
  Tensor out = Tensor::zero(U.L, U.Q);
  const int k = w.arity;
  const int pw = parity(w.degree);
  for (const auto& [tk, c] : U.coeffs) {
    const int l = static_cast<int>(tk.gens.size());
    if (k > l) continue;
    const int pa = parity(U.L->algebra->space->degree(tk.a));
    const DegreeSeq degs = gen_degrees_of(*U.L, tk.gens);
    for (const Permutation& s : unshuffles(l - k, k)) {
      std::vector<int> lead(l - k), trail(k);
      int lead_par = 0;
      for (int i = 0; i < l - k; ++i) {
        lead[i] = tk.gens[s[i] - 1];
        lead_par ^= parity(degs[s[i] - 1]);
      }
      for (int i = 0; i < k; ++i) trail[i] = tk.gens[s[l - k + i] - 1];
      Element b = to_algebra(*w.P, w.eval_gens(trail));
      if (b.is_zero()) continue;
      int e = (pw & pa) ^ (pw & lead_par);
      const Rat base = c * Rat(koszul_alpha(s, degs) * sign_pow(e));
      // (lead) (x) b.q : move b left past the leading factors
      for (const auto& [ib, cb] : b.coeffs()) {
        const int pb = parity(U.L->algebra->space->degree(ib));
        Element prod = U.L->algebra->mul_basis(tk.a, ib);
        for (const auto& [ip, cp] : prod.coeffs())
          out.add_key(Tensor::Key{ip, lead, tk.q},
                      base * cb * cp * Rat(sign_pow(pb & lead_par)));
      }
    }
  }
  return out;
}

}  // namespace shlr
