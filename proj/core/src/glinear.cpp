#include "shlr/glinear.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace shlr {

std::optional<int> GradedSpace::index_of(const std::string& name) const {
  for (int i = 0; i < dim(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

std::shared_ptr<const GradedSpace> GradedSpace::make(
    std::vector<std::pair<std::string, int>> basis) {
  auto s = std::make_shared<GradedSpace>();
  for (auto& [name, deg] : basis) {
    if (std::find(s->names.begin(), s->names.end(), name) != s->names.end())
      throw std::invalid_argument("GradedSpace: duplicate basis name " + name);
    s->names.push_back(std::move(name));
    s->degrees.push_back(deg);
  }
  return s;
}

bool same_space(const GradedSpace& a, const GradedSpace& b) {
  return a.names == b.names && a.degrees == b.degrees;
}

bool same_space(const SpacePtr& a, const SpacePtr& b) {
  return a == b || (a && b && same_space(*a, *b));
}

Element Element::basis(SpacePtr space, int i) {
  Element e(std::move(space));
  e.add_term(i, Rat(1));
  return e;
}

void Element::add_term(int i, const Rat& c) {
  if (c.is_zero()) return;
  if (i < 0 || i >= space_->dim()) throw std::out_of_range("Element: basis index");
  auto it = coeffs_.find(i);
  if (it == coeffs_.end()) {
    coeffs_.emplace(i, c);
  } else {
    it->second += c;
    if (it->second.is_zero()) coeffs_.erase(it);
  }
}

Rat Element::coeff(int i) const {
  auto it = coeffs_.find(i);
  return it == coeffs_.end() ? Rat(0) : it->second;
}

Element& Element::operator+=(const Element& o) {
  if (!same_space(space_, o.space_)) throw std::invalid_argument("Element: space mismatch");
  for (const auto& [i, c] : o.coeffs_) add_term(i, c);
  return *this;
}

Element& Element::operator-=(const Element& o) {
  if (!same_space(space_, o.space_)) throw std::invalid_argument("Element: space mismatch");
  for (const auto& [i, c] : o.coeffs_) add_term(i, -c);
  return *this;
}

Element Element::scaled(const Rat& c) const {
  Element r(space_);
  if (c.is_zero()) return r;
  for (const auto& [i, x] : coeffs_) r.coeffs_.emplace(i, x * c);
  return r;
}

bool operator==(const Element& a, const Element& b) {
  return same_space(a.space_, b.space_) && a.coeffs_ == b.coeffs_;
}

std::optional<int> Element::degree() const {
  std::optional<int> d;
  for (const auto& [i, c] : coeffs_) {
    const int di = space_->degree(i);
    if (!d)
      d = di;
    else if (*d != di)
      return std::nullopt;
  }
  return d;
}

bool Element::homogeneous_of(int d) const {
  for (const auto& [i, c] : coeffs_)
    if (space_->degree(i) != d) return false;
  return true;
}

std::string Element::str() const {
  if (coeffs_.empty()) return "0";
  std::string out;
  for (const auto& [i, c] : coeffs_) {
    if (!out.empty()) out += " + ";
    out += "(" + c.str() + ")*" + space_->names[i];
  }
  return out;
}

SortedKey sort_key(std::vector<int> key, const DegreeSeq& degs) {
  const int n = static_cast<int>(key.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return key[a] < key[b]; });
  // sigma carries the sorted tuple back to the original: key[j] = sorted[sigma(j)]
  Permutation sigma(n);
  std::vector<int> rank(n);
  for (int pos = 0; pos < n; ++pos) rank[order[pos]] = pos;
  DegreeSeq sorted_degs(n);
  std::vector<int> sorted(n);
  for (int pos = 0; pos < n; ++pos) {
    sorted[pos] = key[order[pos]];
    sorted_degs[pos] = degs[order[pos]];
  }
  for (int j = 0; j < n; ++j) sigma[j] = rank[j] + 1;
  return SortedKey{std::move(sorted), koszul_alpha(sigma, sorted_degs)};
}

DegreeSeq key_degrees(const GradedSpace& space, const std::vector<int>& key) {
  DegreeSeq d;
  d.reserve(key.size());
  for (int i : key) d.push_back(space.degree(i));
  return d;
}

bool has_odd_repeat(const GradedSpace& space, const std::vector<int>& key) {
  for (size_t i = 1; i < key.size(); ++i)
    if (key[i] == key[i - 1] && parity(space.degree(key[i]))) return true;
  return false;
}

SymMultiMap SymMultiMap::zero(int arity, int map_degree, SpacePtr dom, SpacePtr cod) {
  SymMultiMap m;
  m.arity = arity;
  m.map_degree = map_degree;
  m.domain = std::move(dom);
  m.codomain = std::move(cod);
  return m;
}

void SymMultiMap::add(std::vector<int> key, Element value) {
  Element cur = eval_basis(key);
  cur += value;
  set(std::move(key), std::move(cur));
}

void SymMultiMap::set(std::vector<int> key, Element value) {
  if (static_cast<int>(key.size()) != arity) throw std::invalid_argument("SymMultiMap: key arity");
  if (!same_space(value.space(), codomain)) throw std::invalid_argument("SymMultiMap: value space");
  const DegreeSeq degs = key_degrees(*domain, key);
  SortedKey sk = sort_key(std::move(key), degs);
  Element v = value.scaled(Rat(sk.sign));
  if (has_odd_repeat(*domain, sk.key)) {
    if (!v.is_zero())
      throw std::invalid_argument("SymMultiMap: nonzero value on odd-repeated key");
    return;
  }
  int expected = map_degree;
  for (int i : sk.key) expected += domain->degree(i);
  if (!v.homogeneous_of(expected))
    throw std::invalid_argument("SymMultiMap: value degree mismatch");
  if (v.is_zero())
    table.erase(sk.key);
  else
    table.insert_or_assign(std::move(sk.key), std::move(v));
}

Element SymMultiMap::eval_basis(const std::vector<int>& key) const {
  if (static_cast<int>(key.size()) != arity) throw std::invalid_argument("SymMultiMap: key arity");
  SortedKey sk = sort_key(key, key_degrees(*domain, key));
  auto it = table.find(sk.key);
  if (it == table.end()) return Element::zero(codomain);
  return it->second.scaled(Rat(sk.sign));
}

Element SymMultiMap::eval(std::span<const Element> args) const {
  if (static_cast<int>(args.size()) != arity) throw std::invalid_argument("SymMultiMap: arity mismatch");
  for (const Element& a : args)
    if (!same_space(a.space(), domain)) throw std::invalid_argument("SymMultiMap: argument space");
  Element out = Element::zero(codomain);
  std::vector<int> key(arity);
  std::function<void(int, Rat)> rec = [&](int slot, Rat c) {
    if (slot == arity) {
      out += eval_basis(key).scaled(c);
      return;
    }
    for (const auto& [i, x] : args[slot].coeffs()) {
      key[slot] = i;
      rec(slot + 1, c * x);
    }
  };
  rec(0, Rat(1));
  return out;
}

SymMultiMap& SymMultiMap::operator+=(const SymMultiMap& o) {
  if (!same_space(domain, o.domain) || !same_space(codomain, o.codomain))
    throw std::invalid_argument("SymMultiMap: space mismatch in sum");
  if (o.is_zero()) return *this;
  if (is_zero()) {
    arity = o.arity;
    map_degree = o.map_degree;
  }
  if (arity != o.arity || map_degree != o.map_degree)
    throw std::invalid_argument("SymMultiMap: shape mismatch in sum");
  for (const auto& [k, v] : o.table) {
    Element cur = eval_basis(k);
    cur += v;
    set(k, cur);
  }
  return *this;
}

SymMultiMap SymMultiMap::scaled(const Rat& c) const {
  SymMultiMap r = zero(arity, map_degree, domain, codomain);
  if (c.is_zero()) return r;
  for (const auto& [k, v] : table) r.table.emplace(k, v.scaled(c));
  return r;
}

bool operator==(const SymMultiMap& a, const SymMultiMap& b) {
  if (!same_space(a.domain, b.domain) || !same_space(a.codomain, b.codomain)) return false;
  if (a.table.empty() && b.table.empty()) return true;
  return a.arity == b.arity && a.map_degree == b.map_degree && a.table == b.table;
}

void for_each_sorted_tuple(int dim, int k,
                           const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> t(k);
  std::function<void(int, int)> rec = [&](int slot, int lo) {
    if (slot == k) {
      fn(t);
      return;
    }
    for (int i = lo; i < dim; ++i) {
      t[slot] = i;
      rec(slot + 1, i);
    }
  };
  if (k == 0) {
    std::vector<int> empty;
    fn(empty);
    return;
  }
  rec(0, 0);
}

SymMultiMap gcirc(const SymMultiMap& H, const SymMultiMap& G) {
  if (!same_space(H.domain, G.domain) || !same_space(G.codomain, H.domain))
    throw std::invalid_argument("gcirc: space mismatch");
  if (H.arity < 1) throw std::invalid_argument("gcirc: outer map must have arity >= 1");
  const int k = H.arity, l = G.arity;
  SymMultiMap r = SymMultiMap::zero(k + l - 1, H.map_degree + G.map_degree, H.domain, H.codomain);
  const auto shuffles = unshuffles(l, k - 1);
  for_each_sorted_tuple(H.domain->dim(), k + l - 1, [&](const std::vector<int>& key) {
    const DegreeSeq degs = key_degrees(*H.domain, key);
    Element val = Element::zero(H.codomain);
    for (const Permutation& s : shuffles) {
      std::vector<int> inner(l);
      for (int i = 0; i < l; ++i) inner[i] = key[s[i] - 1];
      std::vector<Element> args;
      args.reserve(k);
      args.push_back(G.eval_basis(inner));
      for (int i = l; i < k + l - 1; ++i)
        args.push_back(Element::basis(H.domain, key[s[i] - 1]));
      val += H.eval(args).scaled(Rat(koszul_alpha(s, degs)));
    }
    if (has_odd_repeat(*H.domain, key)) {
      if (!val.is_zero()) throw std::logic_error("gcirc: nonzero value on odd-repeated key");
      return;
    }
    if (!val.is_zero()) r.table.emplace(key, std::move(val));
  });
  return r;
}

SymMultiMap gbracket(const SymMultiMap& H, const SymMultiMap& G) {
  SymMultiMap hg = gcirc(H, G);
  SymMultiMap gh = gcirc(G, H);
  const int sign = sign_pow(parity(H.map_degree) & parity(G.map_degree));
  hg += gh.scaled(Rat(-sign));
  return hg;
}

}  // namespace shlr
