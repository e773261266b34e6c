#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shlr/rat.hpp"
#include "shlr/signs.hpp"

namespace shlr {

struct GradedSpace {
  std::vector<std::string> names;
  std::vector<int> degrees;

  int dim() const { return static_cast<int>(names.size()); }
  int degree(int i) const { return degrees[i]; }
  std::optional<int> index_of(const std::string& name) const;

  static std::shared_ptr<const GradedSpace> make(
      std::vector<std::pair<std::string, int>> basis);
};

using SpacePtr = std::shared_ptr<const GradedSpace>;

bool same_space(const GradedSpace& a, const GradedSpace& b);
bool same_space(const SpacePtr& a, const SpacePtr& b);

/// Finite rational linear combination of basis vectors of one graded space.
/// No explicit zero coefficients are stored.
class Element {
public:
  explicit Element(SpacePtr space) : space_(std::move(space)) {}
  static Element zero(SpacePtr space) { return Element(std::move(space)); }
  static Element basis(SpacePtr space, int i);

  const SpacePtr& space() const { return space_; }
  const std::map<int, Rat>& coeffs() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }

  void add_term(int i, const Rat& c);
  Rat coeff(int i) const;

  Element& operator+=(const Element& o);
  Element& operator-=(const Element& o);
  friend Element operator+(Element a, const Element& b) { return a += b; }
  friend Element operator-(Element a, const Element& b) { return a -= b; }
  Element scaled(const Rat& c) const;
  friend bool operator==(const Element& a, const Element& b);

  // Homogeneous degree; nullopt for 0 and for mixed-degree combinations.
  std::optional<int> degree() const;
  bool homogeneous_of(int d) const;

  std::string str() const;

private:
  SpacePtr space_;
  std::map<int, Rat> coeffs_;
};

// Canonical key order and the Koszul sign that sorting produces.
// `key` holds basis indices; `degs` their degrees in slot order.
struct SortedKey {
  std::vector<int> key;
  int sign;  // +-1
};
SortedKey sort_key(std::vector<int> key, const DegreeSeq& degs);

/// Graded symmetric K-multilinear map stored on canonically ordered basis
/// tuples. Keys are ascending; a key repeating an odd basis index stores
/// nothing (graded symmetry forces the value to vanish over a field of
/// characteristic zero). Evaluation on an arbitrary tuple is the stored
/// value times the Koszul sign of the sorting permutation.
struct SymMultiMap {
  int arity = 0;
  int map_degree = 0;
  SpacePtr domain;
  SpacePtr codomain;
  std::map<std::vector<int>, Element> table;

  static SymMultiMap zero(int arity, int map_degree, SpacePtr dom, SpacePtr cod);

  bool is_zero() const { return table.empty(); }

  // Accepts the key in any order; sorts, applies the sign, validates the
  // value degree and the odd-repetition rule.
  void set(std::vector<int> key, Element value);
  void add(std::vector<int> key, Element value);

  Element eval_basis(const std::vector<int>& key) const;
  Element eval(std::span<const Element> args) const;

  SymMultiMap& operator+=(const SymMultiMap& o);
  SymMultiMap scaled(const Rat& c) const;
  friend bool operator==(const SymMultiMap& a, const SymMultiMap& b);
};

// Degrees of a basis-index tuple in a space.
DegreeSeq key_degrees(const GradedSpace& space, const std::vector<int>& key);

// Whether a sorted key repeats an odd-degree index.
bool has_odd_repeat(const GradedSpace& space, const std::vector<int>& key);

// Visit every ascending tuple of length k over {0..dim-1}, repeats allowed.
void for_each_sorted_tuple(int dim, int k,
                           const std::function<void(const std::vector<int>&)>& fn);

// Gerstenhaber circle product: (H o G)(a_1,...,a_{k+l-1}) =
// sum over (l,k-1)-unshuffles of alpha(s,a) H(G(a_{s(1)},...,a_{s(l)}),
// a_{s(l+1)},...). Requires domain(H) = domain(G) = codomain(G).
SymMultiMap gcirc(const SymMultiMap& H, const SymMultiMap& G);

// [H,G] = H o G - (-1)^{HG} G o H.
SymMultiMap gbracket(const SymMultiMap& H, const SymMultiMap& G);

}  // namespace shlr
