#include "shlr/fixtures.hpp"

#include <stdexcept>

namespace shlr {

namespace {

Element random_homogeneous(SplitMix& rng, const SpacePtr& space, int degree) {
  Element e(space);
  for (int i = 0; i < space->dim(); ++i)
    if (space->degree(i) == degree) e.add_term(i, rng.coeff());
  return e;
}

ClassicalLInfinity sl2_classical() {
  ClassicalLInfinity c;
  c.V = GradedSpace::make({{"e", 0}, {"f", 0}, {"h", 0}});
  SkewMultiMap l2 = SkewMultiMap::zero(2, 0, c.V, c.V);
  l2.set({2, 0}, Element::basis(c.V, 0).scaled(Rat(2)));
  l2.set({2, 1}, Element::basis(c.V, 1).scaled(Rat(-2)));
  l2.set({0, 1}, Element::basis(c.V, 2));
  c.lambda.emplace(2, std::move(l2));
  return c;
}

ClassicalLInfinity heisenberg_classical() {
  ClassicalLInfinity c;
  c.V = GradedSpace::make({{"x", 0}, {"y", 0}, {"z", 0}});
  SkewMultiMap l2 = SkewMultiMap::zero(2, 0, c.V, c.V);
  l2.set({0, 1}, Element::basis(c.V, 2));  // [x,y] = z
  c.lambda.emplace(2, std::move(l2));
  return c;
}

// Schouten bracket of a Lie algebra's exterior algebra: generators carry the
// Lie bracket, products extend by the degree -1 biderivation rule.
Element schouten(const FreeCommPresentation& G,
                 const std::function<Element(int, int)>& lie, const Element& u,
                 const Element& v);

Element schouten_mono(const FreeCommPresentation& G,
                      const std::function<Element(int, int)>& lie, int ui, int vi) {
  const auto& A = *G.algebra;
  const auto& wu = G.monomials[ui];
  const auto& wv = G.monomials[vi];
  if (wu.empty() || wv.empty()) return Element::zero(A.space);
  if (wu.size() == 1 && wv.size() == 1) return lie(wu[0], wv[0]);
  const int du = A.space->degree(ui), dv = A.space->degree(vi);
  if (wv.size() >= 2) {
    // [u, g v'] = [u,g] v' + (-1)^{(u-1) g} g [u, v']
    const int g = wv[0];
    const int gb = G.gen_index(g);
    int vp = -1;
    {
      std::vector<int> rest(wv.begin() + 1, wv.end());
      for (size_t i = 0; i < G.monomials.size(); ++i)
        if (G.monomials[i] == rest) vp = static_cast<int>(i);
    }
    Element t1 = A.mul(schouten_mono(G, lie, ui, gb), Element::basis(A.space, vp));
    Element t2 = A.mul(Element::basis(A.space, gb), schouten_mono(G, lie, ui, vp))
                     .scaled(Rat(sign_pow(parity(du - 1) & parity(G.gens[g].second))));
    return t1 + t2;
  }
  // |u| >= 2, |v| == 1: flip
  Element f = schouten_mono(G, lie, vi, ui);
  return f.scaled(Rat(-sign_pow(parity(du - 1) & parity(dv - 1))));
}

Element schouten(const FreeCommPresentation& G,
                 const std::function<Element(int, int)>& lie, const Element& u,
                 const Element& v) {
  Element out = Element::zero(G.algebra->space);
  for (const auto& [ui, cu] : u.coeffs())
    for (const auto& [vi, cv] : v.coeffs())
      out += schouten_mono(G, lie, ui, vi).scaled(cu * cv);
  return out;
}

// degree-0 Poisson bracket on a presented algebra from generator values
Element poisson_mono(const FreeCommPresentation& P,
                     const std::function<Element(int, int)>& gen_bracket, int ui, int vi) {
  const auto& A = *P.algebra;
  const auto& wu = P.monomials[ui];
  const auto& wv = P.monomials[vi];
  if (wu.empty() || wv.empty()) return Element::zero(A.space);
  if (wu.size() == 1 && wv.size() == 1) return gen_bracket(wu[0], wv[0]);
  const int du = A.space->degree(ui), dv = A.space->degree(vi);
  if (wv.size() >= 2) {
    // {u, g v'} = {u,g} v' + (-1)^{u g} g {u, v'}
    const int g = wv[0];
    const int gb = P.gen_index(g);
    int vp = -1;
    {
      std::vector<int> rest(wv.begin() + 1, wv.end());
      for (size_t i = 0; i < P.monomials.size(); ++i)
        if (P.monomials[i] == rest) vp = static_cast<int>(i);
    }
    Element t1 = A.mul(poisson_mono(P, gen_bracket, ui, gb), Element::basis(A.space, vp));
    Element t2 = A.mul(Element::basis(A.space, gb), poisson_mono(P, gen_bracket, ui, vp))
                     .scaled(Rat(sign_pow(parity(du) & parity(P.gens[g].second))));
    return t1 + t2;
  }
  Element f = poisson_mono(P, gen_bracket, vi, ui);
  return f.scaled(Rat(-sign_pow(parity(du) & parity(dv))));
}

}  // namespace

Fixture abelian(int rank, std::vector<int> degrees) {
  Fixture f;
  f.name = "abelian";
  f.note = "zero brackets on a free module over the ground field";
  std::vector<std::pair<std::string, int>> gens;
  for (int i = 0; i < rank; ++i)
    gens.emplace_back("v" + std::to_string(i + 1), degrees[i % degrees.size()]);
  ModulePtr L = linfinity_module(std::move(gens));
  f.S = make_shlr(FormalMultiderivation::zero(L, 1, 4));
  return f;
}

Fixture sl2_shifted() {
  Fixture f;
  f.name = "sl2_shifted";
  f.note = "suspension of sl2 with its standard two-dimensional representation";
  f.S = decalage_convert(sl2_classical());
  ModulePtr P = FreeModule::make(f.S->L->algebra, {{"p1", 0}, {"p2", 0}});
  LeftConnection C;
  C.S = f.S;
  C.P = P;
  C.F = DerFormFamily::zero(f.S->L, P, 1, false, 4);
  auto col = [&](std::vector<std::pair<int, Rat>> terms) {
    Element e(P->kspace);
    for (auto& [g, c] : terms) e.add_term(P->kindex(P->algebra->unit_index, g), c);
    return e;
  };
  // e: p2 -> p1; f: p1 -> p2; h: p1 -> p1, p2 -> -p2
  LinOp rho_e = LinOp::zero(P, 0), rho_f = LinOp::zero(P, 0), rho_h = LinOp::zero(P, 0);
  rho_e.cols[P->kindex(0, 1)] = col({{0, Rat(1)}});
  rho_f.cols[P->kindex(0, 0)] = col({{1, Rat(1)}});
  rho_h.cols[P->kindex(0, 0)] = col({{0, Rat(1)}});
  rho_h.cols[P->kindex(0, 1)] = col({{1, Rat(-1)}});
  C.F.set(2, {0}, rho_e);
  C.F.set(2, {1}, rho_f);
  C.F.set(2, {2}, rho_h);
  f.flat_left = std::move(C);
  return f;
}

Fixture heisenberg_shifted() {
  Fixture f;
  f.name = "heisenberg_shifted";
  f.note = "suspension of the Heisenberg algebra with its adjoint module";
  f.S = decalage_convert(heisenberg_classical());
  // adjoint connection on L itself
  LeftConnection C;
  C.S = f.S;
  C.P = f.S->L;
  C.F = DerFormFamily::zero(f.S->L, f.S->L, 1, false, 4);
  const ModMultiderivation* X2 = f.S->X.component(2);
  for (int g = 0; g < 3; ++g) {
    LinOp op = LinOp::zero(f.S->L, 0);
    if (X2)
      for (int j = 0; j < 3; ++j) op.cols[f.S->L->kindex(0, j)] = X2->x_eval_gens({g, j});
    C.F.set(2, {g}, op);
  }
  f.flat_left = std::move(C);
  return f;
}

Fixture exterior_bv() {
  Fixture f;
  f.name = "exterior_bv";
  f.note = "Grassmann algebra on two odd generators with a second-order square-zero operator";
  auto P = free_graded_commutative_presented({{"t1", -1}, {"t2", 1}}, 8);
  auto bv = std::make_shared<OperatorFamily>();
  bv->B = P.algebra;
  std::vector<Element> cols(P.algebra->space->dim(), Element::zero(P.algebra->space));
  const int t1t2 = P.algebra->space->index_of("t1.t2").value();
  const int t2 = P.algebra->space->index_of("t2").value();
  cols[t1t2] = Element::basis(P.algebra->space, t2);
  bv->ops.emplace(2, std::move(cols));
  f.bv = std::move(bv);
  return f;
}

Fixture gerstenhaber_p1() {
  Fixture f;
  f.name = "gerstenhaber_p1";
  f.note = "exterior algebra of the nonabelian two-dimensional Lie algebra with its "
           "Schouten bracket, twisted into a symmetric family";
  auto G = free_graded_commutative_presented({{"e1", 1}, {"e2", 1}}, 8);
  const auto& A = G.algebra;
  auto lie = [&](int a, int b) -> Element {
    // [e1,e2] = e1
    Element out = Element::zero(A->space);
    if (a == 0 && b == 1) out.add_term(G.gen_index(0), Rat(1));
    if (a == 1 && b == 0) out.add_term(G.gen_index(0), Rat(-1));
    return out;
  };
  auto p1 = std::make_shared<PInfinityAlgebra>();
  p1->P = A;
  p1->degree = -1;
  p1->cap = 3;
  SymMultiMap l2 = SymMultiMap::zero(2, -1, A->space, A->space);
  for_each_sorted_tuple(A->space->dim(), 2, [&](const std::vector<int>& key) {
    if (has_odd_repeat(*A->space, key)) return;
    Element v = schouten(G, lie, Element::basis(A->space, key[0]), Element::basis(A->space, key[1]))
                    .scaled(Rat(sign_pow(parity(A->space->degree(key[0])))));
    l2.set(key, v);
  });
  p1->lambda.emplace(2, AlgMultiderivation{std::move(l2)});
  f.pinfinity = std::move(p1);
  return f;
}

Fixture kahler_fixture() {
  Fixture f;
  f.name = "kahler";
  f.note = "odd symplectic pair: Grassmann algebra on t1, t2 with {t1,t2} = 1, its "
           "Kahler differentials, and the canonical flat right structure";
  auto in = std::make_shared<PInfinityInput>();
  in->P = free_graded_commutative_presented({{"t1", 1}, {"t2", -1}}, 8);
  in->cap = 4;
  const auto& A = in->P.algebra;
  auto gen_bracket = [&](int a, int b) -> Element {
    Element out = Element::zero(A->space);
    if (a == 0 && b == 1) out += A->unit;
    if (a == 1 && b == 0) out += A->unit;  // skew on two odds is symmetric-looking
    return out;
  };
  SkewMultiMap l2 = SkewMultiMap::zero(2, 0, A->space, A->space);
  for (int i = 0; i < A->space->dim(); ++i)
    for (int j = i; j < A->space->dim(); ++j) {
      bool even_rep = i == j && !parity(A->space->degree(i));
      if (even_rep) continue;
      l2.set({i, j}, poisson_mono(in->P, gen_bracket, i, j));
    }
  in->lambda.emplace(2, std::move(l2));

  auto res = std::make_shared<KahlerResult>(kahler_lr(*in, 4));
  if (res->degenerate) throw std::logic_error("kahler fixture: unexpected degeneration");
  f.S = res->S;
  f.kahler_input = in;
  f.kahler = res;

  // the canonical flat right structure on A itself: zero generator values,
  // symbol forced by the subordination
  ModulePtr Q = FreeModule::algebra_as_module(A);
  RightConnection D;
  D.S = f.S;
  D.Q = Q;
  D.F = DerFormFamily::zero(f.S->L, Q, f.S->X.degree, true, f.S->cap());
  for (const auto& [k, comp] : f.S->X.comp) {
    for_each_sorted_tuple(f.S->L->ngens(), k - 1, [&](const std::vector<int>& key) {
      bool odd_rep = false;
      for (size_t i = 1; i < key.size(); ++i)
        if (key[i] == key[i - 1] && parity(f.S->L->gen_degrees[key[i]])) odd_rep = true;
      if (odd_rep) return;
      AlgDerivation sig = comp.sigma_eval_gens(key);
      if (sig.is_zero()) return;
      int opdeg = f.S->X.degree;
      for (int g : key) opdeg += f.S->L->gen_degrees[g];
      std::vector<Element> zero_vals(1, Element::zero(Q->kspace));
      D.F.set(k, key, subordinate_op(Q, opdeg, zero_vals, sig, true));
    });
  }
  f.flat_right = std::move(D);
  return f;
}

Fixture trivial_right() {
  Fixture f;
  f.name = "trivial_right";
  f.note = "suspended sl2 with the zero right structure on the ground field";
  f.S = decalage_convert(sl2_classical());
  ModulePtr Q = FreeModule::algebra_as_module(f.S->L->algebra);
  RightConnection D;
  D.S = f.S;
  D.Q = Q;
  D.F = DerFormFamily::zero(f.S->L, Q, 1, true, 4);
  f.flat_right = std::move(D);
  return f;
}

std::vector<std::string> fixture_names() {
  return {"abelian",         "sl2_shifted", "heisenberg_shifted", "exterior_bv",
          "gerstenhaber_p1", "kahler",      "trivial_right"};
}

Fixture fixture(const std::string& name) {
  if (name == "abelian") return abelian(2, {0, -1});
  if (name == "sl2_shifted") return sl2_shifted();
  if (name == "heisenberg_shifted") return heisenberg_shifted();
  if (name == "exterior_bv") return exterior_bv();
  if (name == "gerstenhaber_p1") return gerstenhaber_p1();
  if (name == "kahler") return kahler_fixture();
  if (name == "trivial_right") return trivial_right();
  throw std::invalid_argument("fixture: unknown name " + name);
}

std::vector<std::string> perturbed_names() {
  return {"perturbed_bracket", "perturbed_product", "perturbed_subordination", "perturbed_bv"};
}

Fixture perturbed(const std::string& which) {
  if (which == "perturbed_bracket") {
    Fixture f = sl2_shifted();
    f.name = which;
    f.note = "one sl2 structure constant shifted; only the Jacobiator fails";
    f.breaks = "structure";
    FormalMultiderivation X = f.S->X;
    ModMultiderivation X2 = *X.component(2);
    Element v = X2.x_eval_gens({0, 1});
    v += f.S->L->gen(0);
    X2.set_x({0, 1}, v);
    X.set_component(X2);
    f.S = make_shlr(X);
    f.flat_left.reset();
    return f;
  }
  if (which == "perturbed_product") {
    Fixture f;
    f.name = which;
    f.note = "a product table violating associativity with an honest unit";
    f.breaks = "algebra";
    auto space = GradedSpace::make({{"1", 0}, {"u", 0}, {"v", 0}});
    SymMultiMap prod = SymMultiMap::zero(2, 0, space, space);
    Element one = Element::basis(space, 0), u = Element::basis(space, 1),
            vv = Element::basis(space, 2);
    prod.set({0, 0}, one);
    prod.set({0, 1}, u);
    prod.set({0, 2}, vv);
    prod.set({1, 1}, vv);
    prod.set({1, 2}, one);
    f.broken_algebra = std::make_shared<GradedAlgebra>(space, prod, one);
    f.broken_algebra->unit_index = 0;
    return f;
  }
  if (which == "perturbed_subordination") {
    Fixture f = kahler_fixture();
    f.name = which;
    f.note = "one non-generator column of the right structure shifted; only the "
             "subordination fails";
    f.breaks = "subordination";
    RightConnection D = *f.flat_right;
    const auto& A = f.S->L->algebra;
    const int t2 = A->space->index_of("t2").value();
    // pick the k = 2 component on the first generator key and bump a
    // non-generator column by a degree-consistent unit
    LinOp op = D.F.eval_gens(2, {0});
    Element bump(D.Q->kspace);
    bump.add_term(D.Q->kindex(A->unit_index, 0), Rat(1));
    // column at t2 has degree -1; op degree is 1, so the image sits in degree 0
    op.cols[D.Q->kindex(t2, 0)] += bump;
    D.F.set(2, {0}, op);
    f.flat_right = std::move(D);
    return f;
  }
  if (which == "perturbed_bv") {
    Fixture f = exterior_bv();
    f.name = which;
    f.note = "the operator no longer kills the unit; only the square-zero family "
             "condition fails";
    f.breaks = "eq-bv";
    auto bv = std::make_shared<OperatorFamily>(*f.bv);
    const int t2 = bv->B->space->index_of("t2").value();
    bv->ops.at(2)[bv->B->unit_index] = Element::basis(bv->B->space, t2);
    f.bv = std::move(bv);
    return f;
  }
  throw std::invalid_argument("perturbed: unknown name " + which);
}

LeftConnection random_left_connection(const SHLRPtr& S, ModulePtr P, std::uint64_t seed) {
  SplitMix rng(seed);
  LeftConnection C;
  C.S = S;
  C.P = P;
  C.F = DerFormFamily::zero(S->L, P, S->X.degree, false, S->cap());
  const auto& L = S->L;
  for (int k = 1; k <= S->cap(); ++k) {
    const ModMultiderivation* Xk = S->X.component(k);
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      bool odd_rep = false;
      for (size_t i = 1; i < key.size(); ++i)
        if (key[i] == key[i - 1] && parity(L->gen_degrees[key[i]])) odd_rep = true;
      if (odd_rep) return;
      int opdeg = S->X.degree;
      for (int g : key) opdeg += L->gen_degrees[g];
      std::vector<Element> gv;
      for (int p = 0; p < P->ngens(); ++p)
        gv.push_back(random_homogeneous(rng, P->kspace, opdeg + P->gen_degrees[p]));
      AlgDerivation sig = Xk ? Xk->sigma_eval_gens(key) : AlgDerivation::zero(L->algebra, opdeg);
      C.F.set(k, key, subordinate_op(P, opdeg, gv, sig, false));
    });
  }
  return C;
}

RightConnection random_right_connection(const SHLRPtr& S, ModulePtr Q, std::uint64_t seed) {
  SplitMix rng(seed ^ 0x517cc1b727220a95ULL);
  RightConnection C;
  C.S = S;
  C.Q = Q;
  C.F = DerFormFamily::zero(S->L, Q, S->X.degree, true, S->cap());
  const auto& L = S->L;
  for (int k = 1; k <= S->cap(); ++k) {
    const ModMultiderivation* Xk = S->X.component(k);
    for_each_sorted_tuple(L->ngens(), k - 1, [&](const std::vector<int>& key) {
      bool odd_rep = false;
      for (size_t i = 1; i < key.size(); ++i)
        if (key[i] == key[i - 1] && parity(L->gen_degrees[key[i]])) odd_rep = true;
      if (odd_rep) return;
      int opdeg = S->X.degree;
      for (int g : key) opdeg += L->gen_degrees[g];
      std::vector<Element> gv;
      for (int q = 0; q < Q->ngens(); ++q)
        gv.push_back(random_homogeneous(rng, Q->kspace, opdeg + Q->gen_degrees[q]));
      AlgDerivation sig = Xk ? Xk->sigma_eval_gens(key) : AlgDerivation::zero(L->algebra, opdeg);
      C.F.set(k, key, subordinate_op(Q, opdeg, gv, sig, true));
    });
  }
  return C;
}

ModulePtr rank2_module(const SHLRPtr& S) {
  return FreeModule::make(S->L->algebra, {{"r1", 0}, {"r2", 1}});
}

ActionFixture action_fixture() {
  ActionFixture out;
  Fixture h = heisenberg_shifted();
  out.S = h.S;
  const auto& K = out.S->L->algebra;
  std::map<std::pair<int, int>, Element> prods;
  // generators {1, t}, t odd: t^2 = 0
  ModulePtr M = FreeModule::make(K, {{"one", 0}, {"t", 1}});
  prods.emplace(std::make_pair(0, 0), M->gen(0));
  prods.emplace(std::make_pair(0, 1), M->gen(1));
  prods.emplace(std::make_pair(1, 0), M->gen(1));
  out.ext = extension_from_gen_products(K, {{"one", 0}, {"t", 1}}, 0, prods);

  // flat action: x scales t, y and z act by zero
  LeftConnection C;
  C.S = out.S;
  C.P = out.ext.module;
  C.F = DerFormFamily::zero(out.S->L, out.ext.module, 1, false, 4);
  LinOp op = LinOp::zero(out.ext.module, 0);
  op.cols[out.ext.module->kindex(K->unit_index, 1)] =
      Element::basis(out.ext.module->kspace, out.ext.module->kindex(K->unit_index, 1));
  C.F.set(2, {0}, op);  // along x
  out.action = std::move(C);
  return out;
}

}  // namespace shlr
