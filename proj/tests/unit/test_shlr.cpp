#include <doctest.h>

#include "shlr/shlr_algebra.hpp"
#include "test_support.hpp"

using namespace shlr;

namespace {

// sl2 over the rationals: [h,e] = 2e, [h,f] = -2f, [e,f] = h, all degree 0.
ClassicalLInfinity sl2_classical() {
  ClassicalLInfinity c;
  c.V = GradedSpace::make({{"e", 0}, {"f", 0}, {"h", 0}});
  SkewMultiMap l2 = SkewMultiMap::zero(2, 0, c.V, c.V);
  l2.set({2, 0}, Element::basis(c.V, 0).scaled(Rat(2)));   // [h,e] = 2e
  l2.set({2, 1}, Element::basis(c.V, 1).scaled(Rat(-2)));  // [h,f] = -2f
  l2.set({0, 1}, Element::basis(c.V, 2));                  // [e,f] = h
  c.lambda.emplace(2, std::move(l2));
  return c;
}

}  // namespace

TEST_CASE("decalage of sl2 is a valid structure; perturbations are caught") {
  SHLRPtr S = decalage_convert(sl2_classical());
  CHECK(S->valid());
  CHECK(jacobiator(S->X).is_zero());
  for (int g = 0; g < 3; ++g) CHECK(S->L->gen_degrees[g] == -1);

  // perturb one structure constant: [e,f] = h + e
  FormalMultiderivation X = S->X;
  ModMultiderivation X2 = *X.component(2);
  Element v = X2.x_eval_gens({0, 1});
  v += S->L->gen(0);
  X2.set_x({0, 1}, v);
  X.set_component(X2);
  SHLRPtr bad = make_shlr(X);
  CHECK(!bad->valid());
  bool jac_fail = false;
  for (const auto& f : bad->validation.failures) jac_fail |= f.check == "jacobiator";
  CHECK(jac_fail);
  // the obstruction sits in arity 3
  CHECK(jacobiator(X).component(3) != nullptr);
}

TEST_CASE("decalage round trip is exact and maps abelian to abelian") {
  ClassicalLInfinity c = sl2_classical();
  SHLRPtr S = decalage_convert(c);
  ClassicalLInfinity back = decalage_invert(*S, c.V);
  REQUIRE(back.lambda.count(2) == 1);
  CHECK(back.lambda.at(2) == c.lambda.at(2));

  ClassicalLInfinity ab;
  ab.V = GradedSpace::make({{"v", 0}});
  SHLRPtr Sab = decalage_convert(ab);
  CHECK(Sab->valid());
  CHECK(Sab->X.is_zero());

  // a differential converts with the same matrix entries
  ClassicalLInfinity d1;
  d1.V = GradedSpace::make({{"u", 0}, {"w", 1}});
  SkewMultiMap l1 = SkewMultiMap::zero(1, 1, d1.V, d1.V);
  l1.set({0}, Element::basis(d1.V, 1).scaled(Rat(3)));
  d1.lambda.emplace(1, std::move(l1));
  SHLRPtr Sd = decalage_convert(d1);
  CHECK(Sd->valid());
  CHECK(Sd->X.component(1)->x_eval_gens({0}) == Sd->L->gen(1).scaled(Rat(3)));
}

TEST_CASE("jacobiator agrees with the anchors-and-brackets display") {
  auto P = free_graded_commutative_presented({{"x", 1}}, 8);
  auto L = FreeModule::make(P.algebra, {{"g1", 0}, {"g2", 1}});
  Rng rng(2718);
  FormalMultiderivation X = random_formal_mder(rng, P, L, 3, 1, 4);
  FormalMultiderivation J = jacobiator(X);

  for (int m = 1; m <= 4; ++m) {
    // J(X)(gens) = sum_{i+j=m} sum_{S_{i,j}} alpha X(X(first), rest)
    for_each_sorted_tuple(L->ngens(), m, [&](const std::vector<int>& key) {
      if (key_odd_repeat(*L, key)) return;
      DegreeSeq degs;
      for (int g : key) degs.push_back(L->gen_degrees[g]);
      Element expect = Element::zero(L->kspace);
      for (int i = 1; i <= m; ++i) {
        const int j = m - i;
        const ModMultiderivation* Xi = X.component(i);
        const ModMultiderivation* Xo = X.component(j + 1);
        if (!Xi || !Xo) continue;
        for (const Permutation& s : unshuffles(i, j)) {
          std::vector<int> inner(i);
          for (int t = 0; t < i; ++t) inner[t] = key[s[t] - 1];
          std::vector<Element> args;
          args.push_back(Xi->x_eval_gens(inner));
          for (int t = i; t < m; ++t) args.push_back(L->gen(key[s[t] - 1]));
          expect += Xo->x_eval(args).scaled(Rat(koszul_alpha(s, degs)));
        }
      }
      Element got = J.component(m) ? J.component(m)->x_eval_gens(key) : Element::zero(L->kspace);
      CHECK(got == expect);
    });
    // sigma_J display: two sums over S_{i,j-1}
    for_each_sorted_tuple(L->ngens(), m - 1, [&](const std::vector<int>& key) {
      if (key_odd_repeat(*L, key)) return;
      DegreeSeq degs;
      for (int g : key) degs.push_back(L->gen_degrees[g]);
      for (int a = 0; a < P.algebra->space->dim(); ++a) {
        Element ea = Element::basis(P.algebra->space, a);
        Element expect = Element::zero(P.algebra->space);
        for (int i = 0; i <= m - 1; ++i) {
          const int j = m - i;
          // first sum: sigma_{i+1}( . | sigma_j( . | a)), weight (-)^{X * front}
          const ModMultiderivation* Xout = X.component(i + 1);
          const ModMultiderivation* Xin = X.component(j);
          if (Xout && Xin) {
            for (const Permutation& s : unshuffles(i, j - 1)) {
              int front = 0;
              std::vector<int> outer(i), inner(j - 1);
              for (int t = 0; t < i; ++t) {
                outer[t] = key[s[t] - 1];
                front ^= parity(degs[s[t] - 1]);
              }
              for (int t = 0; t < j - 1; ++t) inner[t] = key[s[i + t] - 1];
              Element mid = Xin->sigma_eval_gens(inner).apply(ea);
              expect += Xout->sigma_eval_gens(outer).apply(mid).scaled(
                  Rat(koszul_alpha(s, degs) * sign_pow(parity(X.degree) & front)));
            }
          }
          // second sum: sigma_{j+1}(X_i(first), rest | a)
          const ModMultiderivation* Xi2 = X.component(i);
          const ModMultiderivation* Xs = X.component(j + 1);
          if (i >= 1 && Xi2 && Xs) {
            for (const Permutation& s : unshuffles(i, j - 1)) {
              std::vector<int> inner(i);
              for (int t = 0; t < i; ++t) inner[t] = key[s[t] - 1];
              std::vector<Element> args;
              args.push_back(Xi2->x_eval_gens(inner));
              for (int t = i; t < m - 1; ++t) args.push_back(L->gen(key[s[t] - 1]));
              expect += Xs->sigma_eval(args).apply(ea).scaled(Rat(koszul_alpha(s, degs)));
            }
          }
        }
        Element got = J.component(m) ? J.component(m)->sigma_eval_gens(key).apply(ea)
                                     : Element::zero(P.algebra->space);
        CHECK(got == expect);
      }
    });
  }
}

TEST_CASE("higher CE differential: base cases, eta cross-check, and D^2 = 0") {
  // arity-1-only structure; a degree-1 anchor needs a rank-2 exterior algebra
  auto P2 = free_graded_commutative_presented({{"x", 1}, {"y", 2}}, 3);
  auto L2 = FreeModule::make(P2.algebra, {{"g", 0}});
  ModMultiderivation Y1 = ModMultiderivation::zero(L2, 1, 1);
  const int x2 = P2.algebra->space->index_of("x").value();
  const int y2 = P2.algebra->space->index_of("y").value();
  // sigma(x) = y is a square-zero degree-1 derivation
  AlgDerivation s = derivation_from_gen_values(
      P2, {Element::basis(P2.algebra->space, y2), Element::zero(P2.algebra->space)}, 1);
  Y1.set_sigma({}, s);
  FormalMultiderivation XF = FormalMultiderivation::zero(L2, 1, 4);
  XF.set_component(Y1);
  SHLRPtr S = make_shlr(XF);
  REQUIRE(S->valid());

  auto A_mod = FreeModule::algebra_as_module(P2.algebra);
  // 0-form a -> sigma_1(a)
  Form a0 = Form::from_value(L2, A_mod, from_algebra(*A_mod, Element::basis(P2.algebra->space, x2)));
  Form D1a = ce_component(*S, 1, a0);
  CHECK(to_algebra(*A_mod, D1a.eval_gens({})) == Element::basis(P2.algebra->space, y2));

  // cross-check against eta on random structures and forms
  auto P3 = free_graded_commutative_presented({{"x", 1}}, 8);
  auto L3 = FreeModule::make(P3.algebra, {{"g1", 0}, {"g2", 1}});
  Rng rng(5150);
  for (int trial = 0; trial < 8; ++trial) {
    FormalMultiderivation Z = random_formal_mder(rng, P3, L3, 3, 1, 4);
    SHLRPtr SZ = make_shlr(Z);
    // ce_component only demands a valid structure for its contract; compare
    // the raw formula with eta on a valid abelian-ish case and the formula
    // against eta directly otherwise
    FormDerivation E = eta(Z);
    auto A3 = FreeModule::algebra_as_module(P3.algebra);
    for (int ar = 0; ar <= 2; ++ar) {
      for_each_sorted_tuple(L3->ngens(), ar, [&](const std::vector<int>& key) {
        if (key_odd_repeat(*L3, key)) return;
        for (int i = 0; i < P3.algebra->space->dim(); ++i) {
          int deg = P3.algebra->space->degree(i);
          for (int g : key) deg -= L3->gen_degrees[g];
          Form w = Form::zero(L3, A3, ar, deg);
          w.set(key, from_algebra(*A3, Element::basis(P3.algebra->space, i)));
          if (w.is_zero()) return;
          for (int k = 1; k <= 3; ++k) {
            if (!Z.component(k)) continue;
            // the anchors-and-brackets formula evaluated without the validity gate
            SHLRAlgebra raw{L3, Z, Report{}, false};
            CHECK(ce_component(raw, k, w) == E.apply(k, w));
          }
        }
      });
    }
  }

  // sum_{i+j=k} [D_i, D_j] = 0 on the sl2 fixture for forms of arity <= 3
  SHLRPtr sl2 = decalage_convert(sl2_classical());
  auto A4 = FreeModule::algebra_as_module(sl2->L->algebra);
  for (int ar = 0; ar <= 3; ++ar) {
    for_each_sorted_tuple(sl2->L->ngens(), ar, [&](const std::vector<int>& key) {
      if (key_odd_repeat(*sl2->L, key)) return;
      Form w = Form::zero(sl2->L, A4, ar, ar);  // values in K: degree = -sum(-1) = ar
      w.set(key, from_algebra(*A4, sl2->L->algebra->unit));
      if (w.is_zero()) return;
      for (int k = 2; k <= 4; ++k) {
        // components of [D,D]_k: only D_2 exists
        Form acc = Form::zero(sl2->L, A4, ar + k - 2, w.degree + 2);
        for (int i = 1; i < k; ++i) {
          const int j = k - i;
          if (!sl2->X.component(i) || !sl2->X.component(j)) continue;
          acc += ce_component(*sl2, i, ce_component(*sl2, j, w));
          acc += ce_component(*sl2, j, ce_component(*sl2, i, w));
        }
        CHECK(acc.is_zero());
      }
    });
  }
}

TEST_CASE("left and right module axioms") {
  SHLRPtr sl2 = decalage_convert(sl2_classical());
  auto lambda = brackets_as_symmaps(*sl2);
  const auto& V = sl2->L->kspace;

  // adjoint: mu_k(v...|w) := lambda_k(v...,w)
  ModuleMapFamily adj;
  adj.V = V;
  adj.W = V;
  adj.degree = 1;
  adj.cap = 4;
  for (const auto& [k, lk] : lambda) {
    for_each_sorted_tuple(V->dim(), k - 1, [&](const std::vector<int>& vkey) {
      for (int w = 0; w < V->dim(); ++w) {
        std::vector<int> full = vkey;
        full.push_back(w);
        adj.set(k, vkey, w, lk.eval_basis(full));
      }
    });
  }
  CHECK(check_linf_module(lambda, adj).ok());

  // zero mu passes both
  ModuleMapFamily zero;
  zero.V = V;
  zero.W = GradedSpace::make({{"w", 0}});
  CHECK(check_linf_module(lambda, zero).ok());
  CHECK(check_right_linf_module(lambda, zero).ok());

  // mu_1 with mu_1^2 != 0 fails; mu_k eats k-1 bracket slots here, so the
  // square sits in the k = 1 instance of the axiom
  ModuleMapFamily bad;
  bad.V = V;
  bad.W = GradedSpace::make({{"w0", 0}, {"w1", 1}, {"w2", 2}});
  bad.set(1, {}, 0, Element::basis(bad.W, 1));
  bad.set(1, {}, 1, Element::basis(bad.W, 2));
  Report rep = check_linf_module(lambda, bad);
  CHECK(!rep.ok());
  CHECK(rep.failures.front().where.substr(0, 3) == "k=1");
  Report rrep = check_right_linf_module(lambda, bad);
  CHECK(!rrep.ok());

  // sigma_X is a left module structure on A for a fixture with anchors
  auto P = free_graded_commutative_presented({{"x", 1}}, 8);
  auto L = FreeModule::make(P.algebra, {{"g", -1}});
  // X_1(g) = 0, sigma_1 = x d/dx? degree 1 derivation: x -> x.x = 0; use
  // sigma_2 type anchors instead: X_2 = 0, sigma_2(g|x) = x gives degree
  // 1 - 1 + 1 = 1? sigma_2(g) must be a derivation of degree 1 + (-1) = 0.
  ModMultiderivation X2 = ModMultiderivation::zero(L, 2, 1);
  AlgDerivation euler = derivation_from_gen_values(
      P, {Element::basis(P.algebra->space, P.algebra->space->index_of("x").value())}, 0);
  X2.set_sigma({0}, euler);
  FormalMultiderivation XF = FormalMultiderivation::zero(L, 1, 4);
  XF.set_component(X2);
  SHLRPtr S = make_shlr(XF);
  REQUIRE(S->valid());
  auto lam = brackets_as_symmaps(*S);
  ModuleMapFamily mu;
  mu.V = S->L->kspace;
  mu.W = P.algebra->space;
  mu.degree = 1;
  mu.cap = 4;
  for (const auto& [k, comp] : S->X.comp) {
    for_each_sorted_tuple(S->L->kspace->dim(), k - 1, [&](const std::vector<int>& vkey) {
      std::vector<Element> args;
      for (int i : vkey) args.push_back(Element::basis(S->L->kspace, i));
      AlgDerivation d = comp.sigma_eval(args);
      for (int w = 0; w < P.algebra->space->dim(); ++w) mu.set(k, vkey, w, d.apply_basis(w));
    });
  }
  CHECK(check_linf_module(lam, mu).ok());
}

TEST_CASE("induced P-infinity structure on the symmetric algebra") {
  SHLRPtr sl2 = decalage_convert(sl2_classical());
  InducedPInfinity ip = induced_pinfinity(sl2, 3);
  CHECK(ip.validation.ok());

  // restriction to generators equals the brackets
  auto Striv = FreeModule::algebra_as_module(sl2->L->algebra);
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      std::vector<Tensor> args = {Tensor::monomial(sl2->L, Striv, {a}, 0),
                                  Tensor::monomial(sl2->L, Striv, {b}, 0)};
      CHECK(ip.bracket(2, args) ==
            tensor_of_elem(sl2->L, sl2->X.component(2)->x_eval_gens({a, b}), Striv));
    }

  // abelian structure induces the zero family
  auto Lab = linfinity_module({{"v", -1}});
  SHLRPtr ab = make_shlr(FormalMultiderivation::zero(Lab, 1, 4));
  InducedPInfinity ipa = induced_pinfinity(ab, 3);
  CHECK(ipa.validation.ok());
  auto St = FreeModule::algebra_as_module(Lab->algebra);
  std::vector<Tensor> args = {Tensor::monomial(Lab, St, {0}, 0)};
  CHECK(ipa.bracket(1, args).is_zero());
}

TEST_CASE("validate_pinfinity flags broken structures") {
  // Lambda_1 = a degree-1 derivation with square zero on Lambda(x, y)
  auto P = free_graded_commutative_presented({{"x", 1}, {"y", 2}}, 3);
  const auto& A = P.algebra;
  const int y = A->space->index_of("y").value();
  PInfinityAlgebra good;
  good.P = A;
  good.degree = 1;
  AlgDerivation d =
      derivation_from_gen_values(P, {Element::basis(A->space, y), Element::zero(A->space)}, 1);
  SymMultiMap m1 = SymMultiMap::zero(1, 1, A->space, A->space);
  for (int i = 0; i < A->space->dim(); ++i) m1.set({i}, d.apply_basis(i));
  good.lambda.emplace(1, AlgMultiderivation{m1});
  CHECK(validate_pinfinity(good).ok());

  // a degree-legal map that hits the unit cannot be a derivation
  PInfinityAlgebra bad = good;
  SymMultiMap m1b = m1;
  const int xidx = A->space->index_of("x").value();
  m1b.set({A->unit_index}, Element::basis(A->space, xidx));
  bad.lambda.clear();
  bad.lambda.emplace(1, AlgMultiderivation{m1b});
  Report rep = validate_pinfinity(bad);
  CHECK(!rep.ok());
}

TEST_CASE("Kahler differentials: ground field and one odd generator") {
  // P = K: the quotient is zero
  PInfinityInput triv;
  triv.P = free_graded_commutative_presented({}, 1);
  KahlerResult r0 = kahler_lr(triv, 4);
  CHECK(r0.degenerate);
  CHECK(r0.quotient_dim == 0);

  // P = Lambda(x), no brackets: abelian structure on a rank-one module
  PInfinityInput ext;
  ext.P = free_graded_commutative_presented({{"x", 1}}, 8);
  KahlerResult r1 = kahler_lr(ext, 4);
  REQUIRE(!r1.degenerate);
  CHECK(r1.quotient_dim == 2);
  REQUIRE(r1.omega1 != nullptr);
  CHECK(r1.omega1->ngens() == 1);
  CHECK(r1.omega1->gen_degrees[0] == 2);
  REQUIRE(r1.S != nullptr);
  CHECK(r1.S->valid());
  CHECK(r1.S->X.is_zero());
  // d x = the generator dx; d(1) = 0
  CHECK(r1.d[ext.P.algebra->unit_index].is_zero());
  const int xi = ext.P.algebra->space->index_of("x").value();
  CHECK(r1.d[xi] == r1.omega1->gen(0));
}
