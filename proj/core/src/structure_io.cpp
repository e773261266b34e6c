#include "shlr/structure_io.hpp"

#include <json.hpp>

namespace shlr {

namespace {

using json = nlohmann::ordered_json;

void expect_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= key == a;
    if (!ok) throw ParseError(std::string("unknown key '") + key + "' in " + where);
  }
}

Rat parse_rat(const json& j, const char* where) {
  if (j.is_number_integer()) return Rat(j.get<long>());
  if (!j.is_string()) throw ParseError(std::string("expected a rational string in ") + where);
  auto r = Rat::parse(j.get<std::string>());
  if (!r) throw ParseError("malformed scalar '" + j.get<std::string>() + "' in " + where);
  return *r;
}

int basis_index(const GradedSpace& space, const std::string& name, const char* where) {
  auto i = space.index_of(name);
  if (!i) throw ParseError("unknown basis name '" + name + "' in " + where);
  return *i;
}

int gen_index(const FreeModule& M, const std::string& name, const char* where) {
  for (int g = 0; g < M.ngens(); ++g)
    if (M.gen_names[g] == name) return g;
  throw ParseError("unknown generator '" + name + "' in " + where);
}

Element parse_alg_element(const json& j, const AlgebraPtr& A, const char* where) {
  Element e(A->space);
  if (!j.is_array()) throw ParseError(std::string("expected a term list in ") + where);
  for (const auto& term : j) {
    if (!term.is_array() || term.size() != 2)
      throw ParseError(std::string("expected [basis, coeff] in ") + where);
    e.add_term(basis_index(*A->space, term[0].get<std::string>(), where),
               parse_rat(term[1], where));
  }
  return e;
}

Element parse_mod_element(const json& j, const ModulePtr& M, const char* where) {
  Element e(M->kspace);
  if (!j.is_array()) throw ParseError(std::string("expected a term list in ") + where);
  for (const auto& term : j) {
    if (!term.is_array() || term.size() != 3)
      throw ParseError(std::string("expected [basis, generator, coeff] in ") + where);
    const int a = basis_index(*M->algebra->space, term[0].get<std::string>(), where);
    const int g = gen_index(*M, term[1].get<std::string>(), where);
    e.add_term(M->kindex(a, g), parse_rat(term[2], where));
  }
  return e;
}

json alg_element_json(const Element& e, const GradedSpace& space) {
  json out = json::array();
  for (const auto& [i, c] : e.coeffs()) out.push_back({space.names[i], c.str()});
  return out;
}

json mod_element_json(const Element& e, const FreeModule& M) {
  json out = json::array();
  for (const auto& [kidx, c] : e.coeffs())
    out.push_back({M.algebra->space->names[M.a_of(kidx)], M.gen_names[M.g_of(kidx)], c.str()});
  return out;
}

std::vector<std::pair<std::string, int>> parse_named_degrees(const json& j, const char* where) {
  std::vector<std::pair<std::string, int>> out;
  if (!j.is_array()) throw ParseError(std::string("expected a [name, degree] list in ") + where);
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 2)
      throw ParseError(std::string("expected [name, degree] in ") + where);
    out.emplace_back(item[0].get<std::string>(), item[1].get<int>());
  }
  return out;
}

AlgebraPtr parse_algebra(const json& j) {
  expect_keys(j, "algebra", {"basis", "unit", "product"});
  auto space = GradedSpace::make(parse_named_degrees(j.at("basis"), "algebra.basis"));
  SymMultiMap prod = SymMultiMap::zero(2, 0, space, space);
  for (const auto& entry : j.at("product")) {
    expect_keys(entry, "algebra.product entry", {"key", "value"});
    const auto& key = entry.at("key");
    if (!key.is_array() || key.size() != 2) throw ParseError("product key must have two names");
    std::vector<int> k = {basis_index(*space, key[0].get<std::string>(), "product"),
                          basis_index(*space, key[1].get<std::string>(), "product")};
    Element v(space);
    for (const auto& term : entry.at("value"))
      v.add_term(basis_index(*space, term[0].get<std::string>(), "product"),
                 parse_rat(term[1], "product"));
    prod.set(k, v);
  }
  Element unit = Element::basis(space, basis_index(*space, j.at("unit").get<std::string>(), "unit"));
  return GradedAlgebra::make(space, std::move(prod), std::move(unit));
}

AlgDerivation parse_derivation(const json& j, const AlgebraPtr& A, int degree,
                               const char* where) {
  AlgDerivation d = AlgDerivation::zero(A, degree);
  for (const auto& col : j) {
    expect_keys(col, where, {"on", "value"});
    const int i = basis_index(*A->space, col.at("on").get<std::string>(), where);
    d.cols[i] = parse_alg_element(col.at("value"), A, where);
  }
  return d;
}

json derivation_json(const AlgDerivation& d) {
  json out = json::array();
  for (int i = 0; i < d.algebra->space->dim(); ++i) {
    if (d.cols[i].is_zero()) continue;
    out.push_back({{"on", d.algebra->space->names[i]},
                   {"value", alg_element_json(d.cols[i], *d.algebra->space)}});
  }
  return out;
}

std::vector<int> parse_gen_key(const json& j, const ModulePtr& L, const char* where) {
  std::vector<int> key;
  for (const auto& name : j) key.push_back(gen_index(*L, name.get<std::string>(), where));
  return key;
}

json gen_key_json(const std::vector<int>& key, const FreeModule& L) {
  json out = json::array();
  for (int g : key) out.push_back(L.gen_names[g]);
  return out;
}

// Connections carry their full operators so that file-level subordination is
// an honest check and hand-edited tables survive a round trip verbatim.
DerFormFamily parse_connection(const json& j, const SHLRPtr& S, const ModulePtr& M, bool right) {
  DerFormFamily F = DerFormFamily::zero(S->L, M, S->X.degree, right, S->cap());
  for (const auto& comp : j) {
    expect_keys(comp, "connection component", {"arity", "entries"});
    const int k = comp.at("arity").get<int>();
    for (const auto& entry : comp.at("entries")) {
      expect_keys(entry, "connection entry", {"key", "operator"});
      std::vector<int> key = parse_gen_key(entry.at("key"), S->L, "connection");
      int opdeg = S->X.degree;
      for (int g : key) opdeg += S->L->gen_degrees[g];
      LinOp op = LinOp::zero(M, opdeg);
      for (const auto& col : entry.at("operator")) {
        expect_keys(col, "connection column", {"on", "value"});
        const auto& on = col.at("on");
        if (!on.is_array() || on.size() != 2)
          throw ParseError("connection column 'on' must be [basis, generator]");
        const int a = basis_index(*M->algebra->space, on[0].get<std::string>(), "connection");
        const int g = gen_index(*M, on[1].get<std::string>(), "connection");
        op.cols[M->kindex(a, g)] = parse_mod_element(col.at("value"), M, "connection");
      }
      F.set(k, key, std::move(op));
    }
  }
  return F;
}

json connection_json(const DerFormFamily& F) {
  json comps = json::array();
  for (const auto& [k, tab] : F.comp) {
    json entries = json::array();
    for (const auto& [key, op] : tab) {
      json cols = json::array();
      for (int i = 0; i < F.M->kspace->dim(); ++i) {
        if (op.cols[i].is_zero()) continue;
        cols.push_back({{"on",
                         {F.M->algebra->space->names[F.M->a_of(i)], F.M->gen_names[F.M->g_of(i)]}},
                        {"value", mod_element_json(op.cols[i], *F.M)}});
      }
      entries.push_back({{"key", gen_key_json(key, *F.L)}, {"operator", cols}});
    }
    comps.push_back({{"arity", k}, {"entries", entries}});
  }
  return comps;
}

}  // namespace

StructureFile parse_structure(const std::string& json_text,
                              std::optional<int> arity_cap_override,
                              std::optional<int> window_override) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  try {
    expect_keys(j, "top level",
                {"schema", "arity_cap", "tensor_window", "algebra", "module", "structure",
                 "connections", "operators", "pinfinity"});
    if (j.at("schema").get<std::string>() != "shlr.structure/1")
      throw ParseError("unsupported schema " + j.at("schema").get<std::string>());
    StructureFile out;
    out.arity_cap = arity_cap_override.value_or(j.value("arity_cap", 4));
    out.tensor_window = window_override.value_or(j.value("tensor_window", 3));
    out.algebra = parse_algebra(j.at("algebra"));

    expect_keys(j.at("module"), "module", {"generators"});
    out.L = FreeModule::make(out.algebra,
                             parse_named_degrees(j.at("module").at("generators"), "module"));

    FormalMultiderivation X = FormalMultiderivation::zero(out.L, 1, out.arity_cap);
    if (j.contains("structure")) {
      const auto& s = j.at("structure");
      expect_keys(s, "structure", {"degree", "components"});
      X.degree = s.value("degree", 1);
      for (const auto& comp : s.at("components")) {
        expect_keys(comp, "structure component", {"arity", "brackets", "anchors"});
        const int k = comp.at("arity").get<int>();
        ModMultiderivation c = ModMultiderivation::zero(out.L, k, X.degree);
        if (comp.contains("brackets"))
          for (const auto& entry : comp.at("brackets")) {
            expect_keys(entry, "bracket entry", {"key", "value"});
            c.set_x(parse_gen_key(entry.at("key"), out.L, "brackets"),
                    parse_mod_element(entry.at("value"), out.L, "brackets"));
          }
        if (comp.contains("anchors"))
          for (const auto& entry : comp.at("anchors")) {
            expect_keys(entry, "anchor entry", {"key", "derivation"});
            std::vector<int> key = parse_gen_key(entry.at("key"), out.L, "anchors");
            int sdeg = X.degree;
            for (int g : key) sdeg += out.L->gen_degrees[g];
            c.set_sigma(key,
                        parse_derivation(entry.at("derivation"), out.algebra, sdeg, "anchors"));
          }
        if (!c.is_zero()) X.set_component(std::move(c));
      }
    }
    out.S = make_shlr(std::move(X));

    if (j.contains("connections")) {
      const auto& cs = j.at("connections");
      expect_keys(cs, "connections", {"left", "right"});
      if (cs.contains("left")) {
        const auto& lc = cs.at("left");
        expect_keys(lc, "connections.left", {"module", "components"});
        ModulePtr P = FreeModule::make(
            out.algebra, parse_named_degrees(lc.at("module").at("generators"), "left module"));
        out.left = LeftConnection{out.S, P, parse_connection(lc.at("components"), out.S, P, false)};
      }
      if (cs.contains("right")) {
        const auto& rc = cs.at("right");
        expect_keys(rc, "connections.right", {"module", "components"});
        ModulePtr Q = FreeModule::make(
            out.algebra, parse_named_degrees(rc.at("module").at("generators"), "right module"));
        out.right =
            RightConnection{out.S, Q, parse_connection(rc.at("components"), out.S, Q, true)};
      }
    }

    if (j.contains("operators")) {
      auto ops = std::make_shared<OperatorFamily>();
      ops->B = out.algebra;
      for (const auto& op : j.at("operators")) {
        expect_keys(op, "operator", {"order", "matrix"});
        AlgDerivation d = parse_derivation(op.at("matrix"), out.algebra, 1, "operators");
        ops->ops.emplace(op.at("order").get<int>(), d.cols);
      }
      if (!ops->ops.empty()) out.ops = std::move(ops);
    }
    if (j.contains("pinfinity")) {
      const auto& p = j.at("pinfinity");
      expect_keys(p, "pinfinity", {"degree", "components"});
      auto pi = std::make_shared<PInfinityAlgebra>();
      pi->P = out.algebra;
      pi->degree = p.value("degree", 1);
      pi->cap = out.arity_cap;
      for (const auto& comp : p.at("components")) {
        expect_keys(comp, "pinfinity component", {"arity", "brackets"});
        const int k = comp.at("arity").get<int>();
        SymMultiMap lk = SymMultiMap::zero(k, pi->degree, out.algebra->space, out.algebra->space);
        for (const auto& entry : comp.at("brackets")) {
          expect_keys(entry, "pinfinity bracket", {"key", "value"});
          std::vector<int> key;
          for (const auto& n : entry.at("key"))
            key.push_back(basis_index(*out.algebra->space, n.get<std::string>(), "pinfinity"));
          lk.set(key, parse_alg_element(entry.at("value"), out.algebra, "pinfinity"));
        }
        if (!lk.is_zero()) pi->lambda.emplace(k, AlgMultiderivation{std::move(lk)});
      }
      out.pinf = std::move(pi);
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed structure file: ") + e.what());
  }
}

std::string serialize_structure(const StructureFile& f) {
  json j;
  j["schema"] = "shlr.structure/1";
  j["arity_cap"] = f.arity_cap;
  j["tensor_window"] = f.tensor_window;

  json basis = json::array();
  for (int i = 0; i < f.algebra->space->dim(); ++i)
    basis.push_back({f.algebra->space->names[i], f.algebra->space->degree(i)});
  json product = json::array();
  for (const auto& [key, v] : f.algebra->product.table)
    product.push_back({{"key", {f.algebra->space->names[key[0]], f.algebra->space->names[key[1]]}},
                       {"value", alg_element_json(v, *f.algebra->space)}});
  j["algebra"] = {{"basis", basis},
                  {"unit", f.algebra->space->names[f.algebra->unit_index]},
                  {"product", product}};

  json gens = json::array();
  for (int g = 0; g < f.L->ngens(); ++g)
    gens.push_back({f.L->gen_names[g], f.L->gen_degrees[g]});
  j["module"] = {{"generators", gens}};

  json comps = json::array();
  for (const auto& [k, c] : f.S->X.comp) {
    json brackets = json::array();
    for (const auto& [key, v] : c.x_table)
      brackets.push_back({{"key", gen_key_json(key, *f.L)}, {"value", mod_element_json(v, *f.L)}});
    json anchors = json::array();
    for (const auto& [key, d] : c.s_table)
      anchors.push_back({{"key", gen_key_json(key, *f.L)}, {"derivation", derivation_json(d)}});
    comps.push_back({{"arity", k}, {"brackets", brackets}, {"anchors", anchors}});
  }
  j["structure"] = {{"degree", f.S->X.degree}, {"components", comps}};

  json conns;
  if (f.left) {
    json pg = json::array();
    for (int g = 0; g < f.left->P->ngens(); ++g)
      pg.push_back({f.left->P->gen_names[g], f.left->P->gen_degrees[g]});
    conns["left"] = {{"module", {{"generators", pg}}}, {"components", connection_json(f.left->F)}};
  }
  if (f.right) {
    json qg = json::array();
    for (int g = 0; g < f.right->Q->ngens(); ++g)
      qg.push_back({f.right->Q->gen_names[g], f.right->Q->gen_degrees[g]});
    conns["right"] = {{"module", {{"generators", qg}}},
                      {"components", connection_json(f.right->F)}};
  }
  if (!conns.is_null()) j["connections"] = conns;

  if (f.ops) {
    json ops = json::array();
    for (const auto& [k, cols] : f.ops->ops) {
      AlgDerivation d = AlgDerivation::zero(f.algebra, 1);
      d.cols = cols;
      ops.push_back({{"order", k}, {"matrix", derivation_json(d)}});
    }
    j["operators"] = ops;
  }
  if (f.pinf) {
    json comps = json::array();
    for (const auto& [k, lk] : f.pinf->lambda) {
      json brackets = json::array();
      for (const auto& [key, v] : lk.map.table) {
        json kj = json::array();
        for (int i : key) kj.push_back(f.algebra->space->names[i]);
        brackets.push_back({{"key", kj}, {"value", alg_element_json(v, *f.algebra->space)}});
      }
      comps.push_back({{"arity", k}, {"brackets", brackets}});
    }
    j["pinfinity"] = {{"degree", f.pinf->degree}, {"components", comps}};
  }
  return j.dump(2) + "\n";
}

std::string serialize_fixture(const Fixture& f) {
  StructureFile sf;
  sf.arity_cap = 4;
  sf.tensor_window = 3;
  if (f.broken_algebra) {
    sf.algebra = f.broken_algebra;
    sf.L = FreeModule::make(sf.algebra, {});
    sf.S = make_shlr(FormalMultiderivation::zero(sf.L, 1, sf.arity_cap));
  } else if (f.S) {
    sf.algebra = f.S->L->algebra;
    sf.L = f.S->L;
    sf.S = f.S;
    sf.left = f.flat_left;
    sf.right = f.flat_right;
  } else if (f.bv) {
    sf.algebra = f.bv->B;
    sf.L = FreeModule::make(sf.algebra, {});
    sf.S = make_shlr(FormalMultiderivation::zero(sf.L, 1, sf.arity_cap));
  } else if (f.pinfinity) {
    sf.algebra = f.pinfinity->P;
    sf.L = FreeModule::make(sf.algebra, {});
    sf.S = make_shlr(FormalMultiderivation::zero(sf.L, 1, sf.arity_cap));
  } else {
    throw std::invalid_argument("serialize_fixture: nothing to serialize");
  }
  if (f.bv) sf.ops = f.bv;
  if (f.pinfinity) sf.pinf = f.pinfinity;
  return serialize_structure(sf);
}

Report validate_file(const StructureFile& f) {
  Report rep;
  auto take_first = [&](const Report& sub, const std::string& check) {
    for (const auto& fail : sub.failures) {
      rep.fail(check, fail.where, fail.lhs, fail.rhs);
      return;
    }
  };
  take_first(validate_algebra(*f.algebra), "algebra");
  Report sr = f.S->validation;
  take_first(sr, "structure");
  if (f.left) take_first(check_subordination(*f.left), "subordination");
  if (f.right) take_first(check_subordination(*f.right), "subordination");
  if (f.ops) take_first(check_bv(*f.ops), "eq-bv");
  if (f.pinf) take_first(validate_pinfinity(*f.pinf), "pinfinity");
  return rep;
}

}  // namespace shlr
