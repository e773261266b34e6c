// Command-line verifier for structure files: validation, curvature tables,
// windowed cohomology, and derived brackets. Exit codes: 0 valid, 1 a check
// failed, 2 input error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "shlr/sbv.hpp"
#include "shlr/structure_io.hpp"

using namespace shlr;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string key_str(const FreeModule& L, const std::vector<int>& key) {
  std::string s = "(";
  for (size_t i = 0; i < key.size(); ++i) {
    if (i) s += ",";
    s += L.gen_names[key[i]];
  }
  return s + ")";
}

std::optional<int> g_cap, g_window;

int cmd_validate(const std::string& path, const std::string& format) {
  StructureFile f = parse_structure(read_file(path), g_cap, g_window);
  Report rep = validate_file(f);
  if (format == "json") {
    std::cout << "{\"valid\": " << (rep.ok() ? "true" : "false") << ", \"failures\": [";
    for (size_t i = 0; i < rep.failures.size(); ++i) {
      const auto& fail = rep.failures[i];
      if (i) std::cout << ", ";
      std::cout << "{\"check\": \"" << fail.check << "\", \"where\": \"" << fail.where
                << "\", \"lhs\": \"" << fail.lhs << "\", \"rhs\": \"" << fail.rhs << "\"}";
    }
    std::cout << "]}\n";
  } else {
    if (rep.ok()) {
      std::cout << "valid (cap " << f.arity_cap << ", window " << f.tensor_window << ")\n";
    } else {
      for (const auto& fail : rep.failures)
        std::cout << "FAIL " << fail.check << " at " << fail.where << ": lhs = " << fail.lhs
                  << ", rhs = " << fail.rhs << "\n";
    }
  }
  return rep.ok() ? 0 : 1;
}

int cmd_curvature(const std::string& path, const std::string& side, const std::string& format) {
  StructureFile f = parse_structure(read_file(path), g_cap, g_window);
  DerFormFamily J = [&] {
    if (side == "left") {
      if (!f.left) throw ParseError("no left connection in the file");
      return left_curvature(*f.left);
    }
    if (!f.right) throw ParseError("no right connection in the file");
    return right_curvature(*f.right);
  }();
  const auto& L = *J.L;
  bool any = false;
  for (const auto& [k, tab] : J.comp)
    for (const auto& [key, op] : tab) {
      if (op.is_zero()) continue;
      any = true;
      if (format == "json")
        std::cout << "{\"arity\": " << k << ", \"key\": \"" << key_str(L, key)
                  << "\", \"operator\": \"" << op.str() << "\"}\n";
      else
        std::cout << "arity " << k << " " << key_str(L, key) << ": " << op.str() << "\n";
    }
  if (!any) std::cout << (format == "json" ? "{\"flat\": true}" : "flat: curvature is zero")
                      << "\n";
  return 0;
}

int cmd_cohomology(const std::string& path, int arity_max, int degree, const std::string& format) {
  StructureFile f = parse_structure(read_file(path), g_cap, g_window);
  if (!f.S->valid()) {
    std::cout << "structure is not flat:\n" << f.S->validation.str();
    return 1;
  }
  if (f.left && !is_flat(*f.left)) {
    std::cout << "left connection is not flat\n";
    return 1;
  }
  std::vector<CohomologyCell> cells;
  try {
    cells = ce_cohomology(f.S, f.left, arity_max, degree);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  for (const auto& c : cells) {
    if (format == "json")
      std::cout << "{\"arity\": " << c.arity << ", \"degree\": " << c.degree << ", \"dim\": "
                << c.h_dim << ", \"complete\": " << (c.complete ? "true" : "false") << "}\n";
    else
      std::cout << "arity " << c.arity << " degree " << c.degree << " dim " << c.h_dim
                << (c.complete ? "" : " (incomplete)") << "\n";
  }
  return 0;
}

int cmd_derived_brackets(const std::string& path, int window, const std::string& format) {
  StructureFile f = parse_structure(read_file(path), g_cap, g_window);
  window = g_window.value_or(f.tensor_window);
  if (f.ops) {
    Report bv = check_bv(*f.ops);
    if (!bv.ok()) {
      std::cout << "square-zero family conditions fail:\n" << bv.str();
      return 1;
    }
    PInfinityAlgebra pi = derived_brackets(*f.ops, f.arity_cap);
    for (const auto& [k, lk] : pi.lambda)
      for (const auto& [key, v] : lk.map.table) {
        std::string ks = "(";
        for (size_t i = 0; i < key.size(); ++i) {
          if (i) ks += ",";
          ks += f.algebra->space->names[key[i]];
        }
        ks += ")";
        if (format == "json")
          std::cout << "{\"arity\": " << k << ", \"key\": \"" << ks << "\", \"value\": \""
                    << v.str() << "\"}\n";
        else
          std::cout << "Lambda_" << k << " " << ks << " = " << v.str() << "\n";
      }
    return 0;
  }
  if (!f.right) throw ParseError("no operator family and no right connection in the file");
  if (!is_flat(*f.right)) {
    std::cout << "right connection is not flat\n";
    return 1;
  }
  WindowedBV B = bv_from_right_module(*f.right, window);
  if (!B.eq_bv.ok()) {
    std::cout << "square-zero family conditions fail:\n" << B.eq_bv.str();
    return 1;
  }
  auto Striv = FreeModule::algebra_as_module(f.algebra);
  std::vector<Tensor> basis;
  for (int i = 0; i < B.win.dim(); ++i) {
    Tensor t = Tensor::zero(f.S->L, Striv);
    t.add_key(B.win.items[i], Rat(1));
    if (!t.is_zero()) basis.push_back(std::move(t));
  }
  for (int k = 1; k <= f.arity_cap; ++k) {
    if (!B.ops.count(k)) continue;
    std::vector<int> idx(k);
    std::function<void(int, int, int)> loop = [&](int slot, int lo, int lay) {
      if (slot == k) {
        std::vector<Tensor> us;
        for (int i : idx) us.push_back(basis[i]);
        Tensor v = windowed_derived_bracket(B, k, us);
        if (v.is_zero()) return;
        std::string ks = "(";
        for (int t = 0; t < k; ++t) {
          if (t) ks += ",";
          ks += basis[idx[t]].str();
        }
        ks += ")";
        if (format == "json")
          std::cout << "{\"arity\": " << k << ", \"key\": \"" << ks << "\", \"value\": \""
                    << v.str() << "\"}\n";
        else
          std::cout << "Lambda_" << k << " " << ks << " = " << v.str() << "\n";
        return;
      }
      for (int i = lo; i < static_cast<int>(basis.size()); ++i) {
        const int l = basis[i].layer().value();
        if (lay + l > window) continue;
        idx[slot] = i;
        loop(slot + 1, i, lay + l);
      }
    };
    loop(0, 0, 0);
  }
  return 0;
}

int cmd_export(const std::string& name, std::uint64_t seed) {
  Fixture f = [&] {
    for (const std::string& n : perturbed_names())
      if (n == name) return perturbed(name);
    if (name == "random_connection") {
      Fixture base = sl2_shifted();
      base.name = "random_connection";
      base.note = "suspended sl2 with a seeded random (generally non-flat) connection";
      base.flat_left = random_left_connection(base.S, rank2_module(base.S), seed);
      return base;
    }
    return fixture(name);
  }();
  std::cout << serialize_fixture(f);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact verifier for graded homotopy Lie-Rinehart structures"};
  app.require_subcommand(1);

  std::string path, format = "text", side = "left", name;
  int arity_cap = 4, window = 3, arity_max = 3, degree = 6;
  std::uint64_t seed = 1;

  CLI::Option *cap_opt = nullptr, *win_opt = nullptr;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));
    cap_opt = sub->add_option("--arity-cap", arity_cap);
    win_opt = sub->add_option("--window", window);
  };

  CLI::App* validate = app.add_subcommand("validate", "run every declared check");
  validate->add_option("file", path)->required();
  add_common(validate);

  CLI::App* curv = app.add_subcommand("curvature", "print curvature component tables");
  curv->add_option("file", path)->required();
  curv->add_option("--side", side)->check(CLI::IsMember({"left", "right"}));
  add_common(curv);

  CLI::App* coh = app.add_subcommand("cohomology", "windowed cohomology dimensions per cell");
  coh->add_option("file", path)->required();
  coh->add_option("--arity-max", arity_max);
  coh->add_option("--degree", degree);
  add_common(coh);

  CLI::App* db = app.add_subcommand("derived-brackets", "print the derived bracket tables");
  db->add_option("file", path)->required();
  add_common(db);

  CLI::App* fx = app.add_subcommand("fixtures", "built-in structures");
  CLI::App* fxe = fx->add_subcommand("export", "write a fixture as a structure file");
  fxe->add_option("name", name)->required();
  fxe->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    for (CLI::App* sub : {validate, curv, coh, db})
      if (sub->parsed()) {
        if (sub->count("--arity-cap")) g_cap = arity_cap;
        if (sub->count("--window")) g_window = window;
      }
    if (validate->parsed()) return cmd_validate(path, format);
    if (curv->parsed()) return cmd_curvature(path, side, format);
    if (coh->parsed()) return cmd_cohomology(path, arity_max, degree, format);
    if (db->parsed()) return cmd_derived_brackets(path, window, format);
    if (fx->parsed() && fxe->parsed()) return cmd_export(name, seed);
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
