#include <doctest.h>

#include "shlr/sbv.hpp"
#include "shlr/structure_io.hpp"

using namespace shlr;

TEST_CASE("fixtures round trip through the structure file format") {
  for (const std::string& name : fixture_names()) {
    CAPTURE(name);
    Fixture f = fixture(name);
    std::string text = serialize_fixture(f);
    StructureFile parsed = parse_structure(text);
    // field-by-field equality of the pieces that were serialized
    if (f.S) {
      CHECK(same_module(parsed.L, f.S->L));
      CHECK(parsed.S->X == f.S->X);
      CHECK(parsed.S->valid() == f.S->valid());
    }
    if (f.flat_left) {
      REQUIRE(parsed.left);
      for (const auto& [k, tab] : f.flat_left->F.comp)
        for (const auto& [key, op] : tab) CHECK(parsed.left->F.eval_gens(k, key) == op);
    }
    if (f.flat_right) {
      REQUIRE(parsed.right);
      for (const auto& [k, tab] : f.flat_right->F.comp)
        for (const auto& [key, op] : tab) CHECK(parsed.right->F.eval_gens(k, key) == op);
    }
    if (f.bv) {
      REQUIRE(parsed.ops);
      CHECK(parsed.ops->ops.size() == f.bv->ops.size());
    }
    // serialization is deterministic
    StructureFile reparsed = parse_structure(text);
    CHECK(serialize_structure(parsed) == serialize_structure(reparsed));
    CHECK(serialize_structure(parsed) == text);
  }
}

TEST_CASE("perturbed fixtures fail exactly their intended validator") {
  for (const std::string& name : perturbed_names()) {
    CAPTURE(name);
    Fixture f = perturbed(name);
    StructureFile parsed = parse_structure(serialize_fixture(f));
    Report rep = validate_file(parsed);
    REQUIRE(!rep.ok());
    for (const auto& fail : rep.failures) CHECK(fail.check == f.breaks);
    // and the named validator does fail
    bool hit = false;
    for (const auto& fail : rep.failures) hit |= fail.check == f.breaks;
    CHECK(hit);
  }
  // honest fixtures pass everything
  for (const std::string& name : fixture_names()) {
    CAPTURE(name);
    Fixture f = fixture(name);
    Report rep = validate_file(parse_structure(serialize_fixture(f)));
    CHECK(rep.ok());
  }
}

TEST_CASE("parser rejects malformed input") {
  CHECK_THROWS_AS(parse_structure("not json"), ParseError);
  CHECK_THROWS_AS(parse_structure("{}"), ParseError);

  Fixture f = sl2_shifted();
  std::string good = serialize_fixture(f);

  // a zero denominator is an input error
  std::string bad = good;
  auto pos = bad.find("\"1\"");
  REQUIRE(pos != std::string::npos);
  bad.replace(pos, 3, "\"1/0\"");
  CHECK_THROWS_AS(parse_structure(bad), ParseError);

  // unknown keys are rejected
  std::string extra = good;
  extra.insert(extra.find("\"schema\""), "\"surprise\": 1, ");
  CHECK_THROWS_AS(parse_structure(extra), ParseError);

  // unknown basis names are rejected
  std::string badname = good;
  auto epos = badname.find("\"e\"");
  REQUIRE(epos != std::string::npos);
  badname.replace(epos, 3, "\"zz\"");
  CHECK_THROWS_AS(parse_structure(badname), ParseError);
}

TEST_CASE("validator mapping on a perturbed subordination survives the round trip") {
  Fixture f = perturbed("perturbed_subordination");
  StructureFile parsed = parse_structure(serialize_fixture(f));
  REQUIRE(parsed.right);
  Report rep = check_subordination(*parsed.right);
  CHECK(!rep.ok());
}

TEST_CASE("a parsed random-connection export matches the library construction") {
  Fixture base = sl2_shifted();
  LeftConnection C = random_left_connection(base.S, rank2_module(base.S), 1);
  Fixture f = base;
  f.flat_left = C;
  StructureFile parsed = parse_structure(serialize_fixture(f));
  REQUIRE(parsed.left);
  DerFormFamily J1 = left_curvature(*parsed.left);
  DerFormFamily J2 = left_curvature(C);
  for (int k = 1; k <= 4; ++k)
    for_each_sorted_tuple(base.S->L->ngens(), k - 1, [&](const std::vector<int>& key) {
      CHECK(J1.eval_gens(k, key) == J2.eval_gens(k, key));
    });
}

TEST_CASE("cohomology cells beyond the window are flagged incomplete") {
  Fixture sl2 = sl2_shifted();
  auto cells = ce_cohomology(sl2.S, std::nullopt, 2, 9);
  bool saw_incomplete = false, saw_complete = false;
  for (const auto& c : cells) {
    if (c.arity == 2) {
      CHECK(!c.complete);
      saw_incomplete = true;
    }
    if (c.arity < 2) {
      CHECK(c.complete);
      saw_complete = true;
    }
  }
  CHECK(saw_incomplete);
  CHECK(saw_complete);
}
