#pragma once

#include "shlr/fixtures.hpp"

namespace shlr {

/// Parsed contents of a structure file: the algebra, the module, the
/// structure multiderivation, optional connections, and an optional operator
/// family, plus the declared arity cap and tensor window. Scalars travel as
/// exact rationals ("p/q" or integer strings); unknown keys are rejected.
struct StructureFile {
  int arity_cap = 4;
  int tensor_window = 3;
  AlgebraPtr algebra;
  ModulePtr L;
  SHLRPtr S;
  std::optional<LeftConnection> left;
  std::optional<RightConnection> right;
  std::shared_ptr<OperatorFamily> ops;
  std::shared_ptr<PInfinityAlgebra> pinf;  // standalone bracket family on the algebra
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

StructureFile parse_structure(const std::string& json_text,
                              std::optional<int> arity_cap_override = std::nullopt,
                              std::optional<int> window_override = std::nullopt);

// Byte-deterministic serialization. Connections are stored through their
// generator values; the subordination rule restores the full operators.
std::string serialize_structure(const StructureFile& f);

std::string serialize_fixture(const Fixture& f);

// Every validator a file can fail, in a fixed order: algebra, structure,
// subordination, eq-bv. The report lists the first failing tuple per check
// with both sides printed.
Report validate_file(const StructureFile& f);

}  // namespace shlr
