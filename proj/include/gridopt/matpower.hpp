#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace gridopt {

/// Rectangular numeric matrix, row major.
using Matrix = std::vector<std::vector<double>>;

/// Raw contents of a Matpower case file: numeric matrices only, no
/// power-system semantics.  `Inf` entries are kept as IEEE infinity.
struct RawCase {
  std::string name;
  std::string version;  // contents of mpc.version, usually "2"
  double base_mva = 0.0;
  Matrix bus;
  Matrix gen;
  Matrix branch;
  Matrix gencost;  // empty when the file has no mpc.gencost
  std::optional<Matrix> dcline;
  // Unrecognized mpc.* matrices, preserved in file order and ignored downstream.
  std::vector<std::pair<std::string, Matrix>> extra;

  bool operator==(const RawCase&) const = default;
};

/// Parse Matpower case-file text (the `mpc.<name> = <scalar>;` /
/// `mpc.<name> = [rows];` subset used by PGLib-style benchmarks).
///
/// Throws Error with code missing_section, ragged_matrix or token_error;
/// token errors carry 1-based line:column positions.
RawCase parse_case(std::string_view text);

/// Serialize back to case-file text.  Numbers are printed with enough digits
/// that parse_case(write_case(raw)) == raw exactly.
std::string write_case(const RawCase& raw);

/// Neutral JSON document for debugging: keys baseMVA, bus, gen, branch,
/// gencost, dcline; matrices as arrays of arrays.
nlohmann::json raw_case_to_json(const RawCase& raw);

}  // namespace gridopt
