#pragma once

// JSON spec files for user-defined nested summations.
//
// {
//   "schema_version": 1,
//   "q": 2, "r": 2, "dim": 2,
//   "base_q": 2,                                   // optional, default q
//   "lyapunov": "P",                               // optional symmetric variable
//   "variables": [{"name": "P", "kind": "sym", "rows": 2, "cols": 2}, ...],
//   "vertices": [{"index": [1, 1],
//                 "constant": ["0", "0", "0", "0"],   // row-major, or nested rows
//                 "terms": {"P[1,1]": [["-2", "0"], ["0", "0"]]}}, ...]
// }
//
// Rationals are strings ("p", "p/q" or a finite decimal). Vertices cover
// N_r^base_q exactly once; trailing indices of a q-tuple are ignored.

#include <iosfwd>
#include <string>

#include "plmi/matexpr.hpp"

namespace plmi {

inline constexpr int kSpecSchemaVersion = 1;

/// Throws ParseError naming the offending field.
PlmiSpec parse_spec(std::istream& in);
PlmiSpec load_spec(const std::string& path);

void write_spec(const PlmiSpec& spec, std::ostream& out);

}  // namespace plmi
