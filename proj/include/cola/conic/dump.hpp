#pragma once

#include <iosfwd>
#include <string>

#include "cola/conic/problem.hpp"

namespace cola::conic {

// Line-oriented text dump of a conic problem, for debugging and for
// cross-checking against external tools:
//
//   conic-problem v1
//   vars <n>
//   rows <m>
//   cone zero|nonneg|soc <dim>     (one line per block, slack order)
//   cone psd <matrix_order>
//   objective                      (n lines: <index> <value>)
//   rhs                            (m lines: <index> <value>)
//   matrix <nnz>                   (nnz lines: <row> <col> <value>)
//   end
//
// Values are printed with 17 significant digits so a round-trip is exact.
void write_problem(const ConicProblem& problem, std::ostream& out);
ConicProblem read_problem(std::istream& in);

void write_problem_file(const ConicProblem& problem, const std::string& path);
ConicProblem read_problem_file(const std::string& path);

} // namespace cola::conic
