#pragma once

// Branch-and-bound MILP layer over the simplex kernel: best-first search,
// most-fractional branching with registry-order tie-breaks, a root rounding
// heuristic for early incumbents. Deterministic for fixed inputs.

#include "hessplan/simplex.hpp"

namespace hessplan::lp {

struct MilpOptions {
  double gap_tol = 1e-6;   // relative incumbent-vs-bound gap
  std::int64_t node_limit = 200000;
  double int_tol = 1e-6;
  bool rounding_heuristic = true;
  SimplexOptions lp;
};

// Solves a mixed binary-continuous model. Status Optimal means the incumbent
// is within gap_tol of the best bound; NodeLimit means the search stopped at
// node_limit (best incumbent reported if one exists). Duals are those of the
// continuous relaxation with binaries fixed at the incumbent.
Solution solve_milp(const LinearModel& model, const MilpOptions& options = {});
Solution solve_milp(const LinearModel& model, double gap_tol, std::int64_t node_limit);

}  // namespace hessplan::lp
