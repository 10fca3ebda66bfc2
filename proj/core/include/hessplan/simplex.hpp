#pragma once

// Exact LP solver with dual extraction: bounded-variable revised primal
// simplex, two phases (composite infeasibility minimization, then true cost),
// sparse LU basis factorization with product-form eta updates. Pivoting is
// deterministic: Dantzig pricing with lowest-index tie-breaks and an
// automatic switch to Bland's rule under sustained degeneracy, so re-solving
// an identical model reproduces the primal/dual vectors bit for bit.

#include <cstdint>

#include "hessplan/linear_model.hpp"

namespace hessplan::lp {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimplexOptions {
  double feas_tol = 1e-7;     // bound/row violation tolerance (scaled)
  double opt_tol = 1e-7;      // reduced-cost tolerance
  double pivot_tol = 1e-9;    // smallest acceptable pivot magnitude
  std::int64_t iteration_limit = -1;  // <0: 200*(rows+cols)+10000
  int refactor_interval = 64;
  bool bland_only = false;    // price by lowest index from the start
  // Scale reduced costs by static column norms when pricing. Faster on some
  // models; at degenerate optima it may select a different vertex and hence
  // different (equally valid) duals than the default rule.
  bool steepest_edge = false;
};

// Solves a pure LP (binaries present -> SolverError; use solve_milp).
// Infeasible/unbounded come back as statuses, not exceptions.
Solution solve_lp(const LinearModel& model, const SimplexOptions& options = {});

// |primal objective - dual objective| reconstructed from row duals and the
// bound contributions of the reduced costs. Requires an optimal solution of
// a pure LP; anything else is a contract violation.
double check_strong_duality(const LinearModel& model, const Solution& solution);

// Largest primal feasibility violation (rows and bounds) of a solution.
double feasibility_residual(const LinearModel& model, const std::vector<double>& primal);

}  // namespace hessplan::lp
