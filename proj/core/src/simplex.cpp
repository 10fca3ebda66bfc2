#include "hessplan/simplex.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace hessplan::lp {

namespace {

enum class VStat : unsigned char { Basic, AtLower, AtUpper, FreeZero };

struct Eta {
  int pivot_row = -1;
  double pivot_val = 1.0;
  std::vector<std::pair<int, double>> rest;  // (row, w_row) excluding pivot_row
};

// LU factors of the current basis plus the product-form etas accumulated
// since the last refactorization.
class BasisFactor {
 public:
  void refactor(int m, const std::vector<std::vector<std::pair<int, double>>>& cols,
                const std::vector<int>& basic) {
    m_ = m;
    etas_.clear();
    if (m == 0) return;
    std::vector<Eigen::Triplet<double>> trips;
    for (int p = 0; p < m; ++p)
      for (const auto& [row, val] : cols[basic[p]]) trips.emplace_back(row, p, val);
    Eigen::SparseMatrix<double> B(m, m);
    B.setFromTriplets(trips.begin(), trips.end());
    lu_.compute(B);
    if (lu_.info() != Eigen::Success) throw SolverError("basis factorization failed");
    Eigen::SparseMatrix<double> BT = B.transpose();
    lu_t_.compute(BT);
    if (lu_t_.info() != Eigen::Success)
      throw SolverError("transposed basis factorization failed");
  }

  // x := B^{-1} x
  void ftran(Eigen::VectorXd& x) const {
    if (m_ == 0) return;
    x = lu_.solve(x);
    for (const Eta& e : etas_) {
      const double piv = x[e.pivot_row] / e.pivot_val;
      if (piv != 0.0)
        for (const auto& [row, val] : e.rest) x[row] -= val * piv;
      x[e.pivot_row] = piv;
    }
  }

  // y := B^{-T} y
  void btran(Eigen::VectorXd& y) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double dot = 0.0;
      for (const auto& [row, val] : it->rest) dot += val * y[row];
      y[it->pivot_row] = (y[it->pivot_row] - dot) / it->pivot_val;
    }
    y = lu_t_.solve(y);
  }

  void push_eta(const Eigen::VectorXd& w, int pivot_row, double drop_tol) {
    Eta e;
    e.pivot_row = pivot_row;
    e.pivot_val = w[pivot_row];
    for (int i = 0; i < m_; ++i)
      if (i != pivot_row && std::abs(w[i]) > drop_tol) e.rest.emplace_back(i, w[i]);
    etas_.push_back(std::move(e));
  }

  int eta_count() const { return static_cast<int>(etas_.size()); }

 private:
  int m_ = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_t_;
  std::vector<Eta> etas_;
};

struct Worker {
  // problem in internal min form, slacks appended
  int m = 0;
  int n = 0;       // structural + slack count
  int n_struct = 0;
  std::vector<std::vector<std::pair<int, double>>> cols;
  std::vector<double> lb, ub, cost, rhs;
  double sense_flip = 1.0;  // -1 when the user model maximizes

  const SimplexOptions* opt = nullptr;

  std::vector<VStat> vstat;
  std::vector<int> basic;  // basis position -> var
  std::vector<double> x;
  BasisFactor factor;
  int pivots_since_refactor = 0;
  std::int64_t iterations = 0;
  std::int64_t iteration_limit = 0;
  int degenerate_streak = 0;
  bool bland_mode = false;

  Eigen::VectorXd work_y, work_w;

  explicit Worker(const LinearModel& model, const SimplexOptions& options) : opt(&options) {
    m = model.num_constraints();
    n_struct = model.num_variables();
    n = n_struct + m;
    cols.resize(n);
    lb.resize(n);
    ub.resize(n);
    cost.assign(n, 0.0);
    rhs.resize(m);
    sense_flip = model.sense() == Sense::Maximize ? -1.0 : 1.0;

    for (VarId v = 0; v < n_struct; ++v) {
      lb[v] = model.variable(v).lower;
      ub[v] = model.variable(v).upper;
      cost[v] = sense_flip * model.objective()[v];
    }
    for (RowId r = 0; r < m; ++r) {
      const Constraint& row = model.constraint(r);
      for (const RowEntry& e : row.terms) cols[e.var].emplace_back(r, e.coeff);
      const int sv = n_struct + r;
      cols[sv].emplace_back(r, 1.0);
      rhs[r] = row.rhs;
      switch (row.relation) {
        case Relation::LessEqual: lb[sv] = 0.0; ub[sv] = kInfinity; break;
        case Relation::Equal: lb[sv] = 0.0; ub[sv] = 0.0; break;
        case Relation::GreaterEqual: lb[sv] = -kInfinity; ub[sv] = 0.0; break;
      }
    }
    // merge duplicate coefficients within a column so pivots see one entry per row
    for (auto& col : cols) {
      std::sort(col.begin(), col.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      std::size_t out = 0;
      for (std::size_t i = 0; i < col.size();) {
        std::size_t k = i + 1;
        double sum = col[i].second;
        while (k < col.size() && col[k].first == col[i].first) sum += col[k++].second;
        col[out++] = {col[i].first, sum};
        i = k;
      }
      col.resize(out);
    }

    iteration_limit = options.iteration_limit >= 0
                          ? options.iteration_limit
                          : 200LL * (m + n) + 10000;
    work_y.resize(m);
    work_w.resize(m);
  }

  double nonbasic_start_value(int j) const {
    if (lb[j] > -kInfinity) return lb[j];
    if (ub[j] < kInfinity) return ub[j];
    return 0.0;
  }

  void initial_basis() {
    vstat.assign(n, VStat::AtLower);
    x.assign(n, 0.0);
    basic.resize(m);
    for (int j = 0; j < n_struct; ++j) {
      if (lb[j] > -kInfinity) {
        vstat[j] = VStat::AtLower;
        x[j] = lb[j];
      } else if (ub[j] < kInfinity) {
        vstat[j] = VStat::AtUpper;
        x[j] = ub[j];
      } else {
        vstat[j] = VStat::FreeZero;
        x[j] = 0.0;
      }
    }
    for (int r = 0; r < m; ++r) {
      const int sv = n_struct + r;
      basic[r] = sv;
      vstat[sv] = VStat::Basic;
    }
    factor.refactor(m, cols, basic);
    pivots_since_refactor = 0;
    recompute_basics();
  }

  void recompute_basics() {
    if (m == 0) return;
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(rhs.data(), m);
    for (int j = 0; j < n; ++j) {
      if (vstat[j] == VStat::Basic || x[j] == 0.0) continue;
      for (const auto& [row, val] : cols[j]) r[row] -= val * x[j];
    }
    factor.ftran(r);
    for (int p = 0; p < m; ++p) x[basic[p]] = r[p];
  }

  double infeasibility() const {
    double total = 0.0;
    for (int p = 0; p < m; ++p) {
      const int j = basic[p];
      if (x[j] < lb[j]) total += lb[j] - x[j];
      if (x[j] > ub[j]) total += x[j] - ub[j];
    }
    return total;
  }

  // phase 1: costs +-1 on out-of-bounds basics; phase 2: true costs
  void compute_duals(bool phase1, Eigen::VectorXd& y) const {
    y.setZero(m);
    for (int p = 0; p < m; ++p) {
      const int j = basic[p];
      if (phase1) {
        const double ftol = opt->feas_tol;
        if (x[j] < lb[j] - ftol)
          y[p] = -1.0;
        else if (x[j] > ub[j] + ftol)
          y[p] = 1.0;
        else
          y[p] = 0.0;
      } else {
        y[p] = cost[j];
      }
    }
    factor.btran(y);
  }

  double reduced_cost(int j, const Eigen::VectorXd& y, bool phase1) const {
    double d = phase1 ? 0.0 : cost[j];
    for (const auto& [row, val] : cols[j]) d -= y[row] * val;
    return d;
  }

  // Returns entering variable and its direction, or -1 when priced out.
  std::pair<int, int> price(bool phase1, const Eigen::VectorXd& y) const {
    const double tol = opt->opt_tol;
    int best = -1, best_dir = 0;
    double best_score = tol;
    const bool bland = bland_mode || opt->bland_only;
    for (int j = 0; j < n; ++j) {
      const VStat s = vstat[j];
      if (s == VStat::Basic) continue;
      if (lb[j] == ub[j]) continue;  // fixed; can never improve
      const double d = reduced_cost(j, y, phase1);
      double score = 0.0;
      int dir = 0;
      if (s == VStat::AtLower && d < -tol) {
        score = -d;
        dir = +1;
      } else if (s == VStat::AtUpper && d > tol) {
        score = d;
        dir = -1;
      } else if (s == VStat::FreeZero && std::abs(d) > tol) {
        score = std::abs(d);
        dir = d < 0.0 ? +1 : -1;
      } else {
        continue;
      }
      if (bland) return {j, dir};
      if (opt->steepest_edge) {
        double norm2 = 1.0;
        for (const auto& [row, val] : cols[j]) norm2 += val * val;
        score /= std::sqrt(norm2);
      }
      if (score > best_score) {
        best_score = score;
        best = j;
        best_dir = dir;
      }
    }
    return {best, best_dir};
  }

  struct RatioResult {
    double theta = kInfinity;
    int leaving_pos = -1;       // -1: entering hits its own opposite bound
    double leaving_target = 0;  // bound value the leaving basic lands on
    bool leaving_at_upper = false;
    bool unbounded = false;
  };

  RatioResult ratio_test(int q, int dir, const Eigen::VectorXd& w, bool phase1) const {
    const double ftol = opt->feas_tol;
    RatioResult res;
    double theta_enter = kInfinity;
    if (lb[q] > -kInfinity && ub[q] < kInfinity) theta_enter = ub[q] - lb[q];

    // collect the tightest blocking ratio over basics
    double theta_min = theta_enter;
    for (int p = 0; p < m; ++p) {
      if (w[p] == 0.0) continue;
      const int j = basic[p];
      const double rate = -dir * w[p];  // d x_j / d theta
      if (std::abs(rate) < 1e-11) continue;
      double target;
      if (rate > 0.0) {
        if (x[j] > ub[j] + ftol) continue;  // worsening above upper: priced, not blocking
        target = (x[j] < lb[j] - ftol) ? lb[j] : ub[j];
      } else {
        if (x[j] < lb[j] - ftol) continue;
        target = (x[j] > ub[j] + ftol) ? ub[j] : lb[j];
      }
      if (target == kInfinity || target == -kInfinity) continue;
      const double theta = std::max(0.0, (target - x[j]) / rate);
      if (theta < theta_min) theta_min = theta;
    }

    if (theta_min == kInfinity) {
      res.unbounded = true;
      return res;
    }

    // among blocking basics near the minimum ratio, prefer the largest pivot;
    // under Bland's rule prefer the lowest variable index
    const double tie = 1e-9 + 1e-7 * std::abs(theta_min);
    int best_pos = -1;
    double best_pivot = 0.0;
    int best_var = n;
    double best_target = 0.0;
    const bool bland = bland_mode || opt->bland_only;
    for (int p = 0; p < m; ++p) {
      if (w[p] == 0.0) continue;
      const int j = basic[p];
      const double rate = -dir * w[p];
      if (std::abs(rate) < 1e-11) continue;
      double target;
      if (rate > 0.0) {
        if (x[j] > ub[j] + ftol) continue;
        target = (x[j] < lb[j] - ftol) ? lb[j] : ub[j];
      } else {
        if (x[j] < lb[j] - ftol) continue;
        target = (x[j] > ub[j] + ftol) ? ub[j] : lb[j];
      }
      if (target == kInfinity || target == -kInfinity) continue;
      const double theta = std::max(0.0, (target - x[j]) / rate);
      if (theta > theta_min + tie) continue;
      if (std::abs(w[p]) < opt->pivot_tol) continue;
      const bool better = bland ? (j < best_var) : (std::abs(w[p]) > best_pivot);
      if (better) {
        best_pos = p;
        best_pivot = std::abs(w[p]);
        best_var = j;
        best_target = target;
      }
    }

    if (best_pos < 0 && theta_enter <= theta_min + tie) {
      res.theta = theta_enter;  // bound flip
      return res;
    }
    if (best_pos < 0) {
      // all blocking pivots numerically unusable
      res.leaving_pos = -2;
      return res;
    }
    res.theta = theta_min;
    res.leaving_pos = best_pos;
    res.leaving_target = best_target;
    res.leaving_at_upper = best_target == ub[basic[best_pos]];
    return res;
  }

  void apply_step(int q, int dir, double theta, const Eigen::VectorXd& w) {
    if (theta != 0.0) {
      for (int p = 0; p < m; ++p)
        if (w[p] != 0.0) x[basic[p]] -= dir * theta * w[p];
      x[q] += dir * theta;
    }
  }

  enum class StepOutcome { Pivoted, BoundFlip, Unbounded, Stalled };

  StepOutcome step(bool phase1) {
    compute_duals(phase1, work_y);
    auto [q, dir] = price(phase1, work_y);
    if (q < 0) return StepOutcome::Stalled;

    work_w.setZero(m);
    for (const auto& [row, val] : cols[q]) work_w[row] = val;
    factor.ftran(work_w);

    RatioResult r = ratio_test(q, dir, work_w, phase1);
    if (r.unbounded) return StepOutcome::Unbounded;
    if (r.leaving_pos == -2) {
      // refactor once and retry with a clean basis; persistent failure is numeric
      factor.refactor(m, cols, basic);
      pivots_since_refactor = 0;
      recompute_basics();
      work_w.setZero(m);
      for (const auto& [row, val] : cols[q]) work_w[row] = val;
      factor.ftran(work_w);
      r = ratio_test(q, dir, work_w, phase1);
      if (r.unbounded) return StepOutcome::Unbounded;
      if (r.leaving_pos == -2)
        throw SolverError("no numerically acceptable pivot after " +
                          std::to_string(iterations) + " iterations");
    }

    if (r.theta <= 1e-11)
      ++degenerate_streak;
    else
      degenerate_streak = 0;
    if (!opt->bland_only) {
      if (degenerate_streak > 40) bland_mode = true;
      if (degenerate_streak == 0) bland_mode = false;
    }

    if (r.leaving_pos < 0) {
      apply_step(q, dir, r.theta, work_w);
      vstat[q] = dir > 0 ? VStat::AtUpper : VStat::AtLower;
      x[q] = dir > 0 ? ub[q] : lb[q];
      return StepOutcome::BoundFlip;
    }

    apply_step(q, dir, r.theta, work_w);
    const int leaving = basic[r.leaving_pos];
    x[leaving] = r.leaving_target;
    vstat[leaving] = r.leaving_at_upper ? VStat::AtUpper : VStat::AtLower;
    if (lb[leaving] == -kInfinity && ub[leaving] == kInfinity) vstat[leaving] = VStat::FreeZero;
    basic[r.leaving_pos] = q;
    vstat[q] = VStat::Basic;
    factor.push_eta(work_w, r.leaving_pos, 1e-12);
    if (++pivots_since_refactor >= opt->refactor_interval) {
      factor.refactor(m, cols, basic);
      pivots_since_refactor = 0;
      recompute_basics();
    }
    return StepOutcome::Pivoted;
  }

  SolveStatus run() {
    initial_basis();

    // phase 1
    while (infeasibility() > opt->feas_tol * (1.0 + static_cast<double>(m))) {
      if (iterations++ >= iteration_limit) return SolveStatus::IterationLimit;
      switch (step(true)) {
        case StepOutcome::Stalled:
          return SolveStatus::Infeasible;
        case StepOutcome::Unbounded:
          throw SolverError("phase-1 objective unbounded (inconsistent state) at iteration " +
                            std::to_string(iterations));
        default:
          break;
      }
    }

    // phase 2
    for (;;) {
      if (iterations++ >= iteration_limit) return SolveStatus::IterationLimit;
      switch (step(false)) {
        case StepOutcome::Stalled:
          return SolveStatus::Optimal;
        case StepOutcome::Unbounded:
          return SolveStatus::Unbounded;
        default:
          break;
      }
    }
  }

  Solution extract(const LinearModel& model, SolveStatus status) {
    Solution sol;
    sol.status = status;
    sol.iterations = iterations;
    sol.primal.assign(n_struct, 0.0);
    sol.row_dual.assign(m, 0.0);
    sol.reduced_cost.assign(n_struct, 0.0);
    if (status != SolveStatus::Optimal && status != SolveStatus::IterationLimit) return sol;

    // refresh factors so the reported vectors come from a clean solve
    factor.refactor(m, cols, basic);
    pivots_since_refactor = 0;
    recompute_basics();

    for (int j = 0; j < n_struct; ++j) sol.primal[j] = x[j];

    compute_duals(false, work_y);
    for (int r = 0; r < m; ++r) sol.row_dual[r] = sense_flip * work_y[r];
    for (int j = 0; j < n_struct; ++j) {
      const double d = vstat[j] == VStat::Basic ? 0.0 : reduced_cost(j, work_y, false);
      sol.reduced_cost[j] = sense_flip * d;
    }

    double obj = model.objective_constant();
    for (int j = 0; j < n_struct; ++j) obj += model.objective()[j] * x[j];
    sol.objective = obj;
    return sol;
  }
};

}  // namespace

Solution solve_lp(const LinearModel& model, const SimplexOptions& options) {
  if (!model.sealed()) throw SolverError("solve_lp requires a sealed model");
  if (model.has_binaries()) throw SolverError("solve_lp given a model with binary variables");
  Worker w(model, options);
  const SolveStatus status = w.run();
  return w.extract(model, status);
}

double check_strong_duality(const LinearModel& model, const Solution& solution) {
  if (solution.status != SolveStatus::Optimal)
    throw SolverError("check_strong_duality requires an optimal solution");
  if (model.has_binaries())
    throw SolverError("check_strong_duality requires a pure LP");

  const double flip = model.sense() == Sense::Maximize ? -1.0 : 1.0;
  double dual_obj = 0.0;
  for (RowId r = 0; r < model.num_constraints(); ++r)
    dual_obj += solution.row_dual[r] * model.constraint(r).rhs;
  for (VarId v = 0; v < model.num_variables(); ++v) {
    const double d = flip * solution.reduced_cost[v];  // internal min orientation
    if (std::abs(d) <= 1e-9) continue;
    const Variable& var = model.variable(v);
    // a positive reduced cost supports the lower bound, a negative one the upper
    const double bound = d > 0.0 ? var.lower : var.upper;
    if (!std::isfinite(bound)) continue;  // clamped dual-infeasibility residue
    dual_obj += flip * d * bound;
  }
  dual_obj += model.objective_constant();
  return std::abs(solution.objective - dual_obj);
}

double feasibility_residual(const LinearModel& model, const std::vector<double>& primal) {
  double worst = 0.0;
  for (VarId v = 0; v < model.num_variables(); ++v) {
    const Variable& var = model.variable(v);
    worst = std::max(worst, var.lower - primal[v]);
    worst = std::max(worst, primal[v] - var.upper);
  }
  for (RowId r = 0; r < model.num_constraints(); ++r) {
    const Constraint& row = model.constraint(r);
    double act = 0.0;
    for (const RowEntry& e : row.terms) act += e.coeff * primal[e.var];
    switch (row.relation) {
      case Relation::LessEqual: worst = std::max(worst, act - row.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, row.rhs - act); break;
      case Relation::Equal: worst = std::max(worst, std::abs(act - row.rhs)); break;
    }
  }
  return worst;
}

}  // namespace hessplan::lp
