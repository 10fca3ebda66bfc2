#include "hessplan/milp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace hessplan::lp {

namespace {

struct Node {
  int parent = -1;
  VarId var = -1;       // branching variable fixed at this node
  signed char fix = 0;  // 0 or 1
  double bound = 0.0;   // parent LP objective, internal min orientation
  int depth = 0;
  std::int64_t id = 0;
};

struct QueueEntry {
  double bound;
  std::int64_t id;
  int node;
};

struct EntryOrder {
  // best-first: smallest internal bound first, then oldest node
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

class Search {
 public:
  Search(const LinearModel& model, const MilpOptions& options)
      : user_model_(model), opt_(options), work_(model.continuous_relaxation()) {
    flip_ = model.sense() == Sense::Maximize ? -1.0 : 1.0;
    for (VarId v = 0; v < model.num_variables(); ++v)
      if (model.variable(v).type == VarType::Binary) binaries_.push_back(v);
    root_bounds_.reserve(binaries_.size());
    for (VarId v : binaries_)
      root_bounds_.emplace_back(model.variable(v).lower, model.variable(v).upper);
    work_.seal();
  }

  Solution run() {
    Solution root_sol = solve_node(-1);
    ++nodes_;
    if (root_sol.status == SolveStatus::Infeasible) {
      Solution out;
      out.status = SolveStatus::Infeasible;
      out.nodes = nodes_;
      return out;
    }
    if (root_sol.status == SolveStatus::Unbounded) {
      Solution out;
      out.status = SolveStatus::Unbounded;
      out.nodes = nodes_;
      return out;
    }

    if (try_accept(root_sol)) return finish(true);

    if (opt_.rounding_heuristic) {
      try_rounding(root_sol);
      dive(-1, root_sol);
    }

    push_children(-1, root_sol);

    std::int64_t since_dive = 0;
    while (!queue_.empty()) {
      if (nodes_ >= opt_.node_limit) return finish(false);
      const QueueEntry top = queue_.top();
      if (have_incumbent_ && gap_of(top.bound) <= opt_.gap_tol) return finish(true);
      queue_.pop();
      if (have_incumbent_ && top.bound >= incumbent_internal_ - 1e-9) continue;

      Solution sol = solve_node(top.node);
      ++nodes_;
      if (sol.status == SolveStatus::Infeasible) continue;
      if (sol.status != SolveStatus::Optimal)
        throw SolverError("node LP ended with status " + to_string(sol.status));
      const double bound = flip_ * sol.objective;
      if (have_incumbent_ && bound >= incumbent_internal_ - 1e-9) continue;
      if (try_accept(sol)) continue;
      if (opt_.rounding_heuristic && ++since_dive >= 40) {
        since_dive = 0;
        dive(top.node, sol);
      }
      push_children(top.node, sol);
    }
    return finish(true);
  }

 private:
  double gap_of(double bound_internal) const {
    const double inc = incumbent_internal_;
    return (inc - bound_internal) / std::max(1.0, std::abs(inc));
  }

  // applies the fixings along the ancestor chain, solves, restores bounds
  Solution solve_node(int node) {
    std::vector<VarId> touched;
    for (int cur = node; cur >= 0; cur = arena_[cur].parent) {
      const Node& nd = arena_[cur];
      work_.set_bounds(nd.var, nd.fix, nd.fix);
      touched.push_back(nd.var);
    }
    Solution sol = solve_lp(work_, opt_.lp);
    for (VarId v : touched) restore_root_bound(v);
    return sol;
  }

  void restore_root_bound(VarId v) {
    for (std::size_t k = 0; k < binaries_.size(); ++k)
      if (binaries_[k] == v) {
        work_.set_bounds(v, root_bounds_[k].first, root_bounds_[k].second);
        return;
      }
  }

  // integral -> maybe update incumbent; returns true when the node is fathomed
  bool try_accept(const Solution& sol) {
    VarId frac = most_fractional(sol);
    if (frac >= 0) return false;
    update_incumbent(sol);
    return true;
  }

  VarId most_fractional(const Solution& sol) const {
    VarId best = -1;
    double best_score = opt_.int_tol;
    for (VarId v : binaries_) {
      const double x = sol.primal[v];
      const double f = x - std::floor(x);
      const double score = std::min(f, 1.0 - f);
      if (score > best_score) {
        best_score = score;
        best = v;
      }
    }
    return best;
  }

  void update_incumbent(const Solution& sol) {
    const double internal = flip_ * sol.objective;
    if (!have_incumbent_ || internal < incumbent_internal_ - 1e-12) {
      have_incumbent_ = true;
      incumbent_internal_ = internal;
      incumbent_primal_ = sol.primal;
    }
  }

  // greedy depth-first probe from a node: repeatedly pin the most fractional
  // binary to its nearest value and re-solve, collecting an incumbent when
  // the probe bottoms out integral
  void dive(int node, const Solution& start) {
    std::vector<VarId> pinned;
    for (int cur = node; cur >= 0; cur = arena_[cur].parent) {
      const Node& nd = arena_[cur];
      work_.set_bounds(nd.var, nd.fix, nd.fix);
      pinned.push_back(nd.var);
    }
    Solution sol = start;
    const int max_depth = static_cast<int>(binaries_.size());
    for (int depth = 0; depth < max_depth; ++depth) {
      const VarId v = most_fractional(sol);
      if (v < 0) {
        update_incumbent(sol);
        break;
      }
      const double fix = std::round(sol.primal[v]);
      work_.set_bounds(v, fix, fix);
      pinned.push_back(v);
      sol = solve_lp(work_, opt_.lp);
      ++nodes_;
      if (sol.status != SolveStatus::Optimal) break;
      if (have_incumbent_ && flip_ * sol.objective >= incumbent_internal_ - 1e-9) break;
    }
    for (VarId v : pinned) restore_root_bound(v);
  }

  void try_rounding(const Solution& relaxation) {
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      const VarId v = binaries_[k];
      double r = std::round(relaxation.primal[v]);
      r = std::clamp(r, root_bounds_[k].first, root_bounds_[k].second);
      work_.set_bounds(v, r, r);
    }
    Solution sol = solve_lp(work_, opt_.lp);
    if (sol.status == SolveStatus::Optimal) update_incumbent(sol);
    for (std::size_t k = 0; k < binaries_.size(); ++k)
      work_.set_bounds(binaries_[k], root_bounds_[k].first, root_bounds_[k].second);
  }

  void push_children(int parent, const Solution& sol) {
    const VarId v = most_fractional(sol);
    const double bound = flip_ * sol.objective;
    const int depth = parent >= 0 ? arena_[parent].depth + 1 : 0;
    for (signed char fix : {static_cast<signed char>(0), static_cast<signed char>(1)}) {
      Node nd;
      nd.parent = parent;
      nd.var = v;
      nd.fix = fix;
      nd.bound = bound;
      nd.depth = depth + 1;
      nd.id = next_id_++;
      arena_.push_back(nd);
      queue_.push(QueueEntry{bound, nd.id, static_cast<int>(arena_.size()) - 1});
    }
  }

  Solution finish(bool proven) {
    Solution out;
    out.nodes = nodes_;
    if (!have_incumbent_) {
      out.status = proven ? SolveStatus::Infeasible : SolveStatus::NodeLimit;
      return out;
    }
    // re-solve with binaries pinned at the incumbent to expose relaxation duals
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      const double r = std::round(incumbent_primal_[binaries_[k]]);
      work_.set_bounds(binaries_[k], r, r);
    }
    out = solve_lp(work_, opt_.lp);
    for (std::size_t k = 0; k < binaries_.size(); ++k)
      work_.set_bounds(binaries_[k], root_bounds_[k].first, root_bounds_[k].second);
    out.nodes = nodes_;
    out.status = proven ? SolveStatus::Optimal : SolveStatus::NodeLimit;
    out.mip_bound = flip_ * best_open_bound();
    return out;
  }

  double best_open_bound() const {
    double bound = incumbent_internal_;
    if (!queue_.empty()) bound = std::min(bound, queue_.top().bound);
    return bound;
  }

  const LinearModel& user_model_;
  const MilpOptions& opt_;
  LinearModel work_;
  double flip_ = 1.0;
  std::vector<VarId> binaries_;
  std::vector<std::pair<double, double>> root_bounds_;
  std::vector<Node> arena_;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, EntryOrder> queue_;
  bool have_incumbent_ = false;
  double incumbent_internal_ = std::numeric_limits<double>::infinity();
  std::vector<double> incumbent_primal_;
  std::int64_t nodes_ = 0;
  std::int64_t next_id_ = 0;
};

}  // namespace

Solution solve_milp(const LinearModel& model, const MilpOptions& options) {
  if (!model.sealed()) throw SolverError("solve_milp requires a sealed model");
  if (options.gap_tol < 0.0) throw SolverError("gap_tol must be nonnegative");
  if (!model.has_binaries()) return solve_lp(model, options.lp);
  Search search(model, options);
  return search.run();
}

Solution solve_milp(const LinearModel& model, double gap_tol, std::int64_t node_limit) {
  MilpOptions options;
  options.gap_tol = gap_tol;
  options.node_limit = node_limit;
  return solve_milp(model, options);
}

}  // namespace hessplan::lp
