#include "doctest.h"
#include "hessplan/linear_model.hpp"
#include "hessplan/simplex.hpp"

#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

using namespace hessplan::lp;

namespace {

// Test-only oracle: enumerate candidate vertices of a small LP by activating
// every subset of rows/bounds of size n and solving the dense system. All
// variables must have finite boxes so the feasible region is a polytope.
struct DenseLp {
  int n = 0;
  std::vector<std::vector<double>> rows;  // coefficients
  std::vector<Relation> rel;
  std::vector<double> rhs;
  std::vector<double> lb, ub, c;
  Sense sense = Sense::Maximize;
};

bool solve_dense(std::vector<std::vector<double>> a, std::vector<double>& b) {
  const int n = static_cast<int>(b.size());
  for (int k = 0; k < n; ++k) {
    int piv = -1;
    double best = 1e-9;
    for (int i = k; i < n; ++i)
      if (std::abs(a[i][k]) > best) {
        best = std::abs(a[i][k]);
        piv = i;
      }
    if (piv < 0) return false;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (int i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (int j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    for (int j = k + 1; j < n; ++j) b[k] -= a[k][j] * b[j];
    b[k] /= a[k][k];
  }
  return true;
}

bool feasible(const DenseLp& p, const std::vector<double>& x, double tol = 1e-7) {
  for (int j = 0; j < p.n; ++j)
    if (x[j] < p.lb[j] - tol || x[j] > p.ub[j] + tol) return false;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    double act = 0.0;
    for (int j = 0; j < p.n; ++j) act += p.rows[i][j] * x[j];
    switch (p.rel[i]) {
      case Relation::LessEqual:
        if (act > p.rhs[i] + tol) return false;
        break;
      case Relation::GreaterEqual:
        if (act < p.rhs[i] - tol) return false;
        break;
      case Relation::Equal:
        if (std::abs(act - p.rhs[i]) > tol) return false;
        break;
    }
  }
  return true;
}

// returns true + best objective over enumerated vertices, or false if none feasible
bool oracle_best(const DenseLp& p, double& best) {
  // candidate tight sets: all rows (as equalities) plus variable bounds
  struct Cand {
    std::vector<double> coeff;
    double rhs;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < p.rows.size(); ++i) cands.push_back({p.rows[i], p.rhs[i]});
  for (int j = 0; j < p.n; ++j) {
    std::vector<double> e(p.n, 0.0);
    e[j] = 1.0;
    cands.push_back({e, p.lb[j]});
    cands.push_back({e, p.ub[j]});
  }
  const int k = static_cast<int>(cands.size());
  std::vector<int> pick(p.n);
  bool found = false;
  // iterate over all n-subsets
  std::vector<int> idx(p.n);
  for (int i = 0; i < p.n; ++i) idx[i] = i;
  for (;;) {
    std::vector<std::vector<double>> a(p.n, std::vector<double>(p.n));
    std::vector<double> b(p.n);
    for (int i = 0; i < p.n; ++i) {
      a[i] = cands[idx[i]].coeff;
      b[i] = cands[idx[i]].rhs;
    }
    std::vector<double> x = b;
    if (solve_dense(a, x) && feasible(p, x)) {
      double obj = 0.0;
      for (int j = 0; j < p.n; ++j) obj += p.c[j] * x[j];
      if (!found) {
        best = obj;
        found = true;
      } else if (p.sense == Sense::Maximize ? obj > best : obj < best) {
        best = obj;
      }
    }
    // next combination
    int i = p.n - 1;
    while (i >= 0 && idx[i] == k - p.n + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < p.n; ++j) idx[j] = idx[j - 1] + 1;
  }
  return found;
}

LinearModel to_model(const DenseLp& p) {
  LinearModel m;
  std::vector<RowEntry> obj;
  for (int j = 0; j < p.n; ++j) {
    const VarId v = m.add_variable("x" + std::to_string(j), p.lb[j], p.ub[j]);
    obj.push_back({v, p.c[j]});
  }
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    std::vector<RowEntry> terms;
    for (int j = 0; j < p.n; ++j)
      if (p.rows[i][j] != 0.0) terms.push_back({j, p.rows[i][j]});
    m.add_constraint("r" + std::to_string(i), terms, p.rel[i], p.rhs[i]);
  }
  m.set_objective(p.sense, obj);
  m.seal();
  return m;
}

}  // namespace

TEST_CASE("two-variable LP: optimum, duals, strong duality") {
  LinearModel m;
  const VarId x = m.add_variable("x", 0.0, kInfinity);
  const VarId y = m.add_variable("y", 0.0, kInfinity);
  m.add_constraint("cap_x", {{x, 1.0}}, Relation::LessEqual, 4.0);
  m.add_constraint("cap_y", {{y, 1.0}}, Relation::LessEqual, 3.0);
  m.add_constraint("joint", {{x, 1.0}, {y, 1.0}}, Relation::LessEqual, 5.0);
  m.set_objective(Sense::Maximize, {{x, 3.0}, {y, 2.0}});
  m.seal();

  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(14.0));
  CHECK(s.value(m, "x") == doctest::Approx(4.0));
  CHECK(s.value(m, "y") == doctest::Approx(1.0));
  CHECK(s.dual(m, "joint") == doctest::Approx(2.0));
  CHECK(s.dual(m, "cap_x") == doctest::Approx(1.0));
  CHECK(s.dual(m, "cap_y") == doctest::Approx(0.0));
  CHECK(check_strong_duality(m, s) <= 1e-9);
  CHECK(feasibility_residual(m, s.primal) <= 1e-7);
}

TEST_CASE("constant objective over a fixed point") {
  LinearModel m;
  const VarId x = m.add_variable("x", -kInfinity, kInfinity);
  m.add_constraint("fix", {{x, 1.0}}, Relation::Equal, 1.0);
  m.set_objective(Sense::Minimize, {});
  m.seal();
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(0.0));
  CHECK(s.value(m, "x") == doctest::Approx(1.0));
  CHECK(s.dual(m, "fix") == doctest::Approx(0.0));
}

TEST_CASE("unbounded ray is reported as a status") {
  LinearModel m;
  m.add_variable("x", 0.0, kInfinity);
  m.set_objective(Sense::Maximize, {{0, 1.0}});
  m.seal();
  CHECK(solve_lp(m).status == SolveStatus::Unbounded);
}

TEST_CASE("infeasible system is reported as a status") {
  LinearModel m;
  const VarId x = m.add_variable("x", 0.0, 1.0);
  m.add_constraint("demand", {{x, 1.0}}, Relation::GreaterEqual, 5.0);
  m.set_objective(Sense::Minimize, {{x, 1.0}});
  m.seal();
  CHECK(solve_lp(m).status == SolveStatus::Infeasible);
}

TEST_CASE("equality rows with free variables") {
  LinearModel m;
  const VarId x = m.add_variable("x", -kInfinity, kInfinity);
  const VarId y = m.add_variable("y", -kInfinity, kInfinity);
  m.add_constraint("sum", {{x, 1.0}, {y, 1.0}}, Relation::Equal, 10.0);
  m.add_constraint("diff", {{x, 1.0}, {y, -1.0}}, Relation::Equal, 2.0);
  m.set_objective(Sense::Minimize, {{x, 1.0}, {y, 1.0}});
  m.seal();
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.value(m, "x") == doctest::Approx(6.0));
  CHECK(s.value(m, "y") == doctest::Approx(4.0));
  CHECK(s.objective == doctest::Approx(10.0));
}

TEST_CASE("bounded variables flip between bounds") {
  // maximize x - y with x,y in [1,2] and x + y = 3: x=2, y=1
  LinearModel m;
  m.add_variable("x", 1.0, 2.0);
  m.add_variable("y", 1.0, 2.0);
  m.add_constraint("tie", {{0, 1.0}, {1, 1.0}}, Relation::Equal, 3.0);
  m.set_objective(Sense::Maximize, {{0, 1.0}, {1, -1.0}});
  m.seal();
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.value(m, "x") == doctest::Approx(2.0));
  CHECK(s.value(m, "y") == doctest::Approx(1.0));
}

TEST_CASE("merit-order stack dispatches cheapest offers first") {
  // five offers with capacities 10 and prices 1..5, demand 25:
  // clears 10+10+5, marginal price 3
  LinearModel m;
  std::vector<RowEntry> balance;
  for (int i = 0; i < 5; ++i) {
    const VarId v = m.add_variable("g" + std::to_string(i), 0.0, 10.0);
    balance.push_back({v, 1.0});
    m.set_objective_term(v, static_cast<double>(i + 1));
  }
  m.add_constraint("balance", balance, Relation::Equal, 25.0);
  m.seal();
  Solution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.value(m, "g0") == doctest::Approx(10.0));
  CHECK(s.value(m, "g1") == doctest::Approx(10.0));
  CHECK(s.value(m, "g2") == doctest::Approx(5.0));
  CHECK(s.value(m, "g3") == doctest::Approx(0.0));
  CHECK(s.dual(m, "balance") == doctest::Approx(3.0));
  CHECK(check_strong_duality(m, s) <= 1e-9);
}

TEST_CASE("re-solving an identical model is bit-identical") {
  LinearModel m;
  for (int j = 0; j < 6; ++j) m.add_variable("x" + std::to_string(j), 0.0, 10.0);
  m.add_constraint("r0", {{0, 1.0}, {1, 2.0}, {2, 1.0}}, Relation::LessEqual, 12.0);
  m.add_constraint("r1", {{1, 1.0}, {3, 1.0}, {4, 3.0}}, Relation::GreaterEqual, 4.0);
  m.add_constraint("r2", {{0, 1.0}, {2, -1.0}, {5, 1.0}}, Relation::Equal, 2.0);
  m.set_objective(Sense::Minimize, {{0, 2.0}, {1, -1.0}, {2, 1.0}, {3, 1.5}, {4, 2.5}, {5, 0.5}});
  m.seal();
  Solution a = solve_lp(m);
  Solution b = solve_lp(m);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(a.objective == b.objective);
  for (std::size_t i = 0; i < a.primal.size(); ++i) CHECK(a.primal[i] == b.primal[i]);
  for (std::size_t i = 0; i < a.row_dual.size(); ++i) CHECK(a.row_dual[i] == b.row_dual[i]);
}

TEST_CASE("randomized boxes against the vertex-enumeration oracle") {
  std::mt19937_64 rng(20240811);
  auto ri = [&rng](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
  };
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    DenseLp p;
    p.n = ri(1, 4);
    const int m_rows = ri(1, 4);
    p.sense = trial % 2 == 0 ? Sense::Maximize : Sense::Minimize;
    for (int j = 0; j < p.n; ++j) {
      p.lb.push_back(0.0);
      p.ub.push_back(static_cast<double>(ri(1, 8)));
      p.c.push_back(static_cast<double>(ri(-5, 5)));
    }
    for (int i = 0; i < m_rows; ++i) {
      std::vector<double> row(p.n);
      bool nonzero = false;
      for (int j = 0; j < p.n; ++j) {
        row[j] = static_cast<double>(ri(-3, 3));
        nonzero |= row[j] != 0.0;
      }
      if (!nonzero) row[0] = 1.0;
      p.rows.push_back(row);
      p.rel.push_back(static_cast<Relation>(ri(0, 2)));
      p.rhs.push_back(static_cast<double>(ri(-6, 10)));
    }
    double best = 0.0;
    const bool has_vertex = oracle_best(p, best);
    LinearModel model = to_model(p);
    Solution s = solve_lp(model);
    if (!has_vertex) {
      CHECK(s.status == SolveStatus::Infeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(best).epsilon(1e-7));
    CHECK(feasibility_residual(model, s.primal) <= 1e-6);
    CHECK(check_strong_duality(model, s) <= 1e-6);
    // complementary slackness: active row duals only on tight rows
    for (RowId r = 0; r < model.num_constraints(); ++r) {
      if (std::abs(s.row_dual[r]) < 1e-7) continue;
      double act = 0.0;
      for (const RowEntry& e : model.constraint(r).terms) act += e.coeff * s.primal[e.var];
      CHECK(std::abs(act - model.constraint(r).rhs) <= 1e-6);
    }
    ++solved;
  }
  CHECK(solved > 150);
  CHECK(infeasible > 20);
}

TEST_CASE("bland-only mode reaches the same objective") {
  LinearModel m;
  for (int j = 0; j < 5; ++j) m.add_variable("x" + std::to_string(j), 0.0, 4.0);
  m.add_constraint("r0", {{0, 1.0}, {1, 1.0}, {2, 1.0}}, Relation::LessEqual, 6.0);
  m.add_constraint("r1", {{2, 1.0}, {3, 1.0}, {4, 1.0}}, Relation::LessEqual, 6.0);
  m.set_objective(Sense::Maximize, {{0, 1.0}, {1, 2.0}, {2, 3.0}, {3, 2.0}, {4, 1.0}});
  m.seal();
  SimplexOptions bland;
  bland.bland_only = true;
  Solution a = solve_lp(m);
  Solution b = solve_lp(m, bland);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(a.objective == doctest::Approx(b.objective));
}

TEST_CASE("LP text dump names every section") {
  LinearModel m;
  m.add_variable("flow", 0.0, 7.5);
  m.add_binary("on");
  m.add_constraint("link", {{0, 1.0}, {1, -7.5}}, Relation::LessEqual, 0.0);
  m.set_objective(Sense::Maximize, {{0, 1.0}});
  m.seal();
  std::ostringstream os;
  write_lp_format(m, os);
  const std::string text = os.str();
  CHECK(text.find("Maximize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("link:") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(text.find("Binaries") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}
