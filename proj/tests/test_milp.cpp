#include "doctest.h"
#include "hessplan/milp.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace hessplan::lp;

TEST_CASE("single binary maximization") {
  LinearModel m;
  m.add_binary("x");
  m.set_objective(Sense::Maximize, {{0, 1.0}});
  m.seal();
  Solution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.value(m, "x") == doctest::Approx(1.0));
  CHECK(s.objective == doctest::Approx(1.0));
}

TEST_CASE("knapsack matches exhaustive enumeration") {
  // max 10a+6b+4c s.t. 5a+4b+3c <= 10; best of the 8 corners is a=b=1 -> 16
  LinearModel m;
  const VarId a = m.add_binary("a");
  const VarId b = m.add_binary("b");
  const VarId c = m.add_binary("c");
  m.add_constraint("w", {{a, 5.0}, {b, 4.0}, {c, 3.0}}, Relation::LessEqual, 10.0);
  m.set_objective(Sense::Maximize, {{a, 10.0}, {b, 6.0}, {c, 4.0}});
  m.seal();

  double best = -1.0;
  for (int mask = 0; mask < 8; ++mask) {
    const double va = mask & 1, vb = (mask >> 1) & 1, vc = (mask >> 2) & 1;
    if (5 * va + 4 * vb + 3 * vc <= 10.0) best = std::max(best, 10 * va + 6 * vb + 4 * vc);
  }
  REQUIRE(best == 16.0);

  Solution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(16.0));
  CHECK(s.value(m, "a") == doctest::Approx(1.0));
  CHECK(s.value(m, "b") == doctest::Approx(1.0));
  CHECK(s.value(m, "c") == doctest::Approx(0.0));
  CHECK(s.objective <= s.mip_bound + 1e-9);
}

TEST_CASE("integral relaxation solves at the root") {
  // 2x2 assignment: the relaxation polytope has integral vertices, so no
  // node beyond the root is processed
  LinearModel m;
  VarId x[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      x[i][j] = m.add_binary("x" + std::to_string(i) + std::to_string(j));
  for (int i = 0; i < 2; ++i)
    m.add_constraint("row" + std::to_string(i), {{x[i][0], 1.0}, {x[i][1], 1.0}},
                     Relation::Equal, 1.0);
  for (int j = 0; j < 2; ++j)
    m.add_constraint("col" + std::to_string(j), {{x[0][j], 1.0}, {x[1][j], 1.0}},
                     Relation::Equal, 1.0);
  m.set_objective(Sense::Minimize,
                  {{x[0][0], 1.0}, {x[0][1], 5.0}, {x[1][0], 5.0}, {x[1][1], 2.0}});
  m.seal();
  Solution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(3.0));
  CHECK(s.nodes == 1);
}

TEST_CASE("infeasible at the root is reported") {
  LinearModel m;
  m.add_binary("a");
  m.add_binary("b");
  m.add_constraint("need3", {{0, 1.0}, {1, 1.0}}, Relation::GreaterEqual, 3.0);
  m.set_objective(Sense::Maximize, {{0, 1.0}});
  m.seal();
  CHECK(solve_milp(m).status == SolveStatus::Infeasible);
}

TEST_CASE("node limit reports the best incumbent") {
  LinearModel m;
  std::vector<RowEntry> obj, row;
  for (int i = 0; i < 12; ++i) {
    const VarId v = m.add_binary("b" + std::to_string(i));
    obj.push_back({v, 3.0 + (i % 5)});
    row.push_back({v, 2.0 + (i % 3)});
  }
  m.add_constraint("budget", row, Relation::LessEqual, 11.5);
  m.set_objective(Sense::Maximize, obj);
  m.seal();
  MilpOptions options;
  options.node_limit = 2;
  options.rounding_heuristic = false;
  Solution s = solve_milp(m, options);
  CHECK((s.status == SolveStatus::NodeLimit || s.status == SolveStatus::Optimal));
}

TEST_CASE("random binary programs match exhaustive search") {
  std::mt19937_64 rng(42);
  auto ri = [&rng](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
  };
  for (int trial = 0; trial < 60; ++trial) {
    const int k = ri(2, 7);
    const int rows = ri(1, 3);
    std::vector<double> c(k);
    std::vector<std::vector<double>> a(rows, std::vector<double>(k));
    std::vector<double> rhs(rows);
    std::vector<Relation> rel(rows);
    for (int j = 0; j < k; ++j) c[j] = ri(-6, 8);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < k; ++j) a[i][j] = ri(-3, 4);
      rhs[i] = ri(0, 8);
      rel[i] = static_cast<Relation>(ri(0, 1) * 2);  // <= or >=
    }

    double best = -1e100;
    bool any = false;
    for (int mask = 0; mask < (1 << k); ++mask) {
      bool ok = true;
      for (int i = 0; i < rows && ok; ++i) {
        double act = 0.0;
        for (int j = 0; j < k; ++j)
          if (mask & (1 << j)) act += a[i][j];
        ok = rel[i] == Relation::LessEqual ? act <= rhs[i] + 1e-9 : act >= rhs[i] - 1e-9;
      }
      if (!ok) continue;
      double obj = 0.0;
      for (int j = 0; j < k; ++j)
        if (mask & (1 << j)) obj += c[j];
      if (!any || obj > best) best = obj;
      any = true;
    }

    LinearModel m;
    std::vector<RowEntry> objterms;
    for (int j = 0; j < k; ++j) {
      m.add_binary("b" + std::to_string(j));
      objterms.push_back({j, c[j]});
    }
    for (int i = 0; i < rows; ++i) {
      std::vector<RowEntry> terms;
      for (int j = 0; j < k; ++j)
        if (a[i][j] != 0.0) terms.push_back({j, a[i][j]});
      m.add_constraint("r" + std::to_string(i), terms, rel[i], rhs[i]);
    }
    m.set_objective(Sense::Maximize, objterms);
    m.seal();
    Solution s = solve_milp(m);
    if (!any) {
      CHECK(s.status == SolveStatus::Infeasible);
      continue;
    }
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("milp re-solve is deterministic") {
  LinearModel m;
  std::vector<RowEntry> obj;
  for (int i = 0; i < 9; ++i) {
    m.add_binary("b" + std::to_string(i));
    obj.push_back({i, 1.0 + 0.37 * i});
  }
  const VarId y = m.add_variable("y", 0.0, 4.0);
  obj.push_back({y, 0.9});
  m.add_constraint("r0", {{0, 1.0}, {2, 2.0}, {4, 1.0}, {y, 1.0}}, Relation::LessEqual, 4.2);
  m.add_constraint("r1", {{1, 1.0}, {3, 1.0}, {5, 2.0}, {7, 1.0}}, Relation::LessEqual, 3.0);
  m.add_constraint("r2", {{6, 1.0}, {8, 1.0}, {y, -1.0}}, Relation::GreaterEqual, 0.5);
  m.set_objective(Sense::Maximize, obj);
  m.seal();
  Solution a = solve_milp(m);
  Solution b = solve_milp(m);
  REQUIRE(a.status == SolveStatus::Optimal);
  CHECK(a.objective == b.objective);
  CHECK(a.nodes == b.nodes);
  for (std::size_t i = 0; i < a.primal.size(); ++i) CHECK(a.primal[i] == b.primal[i]);
}
