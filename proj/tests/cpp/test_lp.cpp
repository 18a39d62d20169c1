// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "swarmplan/lp.hpp"

using namespace swarmplan::lp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Brute-force reference optimum: every vertex of the feasible region has
// num_vars linearly independent active constraints, so enumerating all
// active-set candidates (rows as equalities plus variable bounds) and keeping
// the best feasible solution gives the exact optimum for bounded boxes.
// Equality rows are forced into every candidate set; callers keep at most one
// equality row so forcing them cannot hide a vertex behind a dependent pair.
// Returns nullopt when no candidate is feasible (empty polytope).
std::optional<double> vertex_oracle(const LinearProgram& prog) {
  const int nv = prog.num_vars;
  struct Con {
    Eigen::VectorXd normal;
    double rhs = 0.0;
  };
  std::vector<Con> forced, optional_cons;
  for (const auto& row : prog.rows) {
    Con c;
    c.normal = Eigen::VectorXd::Zero(nv);
    for (auto [v, coef] : row.coeffs) c.normal(v) += coef;
    c.rhs = row.rhs;
    (row.rel == Relation::Eq ? forced : optional_cons).push_back(c);
  }
  for (int j = 0; j < nv; ++j) {
    Con lo, up;
    lo.normal = Eigen::VectorXd::Zero(nv);
    lo.normal(j) = 1.0;
    lo.rhs = prog.lower(j);
    up.normal = lo.normal;
    up.rhs = prog.upper(j);
    optional_cons.push_back(lo);
    optional_cons.push_back(up);
  }
  const int need = nv - static_cast<int>(forced.size());
  REQUIRE(need >= 0);

  auto feasible = [&](const Eigen::VectorXd& x) {
    for (const auto& row : prog.rows) {
      double lhs = 0.0, norm = 0.0;
      for (auto [v, coef] : row.coeffs) {
        lhs += coef * x(v);
        norm = std::max(norm, std::abs(coef));
      }
      if (norm == 0.0) norm = 1.0;
      double gap = (lhs - row.rhs) / norm;
      if (row.rel == Relation::Eq ? std::abs(gap) > 1e-7 : gap > 1e-7)
        return false;
    }
    for (int j = 0; j < nv; ++j)
      if (x(j) < prog.lower(j) - 1e-9 || x(j) > prog.upper(j) + 1e-9)
        return false;
    return true;
  };

  std::optional<double> best;
  std::vector<int> pick(need);
  for (int i = 0; i < need; ++i) pick[i] = i;
  const int pool = static_cast<int>(optional_cons.size());
  if (need > pool) return best;
  while (true) {
    Eigen::MatrixXd M(nv, nv);
    Eigen::VectorXd r(nv);
    int row = 0;
    for (const auto& c : forced) {
      M.row(row) = c.normal.transpose();
      r(row++) = c.rhs;
    }
    for (int i : pick) {
      M.row(row) = optional_cons[i].normal.transpose();
      r(row++) = optional_cons[i].rhs;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() == nv) {
      Eigen::VectorXd x = lu.solve(r);
      if (feasible(x)) {
        double obj = prog.objective.dot(x);
        if (!best || obj > *best) best = obj;
      }
    }
    // next combination
    int i = need - 1;
    while (i >= 0 && pick[i] == pool - need + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int k = i + 1; k < need; ++k) pick[k] = pick[k - 1] + 1;
  }
  return best;
}

LinearProgram random_box_lp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int nv = 2 + static_cast<int>(rng() % 3);       // 2..4
  const int rows = 1 + static_cast<int>(rng() % 5);     // 1..5
  LinearProgram prog(nv);
  for (int j = 0; j < nv; ++j) {
    prog.upper(j) = 0.5 + 2.5 * unit(rng);
    prog.objective(j) = 2.0 * unit(rng) - 1.0;
  }
  for (int r = 0; r < rows; ++r) {
    std::vector<std::pair<int, double>> coeffs;
    for (int j = 0; j < nv; ++j)
      if (unit(rng) < 0.8) coeffs.push_back({j, 4.0 * unit(rng) - 2.0});
    if (coeffs.empty()) coeffs.push_back({0, 1.0});
    // one equality row at most, and only in every fifth program
    Relation rel =
        (r == 0 && seed % 5 == 0) ? Relation::Eq : Relation::LessEq;
    prog.add_row(std::move(coeffs), rel, 4.0 * unit(rng));
  }
  return prog;
}

}  // namespace

TEST_CASE("maximizing a single bounded variable hits its constraint") {
  LinearProgram prog(1);
  prog.objective(0) = 1.0;
  prog.upper(0) = 10.0;
  prog.add_row({{0, 1.0}}, Relation::LessEq, 3.0);
  LpSolution sol = solve(prog);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.0));
  CHECK(sol.x(0) == doctest::Approx(3.0));
}

TEST_CASE("ties across an optimal face still satisfy the program") {
  LinearProgram prog(2);
  prog.objective << 1.0, 1.0;
  prog.upper << 1.0, 1.0;
  prog.add_row({{0, 1.0}, {1, 1.0}}, Relation::LessEq, 1.0);
  LpSolution sol = solve(prog);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0));
  CHECK(check_feasible(prog, sol.x) <= 1e-7);
}

TEST_CASE("equality rows are honored") {
  LinearProgram prog(2);
  prog.objective << 1.0, -1.0;
  prog.upper << 2.0, 2.0;
  prog.add_row({{0, 1.0}, {1, 1.0}}, Relation::Eq, 0.5);
  LpSolution sol = solve(prog);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(0.5));  // x = (0.5, 0)
  CHECK(sol.x(0) + sol.x(1) == doctest::Approx(0.5));
}

TEST_CASE("conflicting constraints come back infeasible") {
  LinearProgram prog(1);
  prog.objective(0) = 1.0;
  prog.add_row({{0, 1.0}}, Relation::LessEq, -1.0);  // x >= 0 and x <= -1
  CHECK(solve(prog).status == LpStatus::Infeasible);

  LinearProgram eq(2);
  eq.upper << 1.0, 1.0;
  eq.add_row({{0, 1.0}, {1, 1.0}}, Relation::Eq, 5.0);  // beyond the box
  CHECK(solve(eq).status == LpStatus::Infeasible);
}

TEST_CASE("missing upper bounds make an improving ray unbounded") {
  LinearProgram prog(2);
  prog.objective << 1.0, 0.0;
  prog.add_row({{1, 1.0}}, Relation::LessEq, 1.0);  // x0 unconstrained above
  CHECK(solve(prog).status == LpStatus::Unbounded);
}

TEST_CASE("check_feasible reports the worst normalized violation") {
  LinearProgram prog(2);
  prog.upper << 1.0, 1.0;
  prog.add_row({{0, 2.0}, {1, 2.0}}, Relation::LessEq, 2.0);
  Eigen::VectorXd inside(2), edge(2), outside(2);
  inside << 0.25, 0.25;
  edge << 0.5, 0.5;
  outside << 1.0, 1.0;
  // bound gaps count too: 0.25 above the lower bound is the tightest margin
  CHECK(check_feasible(prog, inside) == doctest::Approx(-0.25));
  CHECK(check_feasible(prog, edge) == doctest::Approx(0.0));
  // (4 - 2) / 2: the row is normalized by its largest coefficient
  CHECK(check_feasible(prog, outside) == doctest::Approx(1.0));

  LinearProgram eq(1);
  eq.upper(0) = 2.0;
  eq.add_row({{0, 1.0}}, Relation::Eq, 1.0);
  Eigen::VectorXd below(1);
  below << 0.5;
  CHECK(check_feasible(eq, below) == doctest::Approx(0.5));  // |gap| for =
}

TEST_CASE("dump prints the objective, rows and bounds") {
  LinearProgram prog(2);
  prog.objective << 1.0, 0.0;
  prog.upper << 3.0, kInf;
  prog.add_row({{0, 1.0}, {1, -2.0}}, Relation::LessEq, 1.0);
  prog.add_row({{1, 1.0}}, Relation::Eq, 0.5);
  std::string text = dump(prog);
  CHECK(text.find("max") != std::string::npos);
  CHECK(text.find("<=") != std::string::npos);
  CHECK(text.find(" = ") != std::string::npos);
  CHECK(text.find("x1") != std::string::npos);
}

TEST_CASE("malformed programs are rejected up front") {
  LinearProgram prog(2);
  prog.objective = Eigen::VectorXd::Zero(3);  // wrong size
  CHECK_THROWS_AS(solve(prog), MalformedProgram);

  LinearProgram bad_bounds(1);
  bad_bounds.lower(0) = 2.0;
  bad_bounds.upper(0) = 1.0;
  CHECK_THROWS_AS(solve(bad_bounds), MalformedProgram);

  LinearProgram bad_row(1);
  bad_row.add_row({{3, 1.0}}, Relation::LessEq, 1.0);
  CHECK_THROWS_AS(solve(bad_row), MalformedProgram);

  LinearProgram nan_rhs(1);
  nan_rhs.add_row({{0, 1.0}}, Relation::LessEq,
                  std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(solve(nan_rhs), MalformedProgram);

  LinearProgram inf_coef(1);
  inf_coef.add_row({{0, kInf}}, Relation::LessEq, 1.0);
  CHECK_THROWS_AS(solve(inf_coef), MalformedProgram);
}

TEST_CASE("repeat solves are bit identical") {
  LinearProgram prog = random_box_lp(424242);
  LpSolution s1 = solve(prog);
  LpSolution s2 = solve(prog);
  REQUIRE(s1.status == s2.status);
  CHECK(s1.iterations == s2.iterations);
  CHECK(s1.objective == s2.objective);
  REQUIRE(s1.x.size() == s2.x.size());
  for (int j = 0; j < s1.x.size(); ++j) CHECK(s1.x(j) == s2.x(j));
}

TEST_CASE("row scaling does not move the optimum") {
  LinearProgram prog(3);
  prog.objective << 3.0, 1.0, 2.0;
  prog.upper << 5.0, 5.0, 5.0;
  prog.add_row({{0, 1.0}, {1, 1.0}}, Relation::LessEq, 2.0);
  prog.add_row({{1, 1.0}, {2, 2.0}}, Relation::LessEq, 3.0);
  LpSolution base = solve(prog);
  LinearProgram scaled = prog;
  for (auto& row : scaled.rows) {
    for (auto& [v, coef] : row.coeffs) coef *= 1e3;
    row.rhs *= 1e3;
  }
  LpSolution after = solve(scaled);
  REQUIRE(after.status == base.status);
  CHECK(after.objective == doctest::Approx(base.objective).epsilon(1e-9));
  for (int j = 0; j < 3; ++j)
    CHECK(after.x(j) == doctest::Approx(base.x(j)).epsilon(1e-9));
}

TEST_CASE("solver optimum matches exhaustive vertex enumeration") {
  int infeasible_seen = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    LinearProgram prog = random_box_lp(seed);
    std::optional<double> best = vertex_oracle(prog);
    LpSolution sol = solve(prog);
    CAPTURE(seed);
    if (!best) {
      ++infeasible_seen;
      CHECK(sol.status == LpStatus::Infeasible);
      continue;
    }
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective ==
          doctest::Approx(*best).epsilon(1e-7).scale(std::max(1.0, *best)));
    CHECK(check_feasible(prog, sol.x) <= 1e-6);
  }
  // the equality-row cases should produce at least one empty polytope
  CHECK(infeasible_seen > 0);
}

TEST_CASE("warm re-optimization matches a cold solve after edits") {
  for (std::uint64_t seed = 300; seed < 340; ++seed) {
    LinearProgram prog = random_box_lp(seed);
    if (!vertex_oracle(prog)) continue;
    SimplexSolver solver(prog);
    REQUIRE(solver.optimize() == LpStatus::Optimal);

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd c2(prog.num_vars);
    for (int j = 0; j < prog.num_vars; ++j) c2(j) = 2.0 * unit(rng) - 1.0;

    solver.set_objective(c2);
    REQUIRE(solver.optimize() == LpStatus::Optimal);

    LinearProgram cold = prog;
    cold.objective = c2;
    LpSolution fresh = solve(cold);
    REQUIRE(fresh.status == LpStatus::Optimal);
    CAPTURE(seed);
    CHECK(solver.objective_value() ==
          doctest::Approx(fresh.objective).epsilon(1e-8));
  }
}

TEST_CASE("bound edits re-optimize correctly") {
  LinearProgram prog(2);
  prog.objective << 1.0, 1.0;
  prog.upper << 4.0, 4.0;
  prog.add_row({{0, 1.0}, {1, 1.0}}, Relation::LessEq, 5.0);
  SimplexSolver solver(prog);
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  CHECK(solver.objective_value() == doctest::Approx(5.0));

  solver.set_bounds(0, 0.0, 0.0);  // pin the first variable
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  CHECK(solver.objective_value() == doctest::Approx(4.0));
  CHECK(solver.solution()(0) == doctest::Approx(0.0));

  solver.set_bounds(0, 0.0, 4.0);
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  CHECK(solver.objective_value() == doctest::Approx(5.0));

  CHECK_THROWS_AS(solver.set_bounds(99, 0.0, 1.0), MalformedProgram);
  CHECK_THROWS_AS(solver.set_bounds(0, 2.0, 1.0), MalformedProgram);
}

TEST_CASE("incremental rows and variables extend the program") {
  LinearProgram prog(1);
  prog.objective(0) = 1.0;
  prog.upper(0) = 10.0;
  prog.add_row({{0, 1.0}}, Relation::LessEq, 3.0);
  SimplexSolver solver(prog);
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  CHECK(solver.objective_value() == doctest::Approx(3.0));

  solver.add_row({{0, 1.0}}, Relation::LessEq, 2.0);  // tighter cut
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  CHECK(solver.objective_value() == doctest::Approx(2.0));

  int z = solver.add_var(0.0, 1.5, 2.0);
  CHECK(z == 1);
  CHECK(solver.num_vars() == 2);
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  CHECK(solver.objective_value() == doctest::Approx(5.0));

  solver.add_row({{0, 1.0}, {z, 1.0}}, Relation::LessEq, 2.5);
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  // best split of 2.5 between obj weights 1 and 2 puts 1.5 on z
  CHECK(solver.objective_value() == doctest::Approx(4.0));
  CHECK_THROWS_AS(solver.add_row({{7, 1.0}}, Relation::LessEq, 1.0),
                  MalformedProgram);
}

TEST_CASE("reset drops the warm basis but not the program") {
  LinearProgram prog = random_box_lp(77);
  SimplexSolver solver(prog);
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  double first = solver.objective_value();
  long iters_after_first = solver.iterations();
  solver.reset();
  REQUIRE(solver.optimize() == LpStatus::Optimal);
  CHECK(solver.objective_value() == doctest::Approx(first).epsilon(1e-10));
  CHECK(solver.iterations() >= iters_after_first);  // counter is cumulative
}
