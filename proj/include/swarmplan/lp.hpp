// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace swarmplan::lp {

enum class Relation { LessEq, Eq };
enum class LpStatus { Optimal, Infeasible, Unbounded };

class MalformedProgram : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LinearProgram {
  struct Row {
    std::vector<std::pair<int, double>> coeffs;  // (var, coefficient)
    Relation rel = Relation::LessEq;
    double rhs = 0.0;
  };

  int num_vars = 0;
  Eigen::VectorXd objective;  // maximized
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<Row> rows;

  LinearProgram() = default;
  explicit LinearProgram(int nvars);
  int add_row(std::vector<std::pair<int, double>> coeffs, Relation rel,
              double rhs);
};

struct SimplexOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-7;
  double pivot_tol = 1e-10;
  long max_iters = 500000;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  long iterations = 0;
};

LpSolution solve(const LinearProgram& prog, const SimplexOptions& opts = {});

// Worst signed violation of rows and bounds at x, after normalizing each row
// by its largest coefficient magnitude. <= 0 means feasible.
double check_feasible(const LinearProgram& prog, const Eigen::VectorXd& x);

// Human-readable dump, one row per line.
std::string dump(const LinearProgram& prog);

// Revised simplex with bounded variables and an explicit basis inverse.
// Deterministic: devex pricing with lowest-index tie break, falling back to
// Bland's rule after a run of degenerate pivots. Supports warm re-optimization
// after objective/bound edits and incremental variable/row additions, which
// the strategy pipeline uses for its lexicographic stages.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& prog, SimplexOptions opts = {});
  ~SimplexSolver();
  SimplexSolver(const SimplexSolver&) = delete;
  SimplexSolver& operator=(const SimplexSolver&) = delete;

  LpStatus optimize();
  void reset();  // drop the warm basis; next optimize() starts from slacks

  void set_objective(const Eigen::VectorXd& c);      // size = current num_vars
  void set_bounds(int var, double lo, double hi);
  int add_var(double lo, double hi, double obj_coeff = 0.0);
  int add_row(const std::vector<std::pair<int, double>>& coeffs, Relation rel,
              double rhs);

  int num_vars() const;
  double objective_value() const;
  Eigen::VectorXd solution() const;  // structural variables only
  long iterations() const;           // cumulative across optimize() calls

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace swarmplan::lp
