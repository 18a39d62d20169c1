// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace swarmplan::sgd {

// f(x) = 0.5 (x - x*)' A (x - x*) with spectrum linspace(mu, L); f* = 0.
struct QuadraticProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd x_star;
  double mu = 0.0;
  double L = 0.0;
  double sigma0_sq = 0.0;  // E||per-sample gradient noise||^2

  double f(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
};

QuadraticProblem make_problem(int dim, double mu, double L, double sigma0_sq,
                              std::uint64_t seed);

// Noise draws are coupled across schedules: sample j of step k is identical
// for any schedule that requests at least j samples at step k, so runs that
// differ only in batch size are paired common-random-number experiments.
Eigen::VectorXd averaged_gradient(const QuadraticProblem& p,
                                  const Eigen::VectorXd& x, int m_k,
                                  std::uint64_t seed, int step);

// Monte-Carlo estimate of E||g_avg - grad f||^2 at x*.
double averaged_gradient_variance(const QuadraticProblem& p, int m_k,
                                  int trials, std::uint64_t seed);

struct SgdConfig {
  int steps = 1000;
  double lr = 0.0;       // 0: use 1/(2L)
  int staleness = 0;     // gradients evaluated staleness steps late
  std::uint64_t seed = 1;
};

struct SgdRun {
  std::vector<double> suboptimality;  // f(x_k) - f* per step
  Eigen::VectorXd x_final;
  Eigen::VectorXd x_avg;              // plain average of iterates
  double samples_used = 0.0;
  bool diverged = false;
};

SgdRun run_sgd(const QuadraticProblem& p, const Eigen::VectorXd& x0,
               const std::function<int(int)>& batch_schedule,
               const SgdConfig& config);

struct BoundCheck {
  double lhs = 0.0;  // E[f(x_avg) - f*] + mu E||x_final - x*||^2
  double rhs = 0.0;
  bool holds = false;
};

// Averages the convergence statistic over n_seeds runs with fixed batch m
// and compares against the known smooth strongly convex SGD bound.
BoundCheck check_bound(const QuadraticProblem& p, const Eigen::VectorXd& x0,
                       int T, int m, int n_seeds, std::uint64_t seed0 = 1);

}  // namespace swarmplan::sgd
