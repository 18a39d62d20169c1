// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0

#include "swarmplan/sgd.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace swarmplan::sgd {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Box-Muller on raw engine output; std::normal_distribution is not pinned
// down by the standard, and coupled runs need bit-identical draws.
class Gauss {
 public:
  explicit Gauss(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = (double(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double u2 = double(rng_() >> 11) * 0x1.0p-53;          // [0, 1)
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace

double QuadraticProblem::f(const Eigen::VectorXd& x) const {
  Eigen::VectorXd d = x - x_star;
  return 0.5 * d.dot(A * d);
}

Eigen::VectorXd QuadraticProblem::grad(const Eigen::VectorXd& x) const {
  return A * (x - x_star);
}

QuadraticProblem make_problem(int dim, double mu, double L, double sigma0_sq,
                              std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(0 < mu && mu <= L))
    throw std::invalid_argument("need 0 < mu <= L");
  if (sigma0_sq < 0)
    throw std::invalid_argument("sigma0_sq must be non-negative");
  Gauss g(mix64(seed, 0x51ad));
  Eigen::MatrixXd raw(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) raw(i, j) = g();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd spectrum = Eigen::VectorXd::LinSpaced(dim, mu, L);
  QuadraticProblem p;
  p.A = Q * spectrum.asDiagonal() * Q.transpose();
  p.A = 0.5 * (p.A + p.A.transpose()).eval();
  p.x_star.resize(dim);
  for (int i = 0; i < dim; ++i) p.x_star(i) = g();
  p.mu = mu;
  p.L = L;
  p.sigma0_sq = sigma0_sq;
  return p;
}

Eigen::VectorXd averaged_gradient(const QuadraticProblem& p,
                                  const Eigen::VectorXd& x, int m_k,
                                  std::uint64_t seed, int step) {
  if (m_k < 1) throw std::invalid_argument("batch size must be >= 1");
  const int dim = static_cast<int>(p.A.rows());
  // One generator per step: sample j is draws [j*dim, (j+1)*dim), so any two
  // schedules agree on every sample index they share.
  Gauss g(mix64(seed, static_cast<std::uint64_t>(step)));
  double scale = std::sqrt(p.sigma0_sq / dim);
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(dim);
  for (int j = 0; j < m_k; ++j)
    for (int i = 0; i < dim; ++i) noise(i) += scale * g();
  return p.grad(x) + noise / double(m_k);
}

double averaged_gradient_variance(const QuadraticProblem& p, int m_k,
                                  int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd g = averaged_gradient(p, p.x_star, m_k, seed, t);
    acc += g.squaredNorm();  // grad f(x*) = 0, so this is pure noise
  }
  return acc / trials;
}

SgdRun run_sgd(const QuadraticProblem& p, const Eigen::VectorXd& x0,
               const std::function<int(int)>& batch_schedule,
               const SgdConfig& config) {
  if (config.steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (config.staleness < 0)
    throw std::invalid_argument("staleness must be >= 0");
  const double lr = config.lr > 0 ? config.lr : 1.0 / (2.0 * p.L);
  const double f0 = p.f(x0);
  const double blowup = 1e6 * (f0 > 0 ? f0 : 1.0);
  SgdRun run;
  run.suboptimality.reserve(config.steps);
  std::vector<Eigen::VectorXd> history;
  history.reserve(config.steps + 1);
  history.push_back(x0);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x0.size());
  for (int k = 0; k < config.steps; ++k) {
    int m_k = batch_schedule(k);
    int at = std::max(0, k - config.staleness);
    Eigen::VectorXd g = averaged_gradient(p, history[at], m_k, config.seed, k);
    Eigen::VectorXd x_next = history.back() - lr * g;
    double fx = p.f(x_next);
    if (!std::isfinite(fx) || fx > blowup) {
      run.diverged = true;
      run.x_final = x_next;
      run.x_avg = history.back();
      return run;
    }
    run.suboptimality.push_back(fx);
    run.samples_used += m_k;
    sum += x_next;
    history.push_back(std::move(x_next));
  }
  run.x_final = history.back();
  run.x_avg = sum / double(config.steps);
  return run;
}

BoundCheck check_bound(const QuadraticProblem& p, const Eigen::VectorXd& x0,
                       int T, int m, int n_seeds, std::uint64_t seed0) {
  if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
  double mean_f_avg = 0.0;
  double mean_dist_sq = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    SgdConfig cfg;
    cfg.steps = T;
    cfg.seed = seed0 + static_cast<std::uint64_t>(s);
    SgdRun run = run_sgd(p, x0, [m](int) { return m; }, cfg);
    if (run.diverged)
      throw std::runtime_error("sgd diverged while checking the bound");
    mean_f_avg += p.f(run.x_avg);
    mean_dist_sq += (run.x_final - p.x_star).squaredNorm();
  }
  mean_f_avg /= n_seeds;
  mean_dist_sq /= n_seeds;

  const double R_sq = (x0 - p.x_star).squaredNorm();
  const double R = std::sqrt(R_sq);
  const double sigma0 = std::sqrt(p.sigma0_sq);
  double strongly_convex = 64.0 * p.L * R_sq * std::exp(-p.mu * T / (4.0 * p.L)) +
                           36.0 * p.sigma0_sq / (p.mu * m * T);
  double convex = 2.0 * p.L * R_sq / T + 2.0 * sigma0 * R / std::sqrt(double(m) * T);

  BoundCheck out;
  out.lhs = mean_f_avg + p.mu * mean_dist_sq;
  out.rhs = std::min(strongly_convex, convex);
  out.holds = out.lhs <= out.rhs;
  return out;
}

}  // namespace swarmplan::sgd
