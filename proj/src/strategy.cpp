// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
//
// Communication strategy optimizer. build_lp emits the reference program
// whose service family has one row per (reducer, recipient, computing peer)
// triple; solve_strategy works on an equivalent compaction that replaces the
// triple family with per-reducer aggregation-rate variables M_i
// (g_ij <= M_i, M_i <= a_ki + (1-c_k) d_i), dropping the row count from
// O(n^3) to O(n^2). The two programs have the same optimum because at any
// optimum of the compact form M_i can be taken as min_k of its ceilings.

#include "swarmplan/strategy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "swarmplan/scenario.hpp"

namespace swarmplan::strategy {

namespace {

constexpr double kBig = 1024.0;  // scaled-unit cap standing in for +inf

struct Sets {
  std::vector<int> computing;   // can_compute and positive rate
  std::vector<int> recipients;  // non-client computing-capable peers
  std::vector<char> is_computing, is_recipient;
  double flow_scale = 1.0;  // bits/s per scaled flow unit
  double xi_scale = 1.0;    // steps/s per scaled xi unit
};

Sets classify(const CollaborationSpec& spec, bool communication_only) {
  Sets s;
  int n = spec.size();
  s.is_computing.assign(n, 0);
  s.is_recipient.assign(n, 0);
  double total_rate = 0.0, cap = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& p = spec.peers[i];
    if (p.can_compute && p.samples_per_sec > 0) {
      s.computing.push_back(i);
      s.is_computing[i] = 1;
      total_rate += p.samples_per_sec;
    }
    if (p.can_compute && !p.client_mode) {
      s.recipients.push_back(i);
      s.is_recipient[i] = 1;
    }
    cap = std::max(cap, std::max(p.download_bps, p.upload_bps));
  }
  s.flow_scale = cap > 0 ? cap : 1.0;
  s.xi_scale = communication_only
                   ? s.flow_scale / spec.payload_bits()
                   : total_rate / spec.batch_size;
  return s;
}

void require_valid(const CollaborationSpec& spec) {
  auto violations = validate(spec);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid collaboration spec:";
  for (const auto& v : violations) {
    os << " [";
    if (v.peer >= 0) os << spec.peers[v.peer].id << ".";
    os << v.field << ": " << v.message << "]";
  }
  throw std::invalid_argument(os.str());
}

}  // namespace

StrategyProblem build_lp(const CollaborationSpec& spec) {
  require_valid(spec);
  int n = spec.size();
  Sets sets = classify(spec, false);
  const double U = sets.flow_scale;
  const double Xi = sets.xi_scale;
  const double P = spec.payload_bits();

  StrategyProblem out;
  out.n = n;
  out.a_base = 0;
  out.g_base = n * n;
  out.c_base = 2 * n * n;
  out.xi_var = 2 * n * n + n;
  out.flow_scale = U;
  out.xi_scale = Xi;

  lp::LinearProgram prog(2 * n * n + n + 1);
  for (int v = 0; v < 2 * n * n; ++v) prog.upper(v) = kBig;
  for (int i = 0; i < n; ++i)
    prog.upper(out.c_base + i) = spec.peers[i].can_compute ? 1.0 : 0.0;
  prog.upper(out.xi_var) = 4.0;
  prog.objective(out.xi_var) = 1.0;

  // clients accept no inbound flows
  for (int i = 0; i < n; ++i) {
    if (!spec.peers[i].client_mode) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      prog.upper(out.a(j, i)) = 0.0;
      prog.upper(out.g(j, i)) = 0.0;
    }
  }

  // compute throughput: xi bounded by total duty-cycled sample rate
  {
    std::vector<std::pair<int, double>> row{{out.xi_var, 1.0}};
    for (int i = 0; i < n; ++i)
      if (spec.peers[i].can_compute)
        row.emplace_back(out.c(i), -spec.peers[i].samples_per_sec /
                                       (spec.batch_size * Xi));
    prog.add_row(std::move(row), lp::Relation::LessEq, 0.0);
    out.rows_compute = 1;
  }

  // aggregate throughput: every recipient must take delivery of a full
  // model's worth of averaged partitions per step
  for (int i : sets.recipients) {
    std::vector<std::pair<int, double>> row{{out.xi_var, 1.0}};
    for (int j = 0; j < n; ++j)
      row.emplace_back(out.g(j, i), -U / (P * Xi));
    prog.add_row(std::move(row), lp::Relation::LessEq, 0.0);
    ++out.rows_aggregate;
  }

  // service rate: a reducer forwards no faster than its slowest gradient
  // arrival, where an idle fraction of peer k can be fetched at d_i instead
  for (int i = 0; i < n; ++i) {
    double di = spec.peers[i].download_bps / U;
    for (int j = 0; j < n; ++j) {
      for (int k : sets.computing) {
        prog.add_row({{out.g(i, j), 1.0}, {out.a(k, i), -1.0},
                      {out.c(k), di}},
                     lp::Relation::LessEq, di);
        ++out.rows_service;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      row.emplace_back(out.a(j, i), 1.0);
      row.emplace_back(out.g(j, i), 1.0);
    }
    prog.add_row(std::move(row), lp::Relation::LessEq,
                 spec.peers[i].download_bps / U);
    ++out.rows_download;
  }
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      row.emplace_back(out.a(i, j), 1.0);
      row.emplace_back(out.g(i, j), 1.0);
    }
    prog.add_row(std::move(row), lp::Relation::LessEq,
                 spec.peers[i].upload_bps / U);
    ++out.rows_upload;
  }

  for (const auto& l : spec.links) {
    if (!std::isfinite(l.bps)) continue;
    prog.add_row({{out.a(l.from, l.to), 1.0}, {out.g(l.from, l.to), 1.0}},
                 lp::Relation::LessEq, l.bps / U);
    ++out.rows_link;
  }

  out.prog = std::move(prog);
  return out;
}

namespace {

// Compact program solved by the pipeline. Layout: a, g, c, xi as in the
// reference form, then M_i per reducer.
struct CompactProblem {
  lp::LinearProgram prog;
  int n = 0;
  int a_base = 0, g_base = 0, c_base = 0, xi_var = 0, m_base = 0;
  Sets sets;
  int a(int i, int j) const { return a_base + i * n + j; }
  int g(int i, int j) const { return g_base + i * n + j; }
  int c(int i) const { return c_base + i; }
};

CompactProblem build_compact(const CollaborationSpec& spec,
                             bool communication_only) {
  int n = spec.size();
  CompactProblem out;
  out.n = n;
  out.sets = classify(spec, communication_only);
  const Sets& sets = out.sets;
  const double U = sets.flow_scale;
  const double Xi = sets.xi_scale;
  const double P = spec.payload_bits();

  out.a_base = 0;
  out.g_base = n * n;
  out.c_base = 2 * n * n;
  out.xi_var = 2 * n * n + n;
  out.m_base = 2 * n * n + n + 1;

  lp::LinearProgram prog(2 * n * n + n + 1 + n);
  for (int v = 0; v < 2 * n * n; ++v) prog.upper(v) = kBig;
  for (int i = 0; i < n; ++i) {
    bool active = sets.is_computing[i];
    double fixed = communication_only && active ? 1.0 : 0.0;
    if (communication_only || !active) {
      prog.lower(out.c(i)) = fixed;
      prog.upper(out.c(i)) = fixed;
    } else {
      prog.upper(out.c(i)) = 1.0;
    }
  }
  prog.upper(out.xi_var) = 4.0;
  for (int i = 0; i < n; ++i) prog.upper(out.m_base + i) = kBig;
  prog.objective(out.xi_var) = 1.0;

  // presolve: zero inbound flows of clients, gradient flows from peers that
  // never compute, and partition flows toward non-recipients
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && spec.peers[j].client_mode) {
        prog.upper(out.a(i, j)) = 0.0;
        prog.upper(out.g(i, j)) = 0.0;
      }
      if (!sets.is_computing[i]) prog.upper(out.a(i, j)) = 0.0;
      if (!sets.is_recipient[j]) prog.upper(out.g(i, j)) = 0.0;
    }
  }

  if (!communication_only) {
    std::vector<std::pair<int, double>> row{{out.xi_var, 1.0}};
    for (int k : sets.computing)
      row.emplace_back(out.c(k), -spec.peers[k].samples_per_sec /
                                     (spec.batch_size * Xi));
    prog.add_row(std::move(row), lp::Relation::LessEq, 0.0);
  }

  for (int i : sets.recipients) {
    std::vector<std::pair<int, double>> row{{out.xi_var, 1.0}};
    for (int j = 0; j < n; ++j)
      row.emplace_back(out.g(j, i), -U / (P * Xi));
    prog.add_row(std::move(row), lp::Relation::LessEq, 0.0);
  }

  if (!sets.recipients.empty()) {
    for (int i = 0; i < n; ++i) {
      for (int j : sets.recipients)
        prog.add_row({{out.g(i, j), 1.0}, {out.m_base + i, -1.0}},
                     lp::Relation::LessEq, 0.0);
      double di = spec.peers[i].download_bps / U;
      for (int k : sets.computing)
        prog.add_row({{out.m_base + i, 1.0}, {out.a(k, i), -1.0},
                      {out.c(k), di}},
                     lp::Relation::LessEq, di);
    }
  }

  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      row.emplace_back(out.a(j, i), 1.0);
      row.emplace_back(out.g(j, i), 1.0);
    }
    prog.add_row(std::move(row), lp::Relation::LessEq,
                 spec.peers[i].download_bps / U);
  }
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      row.emplace_back(out.a(i, j), 1.0);
      row.emplace_back(out.g(i, j), 1.0);
    }
    prog.add_row(std::move(row), lp::Relation::LessEq,
                 spec.peers[i].upload_bps / U);
  }
  for (const auto& l : spec.links) {
    if (!std::isfinite(l.bps)) continue;
    prog.add_row({{out.a(l.from, l.to), 1.0}, {out.g(l.from, l.to), 1.0}},
                 lp::Relation::LessEq, l.bps / U);
  }

  out.prog = std::move(prog);
  return out;
}

}  // namespace

StrategyAssignment solve_strategy(const CollaborationSpec& spec,
                                  const SolveOptions& opts) {
  require_valid(spec);
  int n = spec.size();
  CompactProblem cp = build_compact(spec, opts.communication_only);
  const Sets& sets = cp.sets;
  const double U = sets.flow_scale;

  lp::SimplexSolver solver(cp.prog, opts.simplex);

  auto t_begin = std::chrono::steady_clock::now();
  long iter_mark = 0;
  auto log_stage = [&](const char* what) {
    if (log_level() < LogLevel::Debug) return;
    auto now = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(now - t_begin).count();
    long it = solver.iterations();
    log_debug(std::string("solve_strategy ") + what + ": +" +
              std::to_string(it - iter_mark) + " iters (total " +
              std::to_string(it) + ", " + std::to_string(ms) + " ms)");
    iter_mark = it;
  };

  // stage A: best throughput under the continuous duty-cycle relaxation
  lp::LpStatus st = solver.optimize();
  if (st != lp::LpStatus::Optimal)
    throw std::runtime_error("strategy solve did not reach an optimum");
  log_stage("stage A");
  double xi_star = solver.solution()(cp.xi_var);

  // The relaxation is not exact: when compute is over-provisioned the
  // optimum may hold every duty cycle strictly inside (0,1), trading compute
  // throughput for service slack that no real schedule can realize (a peer
  // that computes at all must ship full-size gradients). Deployable duty
  // cycles are 0 or 1, so when stage A returns fractional values we re-solve
  // with each threshold-induced 0/1 assignment fixed and keep the best.
  if (!opts.communication_only && !sets.computing.empty()) {
    Eigen::VectorXd x0 = solver.solution();
    bool fractional = false;
    for (int k : sets.computing) {
      double ck = x0(cp.c(k));
      if (ck > 1e-7 && ck < 1.0 - 1e-7) fractional = true;
    }
    if (fractional) {
      std::vector<double> levels;
      for (int k : sets.computing) {
        double ck = x0(cp.c(k));
        if (ck > 1e-7) levels.push_back(std::min(ck, 1.0));
      }
      std::sort(levels.begin(), levels.end(), std::greater<double>());
      levels.erase(std::unique(levels.begin(), levels.end(),
                               [](double a, double b) { return a - b < 1e-9; }),
                   levels.end());
      levels.push_back(0.0);  // everyone capable of computing switched on
      double best_xi = -1.0;
      int best_count = -1;
      std::vector<char> best_mask;
      std::vector<char> applied_mask;
      int prev_count = -1;
      for (double level : levels) {
        std::vector<char> mask(n, 0);
        int count = 0;
        for (int k : sets.computing) {
          if (x0(cp.c(k)) >= level - 1e-12) {
            mask[k] = 1;
            ++count;
          }
        }
        if (count == 0 || count == prev_count) continue;
        prev_count = count;
        solver.set_bounds(cp.xi_var, 0.0, 4.0);
        for (int k : sets.computing) {
          double fixed = mask[k] ? 1.0 : 0.0;
          solver.set_bounds(cp.c(k), fixed, fixed);
        }
        // the relaxed vertex is badly infeasible once the duty cycles are
        // pinned; restarting from slacks (all flows zero is feasible) beats
        // dragging it back through a long repair phase
        solver.reset();
        if (solver.optimize() != lp::LpStatus::Optimal)
          throw std::runtime_error("strategy duty-cycle restriction failed");
        log_stage("duty restriction");
        applied_mask = mask;
        double xi_level = solver.solution()(cp.xi_var);
        double tol = 1e-9 * std::max(1.0, std::abs(best_xi));
        if (xi_level > best_xi + tol ||
            (xi_level > best_xi - tol && count > best_count)) {
          best_xi = xi_level;
          best_count = count;
          best_mask = mask;
        }
      }
      if (applied_mask != best_mask) {
        for (int k : sets.computing) {
          double fixed = best_mask[k] ? 1.0 : 0.0;
          solver.set_bounds(cp.c(k), fixed, fixed);
        }
        solver.set_bounds(cp.xi_var, 0.0, 4.0);
        solver.reset();
        if (solver.optimize() != lp::LpStatus::Optimal)
          throw std::runtime_error("strategy duty-cycle restriction failed");
        log_stage("duty final");
      }
      xi_star = solver.solution()(cp.xi_var);
    }
  }
  solver.set_bounds(cp.xi_var, xi_star, xi_star);

  // stage B: of the xi-optimal strategies, prefer maximum compute
  // participation, then pin the duty cycles
  if (!opts.communication_only && !sets.computing.empty()) {
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(solver.num_vars());
    for (int k : sets.computing)
      obj(cp.c(k)) = spec.peers[k].samples_per_sec;
    solver.set_objective(obj);
    if (solver.optimize() != lp::LpStatus::Optimal)
      throw std::runtime_error("strategy stage B failed");
    log_stage("stage B");
    Eigen::VectorXd x = solver.solution();
    for (int k : sets.computing)
      solver.set_bounds(cp.c(k), x(cp.c(k)), x(cp.c(k)));
  }

  // stage C: maximize the total per-reducer service floor, which spreads
  // aggregation across equivalent peers instead of leaving the split to
  // arbitrary vertex choice
  std::vector<int> fvar(n, -1);
  if (!sets.recipients.empty()) {
    for (int i = 0; i < n; ++i) fvar[i] = solver.add_var(0.0, kBig, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j : sets.recipients)
        solver.add_row({{fvar[i], 1.0}, {cp.g(i, j), -1.0}},
                       lp::Relation::LessEq, 0.0);
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(solver.num_vars());
    for (int i = 0; i < n; ++i) obj(fvar[i]) = 1.0;
    solver.set_objective(obj);
    if (solver.optimize() != lp::LpStatus::Optimal)
      throw std::runtime_error("strategy stage C failed");
    log_stage("stage C");
    Eigen::VectorXd x = solver.solution();
    for (int i = 0; i < n; ++i)
      solver.set_bounds(fvar[i], x(fvar[i]), x(fvar[i]));
  }

  // stage D: cheapest flow matrices achieving all of the above
  {
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(solver.num_vars());
    for (int v = 0; v < 2 * n * n; ++v) obj(v) = -1.0;
    solver.set_objective(obj);
    if (solver.optimize() != lp::LpStatus::Optimal)
      throw std::runtime_error("strategy stage D failed");
    log_stage("stage D");
  }

  Eigen::VectorXd x = solver.solution();
  StrategyAssignment out;
  out.a = Eigen::MatrixXd::Zero(n, n);
  out.g = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // flows sit on their zero bound up to roundoff; keep reports clean
      out.a(i, j) = std::max(0.0, x(cp.a(i, j)) * U);
      out.g(i, j) = std::max(0.0, x(cp.g(i, j)) * U);
    }
  }
  out.c_raw.resize(n);
  out.compute.resize(n);
  for (int i = 0; i < n; ++i) {
    out.c_raw[i] = std::clamp(x(cp.c(i)), 0.0, 1.0);
    out.compute[i] = out.c_raw[i] >= 1.0 - 1e-6;
  }
  out.xi = x(cp.xi_var) * sets.xi_scale;
  out.lp_iterations = static_cast<int>(solver.iterations());

  out.fractions.assign(n, 0.0);
  if (!sets.recipients.empty()) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double floor_i = kUnlimited;
      for (int j : sets.recipients)
        floor_i = std::min(floor_i, out.g(i, j));
      out.fractions[i] = floor_i;
      total += floor_i;
    }
    if (total > 1e-9 * U) {
      for (auto& f : out.fractions) f /= total;
    } else {
      // every reducer misses at least one recipient (partitioned topology);
      // fall back to outbound service mass
      total = 0.0;
      for (int i = 0; i < n; ++i) {
        double mass = 0.0;
        for (int j : sets.recipients) mass += out.g(i, j);
        out.fractions[i] = mass;
        total += mass;
      }
      if (total > 0)
        for (auto& f : out.fractions) f /= total;
    }
  }
  return out;
}

double allreduce_round_seconds(const CollaborationSpec& spec) {
  require_valid(spec);
  int n = spec.size();
  if (n < 2) return 0.0;
  double w = kUnlimited;
  for (int i = 0; i < n; ++i)
    w = std::min(w, std::min(spec.peers[i].download_bps,
                             spec.peers[i].upload_bps));
  for (const auto& l : spec.links) w = std::min(w, l.bps);
  return 2.0 * (double(n - 1) / n) * spec.payload_bits() / w;
}

double parameter_server_round_seconds(const CollaborationSpec& spec,
                                      int server) {
  require_valid(spec);
  int n = spec.size();
  if (server < 0 || server >= n)
    throw std::invalid_argument("parameter server index out of range");
  if (n < 2) return 0.0;
  double duplex = std::min(spec.peers[server].download_bps,
                           spec.peers[server].upload_bps);
  return (n - 1) * spec.payload_bits() / duplex;
}

double adaptive_round_seconds(const CollaborationSpec& spec) {
  SolveOptions opts;
  opts.communication_only = true;
  StrategyAssignment s = solve_strategy(spec, opts);
  if (s.xi <= 0) return kUnlimited;
  return 1.0 / s.xi;
}

}  // namespace swarmplan::strategy
