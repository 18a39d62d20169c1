// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
//
// Bounded-variable revised simplex. Basis handling uses a sparse LU
// factorization refreshed periodically, with product-form eta updates in
// between; constraint matrices here are extremely sparse (a handful of
// nonzeros per column), so this keeps iterations cheap at a few thousand
// rows where a dense basis inverse would not. KLU does the factoring: its
// block-triangular preordering matches how reducible simplex bases are,
// where a generic fill-reducing ordering lets the factors blow up.

#include "swarmplan/lp.hpp"

#include <klu.h>

#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "swarmplan/log.hpp"

namespace swarmplan::lp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDegenerateRunLimit = 50;
constexpr int kRefactorInterval = 32;
constexpr double kPerturb = 1e-6;

double hash_unit(std::uint64_t x) {  // deterministic value in [1, 2)
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return 1.0 + static_cast<double>(x >> 11) * 0x1.0p-53;
}
}  // namespace

LinearProgram::LinearProgram(int nvars) : num_vars(nvars) {
  objective = Eigen::VectorXd::Zero(nvars);
  lower = Eigen::VectorXd::Zero(nvars);
  upper = Eigen::VectorXd::Constant(nvars, kInf);
}

int LinearProgram::add_row(std::vector<std::pair<int, double>> coeffs,
                           Relation rel, double rhs) {
  rows.push_back(Row{std::move(coeffs), rel, rhs});
  return static_cast<int>(rows.size()) - 1;
}

double check_feasible(const LinearProgram& prog, const Eigen::VectorXd& x) {
  double worst = -kInf;
  for (const auto& row : prog.rows) {
    double lhs = 0.0, norm = 0.0;
    for (auto [v, coef] : row.coeffs) {
      lhs += coef * x(v);
      norm = std::max(norm, std::abs(coef));
    }
    if (norm == 0.0) norm = 1.0;
    double gap = (lhs - row.rhs) / norm;
    worst = std::max(worst, row.rel == Relation::Eq ? std::abs(gap) : gap);
  }
  for (int j = 0; j < prog.num_vars; ++j) {
    worst = std::max(worst, prog.lower(j) - x(j));
    worst = std::max(worst, x(j) - prog.upper(j));
  }
  return worst;
}

std::string dump(const LinearProgram& prog) {
  std::ostringstream os;
  os << "max";
  for (int j = 0; j < prog.num_vars; ++j) {
    if (prog.objective(j) != 0.0)
      os << " " << (prog.objective(j) >= 0 ? "+" : "") << prog.objective(j)
         << " x" << j;
  }
  os << "\n";
  for (std::size_t r = 0; r < prog.rows.size(); ++r) {
    os << "r" << r << ":";
    for (auto [v, coef] : prog.rows[r].coeffs)
      os << " " << (coef >= 0 ? "+" : "") << coef << " x" << v;
    os << (prog.rows[r].rel == Relation::Eq ? " = " : " <= ")
       << prog.rows[r].rhs << "\n";
  }
  for (int j = 0; j < prog.num_vars; ++j)
    os << "x" << j << " in [" << prog.lower(j) << ", " << prog.upper(j)
       << "]\n";
  return os.str();
}

struct SimplexSolver::Impl {
  enum class VState : std::uint8_t { AtLower, AtUpper, Basic, Free };

  struct Var {
    double lo = 0.0, up = kInf, obj = 0.0;
    bool slack = false;
    std::vector<std::pair<int, double>> col;  // (row, scaled coeff)
  };

  // product-form update: the pivot entry plus the rest of the transformed
  // column, kept dense because solved columns fill in heavily here and a
  // contiguous axpy/dot beats chasing index pairs at these dimensions
  struct Eta {
    int p = 0;
    double wp = 1.0;
    Eigen::VectorXd w;  // entry p zeroed
  };

  SimplexOptions opts;
  std::vector<Var> vars;
  std::vector<int> structural;  // indices of non-slack vars, creation order
  std::vector<double> b;        // scaled rhs
  std::vector<int> basis;       // var basic in each row
  std::vector<int> basis_pos;   // per var, row position or -1
  std::vector<VState> state;
  std::vector<double> xval;
  long iters_total = 0;
  long refactors = 0;
  bool factored = false;
  bool basics_stale = false;

  klu_common kcommon;
  klu_symbolic* ksym = nullptr;
  klu_numeric* knum = nullptr;
  std::vector<Eta> etas;

  void free_factor() {
    if (knum) klu_free_numeric(&knum, &kcommon);
    if (ksym) klu_free_symbolic(&ksym, &kcommon);
  }

  ~Impl() { free_factor(); }
  Impl(const Impl&) = delete;
  Impl& operator=(const Impl&) = delete;

  int m() const { return static_cast<int>(b.size()); }
  int nv() const { return static_cast<int>(vars.size()); }

  // ---- construction -------------------------------------------------------

  explicit Impl(const LinearProgram& prog, SimplexOptions o) : opts(o) {
    klu_defaults(&kcommon);
    if (prog.objective.size() != prog.num_vars ||
        prog.lower.size() != prog.num_vars ||
        prog.upper.size() != prog.num_vars)
      throw MalformedProgram("objective/bound sizes disagree with num_vars");
    vars.reserve(prog.num_vars + prog.rows.size());
    for (int j = 0; j < prog.num_vars; ++j)
      add_structural(prog.lower(j), prog.upper(j), prog.objective(j));
    for (const auto& row : prog.rows) append_row(row.coeffs, row.rel, row.rhs);
    reset_basis();
  }

  void add_structural(double lo, double up, double obj) {
    if (std::isnan(lo) || std::isnan(up) || std::isnan(obj) || lo > up)
      throw MalformedProgram("bad variable bounds or objective");
    Var v;
    v.lo = lo;
    v.up = up;
    v.obj = obj;
    vars.push_back(std::move(v));
    structural.push_back(nv() - 1);
    basis_pos.push_back(-1);
    state.push_back(initial_state(lo, up));
    xval.push_back(initial_value(lo, up));
  }

  static VState initial_state(double lo, double up) {
    if (std::isfinite(lo)) return VState::AtLower;
    if (std::isfinite(up)) return VState::AtUpper;
    return VState::Free;
  }
  static double initial_value(double lo, double up) {
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(up)) return up;
    return 0.0;
  }

  int append_row(const std::vector<std::pair<int, double>>& coeffs,
                 Relation rel, double rhs) {
    if (!std::isfinite(rhs)) throw MalformedProgram("row rhs must be finite");
    double norm = 0.0;
    for (auto [v, coef] : coeffs) {
      if (v < 0 || v >= nv() || vars[v].slack)
        throw MalformedProgram("row references unknown variable");
      if (!std::isfinite(coef)) throw MalformedProgram("row coeff not finite");
      norm = std::max(norm, std::abs(coef));
    }
    double scale = norm > 0.0 ? 1.0 / norm : 1.0;
    int r = m();
    b.push_back(rhs * scale);
    for (auto [v, coef] : coeffs) {
      if (coef == 0.0) continue;
      auto& col = vars[v].col;
      auto it = std::find_if(col.begin(), col.end(),
                             [r](const auto& e) { return e.first == r; });
      if (it == col.end())
        col.emplace_back(r, coef * scale);
      else
        it->second += coef * scale;
    }
    Var s;
    s.slack = true;
    s.lo = 0.0;
    s.up = rel == Relation::Eq ? 0.0 : kInf;
    s.col.emplace_back(r, 1.0);
    vars.push_back(std::move(s));
    basis_pos.push_back(-1);
    state.push_back(VState::AtLower);
    xval.push_back(0.0);
    return nv() - 1;
  }

  void reset_basis() {
    basis.assign(m(), -1);
    std::fill(basis_pos.begin(), basis_pos.end(), -1);
    for (int j = 0; j < nv(); ++j) {
      state[j] = vars[j].slack ? VState::AtLower
                               : initial_state(vars[j].lo, vars[j].up);
      xval[j] = vars[j].slack ? 0.0 : initial_value(vars[j].lo, vars[j].up);
    }
    int r = 0;
    for (int j = 0; j < nv(); ++j) {
      if (!vars[j].slack) continue;
      // one slack per row, in row order
      basis[r] = j;
      basis_pos[j] = r;
      state[j] = VState::Basic;
      ++r;
    }
    factored = false;
    recompute_basics();
  }

  // ---- factorization ------------------------------------------------------

  bool try_factor() {
    Eigen::SparseMatrix<double> B(m(), m());
    std::vector<Eigen::Triplet<double>> trips;
    for (int p = 0; p < m(); ++p)
      for (auto [r, coef] : vars[basis[p]].col) trips.emplace_back(r, p, coef);
    B.setFromTriplets(trips.begin(), trips.end());
    free_factor();
    int* ap = const_cast<int*>(B.outerIndexPtr());
    int* ai = const_cast<int*>(B.innerIndexPtr());
    ksym = klu_analyze(m(), ap, ai, &kcommon);
    if (ksym) knum = klu_factor(ap, ai, B.valuePtr(), ksym, &kcommon);
    return ksym && knum && kcommon.status == KLU_OK;
  }

  void refactor() {
    etas.clear();
    ++refactors;
    if (m() == 0) {
      factored = true;
      return;
    }
    if (!try_factor()) {
      // numerically singular basis: fall back to the all-slack basis and let
      // the solve rebuild from there (loses the warm start)
      log_debug("simplex: singular basis, restarting from slack basis");
      basis.clear();
      std::fill(basis_pos.begin(), basis_pos.end(), -1);
      for (int j = 0; j < nv(); ++j) {
        if (state[j] == VState::Basic) {
          state[j] = initial_state(vars[j].lo, vars[j].up);
          xval[j] = initial_value(vars[j].lo, vars[j].up);
        }
      }
      for (int j = 0; j < nv(); ++j) {
        if (!vars[j].slack) continue;
        basis.push_back(j);
        basis_pos[j] = static_cast<int>(basis.size()) - 1;
        state[j] = VState::Basic;
      }
      if (!try_factor())
        throw std::runtime_error("simplex: basis factorization failed");
    }
    factored = true;
  }

  void ftran(Eigen::VectorXd& v) {
    if (m() == 0) return;
    if (!klu_solve(ksym, knum, m(), 1, v.data(), &kcommon))
      throw std::runtime_error("simplex: forward solve failed");
    for (const auto& e : etas) {
      double a = v(e.p) / e.wp;
      if (a != 0.0) v.noalias() -= a * e.w;
      v(e.p) = a;
    }
  }

  void btran(Eigen::VectorXd& v) {
    if (m() == 0) return;
    for (auto it = etas.rbegin(); it != etas.rend(); ++it)
      v(it->p) = (v(it->p) - it->w.dot(v)) / it->wp;
    if (!klu_tsolve(ksym, knum, m(), 1, v.data(), &kcommon))
      throw std::runtime_error("simplex: transposed solve failed");
  }

  Eigen::VectorXd column_ftran(int j) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m());
    for (auto [r, coef] : vars[j].col) w(r) = coef;
    ftran(w);
    return w;
  }

  void recompute_basics() {
    if (!factored) refactor();
    if (m() == 0) return;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m());
    for (int p = 0; p < m(); ++p) rhs(p) = b[p];
    for (int j = 0; j < nv(); ++j) {
      if (state[j] == VState::Basic || xval[j] == 0.0) continue;
      for (auto [r, coef] : vars[j].col) rhs(r) -= coef * xval[j];
    }
    ftran(rhs);
    for (int p = 0; p < m(); ++p) xval[basis[p]] = rhs(p);
  }

  // ---- pivoting -----------------------------------------------------------

  void pivot(int entering, int dir, int leave_pos, double theta,
             const Eigen::VectorXd& w, bool leave_at_upper) {
    for (int p = 0; p < m(); ++p) {
      double d = dir * w(p);
      if (d != 0.0) xval[basis[p]] -= theta * d;
    }
    xval[entering] += dir * theta;
    if (leave_pos < 0) {
      // bound flip, no basis change
      state[entering] =
          state[entering] == VState::AtLower ? VState::AtUpper : VState::AtLower;
      xval[entering] = state[entering] == VState::AtUpper ? vars[entering].up
                                                          : vars[entering].lo;
      return;
    }
    int leaving = basis[leave_pos];
    state[leaving] = leave_at_upper ? VState::AtUpper : VState::AtLower;
    xval[leaving] = leave_at_upper ? vars[leaving].up : vars[leaving].lo;
    basis_pos[leaving] = -1;
    basis[leave_pos] = entering;
    basis_pos[entering] = leave_pos;
    state[entering] = VState::Basic;
    Eta e;
    e.p = leave_pos;
    e.wp = w(leave_pos);
    e.w = w;
    e.w(leave_pos) = 0.0;
    etas.push_back(std::move(e));
    if (static_cast<int>(etas.size()) >= kRefactorInterval) {
      refactor();
      recompute_basics();
    }
  }

  double max_violation() const {
    double worst = 0.0;
    for (int p = 0; p < m(); ++p) {
      int j = basis[p];
      worst = std::max(worst, vars[j].lo - xval[j]);
      worst = std::max(worst, xval[j] - vars[j].up);
    }
    return worst;
  }

  // One simplex phase. phase1 selects the composite infeasibility objective;
  // otherwise the real objective is used. Returns the terminal status of the
  // phase (Optimal means "no improving direction").
  //
  // Entering variables are priced with devex reference weights: plain
  // largest-coefficient pricing thrashes badly on these programs because
  // symmetric fleets make whole families of columns tie, and the walk then
  // spends thousands of degenerate pivots shuffling flow between equivalent
  // routes. Devex steers toward columns that actually move the solution.
  //
  // Reduced costs are maintained across pivots rather than rebuilt each
  // iteration: the update needs the pivot row, which the devex weights
  // already require, so a basis-changing pivot costs one forward solve, one
  // transposed solve and one sweep of the column file. Prices are rebuilt
  // from scratch whenever they could have gone bad: at refactorization
  // points, when the phase-1 objective changes shape, after a pivot too
  // small to divide by, under Bland's rule, and to confirm termination.
  LpStatus run_phase(bool phase1) {
    const double ftol = opts.feas_tol;
    double obj_norm = 1.0;
    if (!phase1)
      for (const auto& v : vars) obj_norm = std::max(obj_norm, std::abs(v.obj));
    const double dtol = opts.opt_tol * obj_norm;
    const double tol = phase1 ? ftol : dtol;
    int degenerate_run = 0;
    bool bland = false;
    std::vector<double> refw(nv(), 1.0);
    std::vector<double> d(nv(), 0.0);
    std::vector<signed char> cb(m(), 0);  // phase-1 basic cost signs
    bool stale = true;
    long priced_refactors = refactors;
    Eigen::VectorXd y(m()), w(m()), rho(m());
    struct Block {
      int p;
      double t, mag;
      bool at_upper;
    };
    std::vector<Block> blocks;
    blocks.reserve(m());

    auto reprice = [&]() -> bool {
      bool any = false;
      for (int p = 0; p < m(); ++p) {
        double c = 0.0;
        int j = basis[p];
        if (phase1) {
          if (xval[j] < vars[j].lo - ftol) {
            c = 1.0;
            any = true;
          } else if (xval[j] > vars[j].up + ftol) {
            c = -1.0;
            any = true;
          }
          cb[p] = static_cast<signed char>(c);
        } else {
          c = vars[j].obj;
        }
        y(p) = c;
      }
      if (phase1 && !any) return false;
      btran(y);
      for (int j = 0; j < nv(); ++j) {
        if (state[j] == VState::Basic) {
          d[j] = 0.0;
          continue;
        }
        double ya = 0.0;
        for (auto [r, coef] : vars[j].col) ya += y(r) * coef;
        d[j] = (phase1 ? 0.0 : vars[j].obj) - ya;
      }
      stale = false;
      priced_refactors = refactors;
      return true;
    };

    for (;;) {
      if (iters_total++ > opts.max_iters)
        throw std::runtime_error("simplex: iteration limit exceeded");

      if (phase1) {
        // the composite objective follows the violated set; when a basic
        // crosses one of its bounds the maintained prices are for the wrong
        // objective and must be rebuilt
        bool any = false, moved = false;
        for (int p = 0; p < m(); ++p) {
          int j = basis[p];
          signed char c = 0;
          if (xval[j] < vars[j].lo - ftol) {
            c = 1;
            any = true;
          } else if (xval[j] > vars[j].up + ftol) {
            c = -1;
            any = true;
          }
          if (c != cb[p]) moved = true;
        }
        if (!any) return LpStatus::Optimal;
        if (moved) stale = true;
      }
      if (refactors != priced_refactors) stale = true;
      bool fresh = false;
      if (bland || stale) {
        if (!reprice()) return LpStatus::Optimal;
        fresh = true;
      }

      // entering variable, from the maintained reduced costs
      // (improving directions: increase when d > 0, decrease when d < 0)
      int entering = -1, dir = 0;
      double best_score = 0.0;
      for (int j = 0; j < nv(); ++j) {
        VState st = state[j];
        if (st == VState::Basic) continue;
        if (vars[j].lo == vars[j].up) continue;
        double dj = d[j];
        int cand_dir = 0;
        if ((st == VState::AtLower || st == VState::Free) && dj > tol)
          cand_dir = 1;
        else if ((st == VState::AtUpper || st == VState::Free) && dj < -tol)
          cand_dir = -1;
        if (cand_dir == 0) continue;
        if (bland) {
          entering = j;
          dir = cand_dir;
          break;
        }
        double score = dj * dj / refw[j];
        if (score > best_score) {
          best_score = score;
          entering = j;
          dir = cand_dir;
        }
      }
      if (entering < 0) {
        if (fresh) return phase1 ? LpStatus::Infeasible : LpStatus::Optimal;
        stale = true;  // confirm termination against exact prices
        continue;
      }

      w.setZero();
      for (auto [r, coef] : vars[entering].col) w(r) = coef;
      ftran(w);

      // the maintained price may have drifted; the exact reduced cost is
      // cheap once the transformed column is in hand
      double dq = phase1 ? 0.0 : vars[entering].obj;
      for (int p = 0; p < m(); ++p) {
        double c = phase1 ? static_cast<double>(cb[p]) : vars[basis[p]].obj;
        if (c != 0.0) dq -= c * w(p);
      }
      if ((dir > 0 && dq <= tol) || (dir < 0 && dq >= -tol)) {
        d[entering] = dq;  // not actually improving; fix the entry, move on
        continue;
      }

      // ratio test, two passes: gather each blocking row's exact ratio,
      // find the tightest one, then break ties toward the lowest variable
      // index among rows whose pivot element is within a fixed factor of the
      // largest available. Pivoting on a near-zero element when a healthy
      // tied alternative exists builds nearly dependent bases whose solves
      // are garbage; under Bland's rule the magnitude filter is dropped so
      // the anti-cycling guarantee stays sound.
      double range = vars[entering].up - vars[entering].lo;
      double flip = std::isfinite(range) ? range : kInf;
      blocks.clear();
      double tmax = flip;
      for (int p = 0; p < m(); ++p) {
        double delta = dir * w(p);
        if (std::abs(delta) <= opts.pivot_tol) continue;
        int j = basis[p];
        double t = kInf;
        bool at_upper = false;
        if (phase1 && xval[j] < vars[j].lo - ftol) {
          if (delta < 0.0) {  // rising toward its violated lower bound
            t = (xval[j] - vars[j].lo) / delta;
            at_upper = false;
          }
        } else if (phase1 && xval[j] > vars[j].up + ftol) {
          if (delta > 0.0) {
            t = (xval[j] - vars[j].up) / delta;
            at_upper = true;
          }
        } else if (delta > 0.0) {
          if (std::isfinite(vars[j].lo)) {
            t = (xval[j] - vars[j].lo) / delta;
            at_upper = false;
          }
        } else {
          if (std::isfinite(vars[j].up)) {
            t = (xval[j] - vars[j].up) / delta;
            at_upper = true;
          }
        }
        if (t == kInf) continue;
        t = std::max(t, 0.0);
        blocks.push_back(Block{p, t, std::abs(delta), at_upper});
        tmax = std::min(tmax, t);
      }
      double theta = flip;
      int leave_pos = -1;
      bool leave_at_upper = false;
      double mmax = 0.0;
      for (const auto& c : blocks)
        if (c.t <= tmax + 1e-12) mmax = std::max(mmax, c.mag);
      double macc =
          bland ? 0.0 : std::max(1e-3 * mmax, std::min(mmax, 1e-7));
      for (const auto& c : blocks) {
        if (c.t > tmax + 1e-12 || c.mag < macc) continue;
        if (leave_pos < 0 || basis[c.p] < basis[leave_pos]) {
          theta = c.t;
          leave_pos = c.p;
          leave_at_upper = c.at_upper;
        }
      }

      if (theta == kInf) {
        if (phase1)
          throw std::runtime_error("simplex: unbounded phase-1 direction");
        return LpStatus::Unbounded;
      }
      bool degenerate = theta <= 1e-10;
      if (leave_pos < 0 && !std::isfinite(range))
        throw std::runtime_error("simplex: bound flip on unbounded range");

      // one sweep of the pivot row serves both updates: the devex weights of
      // the nonbasic columns absorb it, and the maintained reduced costs move
      // by the entering column's exact price times the same alpha
      if (leave_pos >= 0) {
        double alpha_q = w(leave_pos);
        if (!bland && std::abs(alpha_q) >= 1e-7) {
          int leaving = basis[leave_pos];
          double mult = dq / alpha_q;
          double ratio_q = refw[entering] / (alpha_q * alpha_q);
          rho.setZero();
          rho(leave_pos) = 1.0;
          btran(rho);
          for (int j = 0; j < nv(); ++j) {
            if (state[j] == VState::Basic || j == entering) continue;
            if (vars[j].lo == vars[j].up) continue;
            double alpha = 0.0;
            for (auto [r, coef] : vars[j].col) alpha += rho(r) * coef;
            if (alpha == 0.0) continue;
            double cand = alpha * alpha * ratio_q;
            if (cand > refw[j]) refw[j] = cand;
            d[j] -= mult * alpha;
          }
          d[leaving] = -mult;
          refw[leaving] = std::max(ratio_q, 1.0);
          refw[entering] = 1.0;
          if (ratio_q > 1e8) std::fill(refw.begin(), refw.end(), 1.0);
        } else {
          stale = true;  // pivot element too small to divide the update by
        }
        d[entering] = 0.0;
      }

      double pivmag = leave_pos >= 0 ? std::abs(w(leave_pos)) : 1.0;
      pivot(entering, dir, leave_pos, theta, w, leave_at_upper);
      if (pivmag < 1e-7 && !etas.empty()) {
        // a small pivot just entered the eta chain; flush it before the
        // amplified roundoff spreads
        refactor();
        recompute_basics();
      }
      if (degenerate) {
        if (++degenerate_run > kDegenerateRunLimit) bland = true;
      } else {
        degenerate_run = 0;
        if (bland) {
          bland = false;
          stale = true;
          std::fill(refw.begin(), refw.end(), 1.0);
        }
      }
    }
  }

  // Both phases, re-run until the recomputed point is feasible (a basis
  // repair mid-phase or tolerance drift can leave residue after phase 2).
  LpStatus solve_rounds(const char* tag) {
    for (int round = 0; round < 5; ++round) {
      LpStatus st = LpStatus::Optimal;
      long mark = iters_total;
      if (max_violation() > opts.feas_tol) st = run_phase(true);
      long p1 = iters_total - mark;
      if (st != LpStatus::Optimal) return st;
      st = run_phase(false);
      recompute_basics();
      if (log_level() >= LogLevel::Debug)
        log_debug(std::string("simplex ") + tag + " round " +
                  std::to_string(round) + ": phase1 " + std::to_string(p1) +
                  " iters, phase2 " +
                  std::to_string(iters_total - mark - p1) +
                  " iters, violation " + std::to_string(max_violation()) +
                  ", refactors " + std::to_string(refactors));
      if (st != LpStatus::Optimal) return st;
      if (max_violation() <= opts.feas_tol) return st;
    }
    throw std::runtime_error("simplex: failed to reach a feasible optimum");
  }

  // Shift every finite bound outward by a deterministic, per-variable tiny
  // amount. Symmetric fleets make the program primally degenerate in the
  // extreme (whole orbits of rows tie in every ratio test) and the walk
  // grinds through the tied vertex; the shifted program has generic bounds,
  // so ties essentially disappear. Bounds are restored afterwards and the
  // solve is finished exactly from the shifted optimum's basis.
  std::vector<double> saved_lo, saved_up;

  void perturb_bounds() {
    saved_lo.resize(nv());
    saved_up.resize(nv());
    for (int j = 0; j < nv(); ++j) {
      saved_lo[j] = vars[j].lo;
      saved_up[j] = vars[j].up;
      if (vars[j].lo == vars[j].up) continue;  // pinned by the caller
      std::uint64_t u = static_cast<std::uint64_t>(j);
      if (std::isfinite(vars[j].lo))
        vars[j].lo -= kPerturb * hash_unit(2 * u);
      if (std::isfinite(vars[j].up))
        vars[j].up += kPerturb * hash_unit(2 * u + 1);
      snap_nonbasic(j);
    }
  }

  void restore_bounds() {
    for (int j = 0; j < nv(); ++j) {
      vars[j].lo = saved_lo[j];
      vars[j].up = saved_up[j];
      snap_nonbasic(j);
    }
  }

  void snap_nonbasic(int j) {
    if (state[j] == VState::AtLower)
      xval[j] = vars[j].lo;
    else if (state[j] == VState::AtUpper)
      xval[j] = vars[j].up;
  }

  LpStatus optimize() {
    if (!factored) refactor();
    perturb_bounds();
    recompute_basics();
    basics_stale = false;
    LpStatus st = solve_rounds("perturbed");
    restore_bounds();
    recompute_basics();
    if (st != LpStatus::Optimal) return st;
    return solve_rounds("exact");
  }

  double objective_value() const {
    double v = 0.0;
    for (int j : structural) v += vars[j].obj * xval[j];
    return v;
  }
};

SimplexSolver::SimplexSolver(const LinearProgram& prog, SimplexOptions opts)
    : impl_(new Impl(prog, opts)) {}

SimplexSolver::~SimplexSolver() { delete impl_; }

LpStatus SimplexSolver::optimize() { return impl_->optimize(); }

void SimplexSolver::reset() { impl_->reset_basis(); }

void SimplexSolver::set_objective(const Eigen::VectorXd& c) {
  if (c.size() != static_cast<long>(impl_->structural.size()))
    throw MalformedProgram("objective size mismatch");
  for (std::size_t k = 0; k < impl_->structural.size(); ++k)
    impl_->vars[impl_->structural[k]].obj = c(k);
}

void SimplexSolver::set_bounds(int var, double lo, double hi) {
  if (var < 0 || var >= static_cast<int>(impl_->structural.size()))
    throw MalformedProgram("set_bounds: unknown variable");
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw MalformedProgram("set_bounds: invalid bounds");
  int j = impl_->structural[var];
  auto& v = impl_->vars[j];
  v.lo = lo;
  v.up = hi;
  if (impl_->state[j] == Impl::VState::Basic) return;
  impl_->state[j] = Impl::initial_state(lo, hi);
  double nx = Impl::initial_value(lo, hi);
  if (nx != impl_->xval[j]) {
    impl_->xval[j] = nx;
    // basic values go stale; refreshed on the next optimize() or read
    impl_->basics_stale = true;
  }
}

int SimplexSolver::add_var(double lo, double hi, double obj_coeff) {
  impl_->add_structural(lo, hi, obj_coeff);
  return static_cast<int>(impl_->structural.size()) - 1;
}

int SimplexSolver::add_row(const std::vector<std::pair<int, double>>& coeffs,
                           Relation rel, double rhs) {
  std::vector<std::pair<int, double>> mapped;
  mapped.reserve(coeffs.size());
  for (auto [v, coef] : coeffs) {
    if (v < 0 || v >= static_cast<int>(impl_->structural.size()))
      throw MalformedProgram("add_row: unknown variable");
    mapped.emplace_back(impl_->structural[v], coef);
  }
  int slack = impl_->append_row(mapped, rel, rhs);
  impl_->basis.push_back(slack);
  impl_->basis_pos[slack] = impl_->m() - 1;
  impl_->state[slack] = Impl::VState::Basic;
  // factorization refreshed lazily on the next optimize()
  impl_->factored = false;
  return impl_->m() - 1;
}

int SimplexSolver::num_vars() const {
  return static_cast<int>(impl_->structural.size());
}

double SimplexSolver::objective_value() const {
  if (impl_->basics_stale) {
    impl_->recompute_basics();
    impl_->basics_stale = false;
  }
  return impl_->objective_value();
}

Eigen::VectorXd SimplexSolver::solution() const {
  if (impl_->basics_stale) {
    impl_->recompute_basics();
    impl_->basics_stale = false;
  }
  Eigen::VectorXd x(impl_->structural.size());
  for (std::size_t k = 0; k < impl_->structural.size(); ++k)
    x(k) = impl_->xval[impl_->structural[k]];
  return x;
}

long SimplexSolver::iterations() const { return impl_->iters_total; }

LpSolution solve(const LinearProgram& prog, const SimplexOptions& opts) {
  SimplexSolver solver(prog, opts);
  LpSolution out;
  out.status = solver.optimize();
  out.x = solver.solution();
  out.iterations = solver.iterations();
  if (out.status == LpStatus::Optimal)
    out.objective = solver.objective_value();
  return out;
}

}  // namespace swarmplan::lp
