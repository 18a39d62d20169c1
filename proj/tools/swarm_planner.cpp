// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "swarmplan/groups.hpp"
#include "swarmplan/model.hpp"
#include "swarmplan/netsim.hpp"
#include "swarmplan/scenario.hpp"
#include "swarmplan/sgd.hpp"
#include "swarmplan/strategy.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace swarmplan;

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kInfeasible = 3;
constexpr int kStalled = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecParseError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double u01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

int poisson_draw(std::mt19937_64& rng, double lambda) {
  double limit = std::exp(-lambda);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= u01(rng);
  } while (p > limit);
  return k - 1;
}

int report_violations(const CollaborationSpec& spec) {
  auto violations = validate(spec);
  if (violations.empty()) return kOk;
  for (const auto& v : violations) {
    std::cerr << "invalid spec";
    if (v.peer >= 0) std::cerr << " (peer " << spec.peers[v.peer].id << ")";
    std::cerr << ": " << v.field << ": " << v.message << "\n";
  }
  return kInfeasible;
}

bool has_computing_peer(const CollaborationSpec& spec) {
  for (const auto& p : spec.peers)
    if (p.can_compute && p.samples_per_sec > 0) return true;
  return false;
}

int cmd_plan(const std::string& scenario_path, const std::string& out_path) {
  Scenario sc = load_scenario(scenario_path);
  if (int rc = report_violations(sc.collaboration); rc != kOk) return rc;
  if (!has_computing_peer(sc.collaboration)) {
    std::cerr << "no computing peers\n";
    return kInfeasible;
  }
  log_info("planning strategy for scenario " + sc.name);
  StrategyAssignment s = strategy::solve_strategy(sc.collaboration);

  std::ostringstream table;
  table << std::left << std::setw(16) << "peer" << std::setw(12) << "role"
        << "fraction\n";
  for (int i = 0; i < sc.collaboration.size(); ++i) {
    bool aggregates = s.fractions[i] > 1e-9;
    const char* role = s.compute[i] ? (aggregates ? "both" : "compute")
                                    : (aggregates ? "aggregate" : "idle");
    table << std::left << std::setw(16) << sc.collaboration.peers[i].id
          << std::setw(12) << role << std::fixed << std::setprecision(6)
          << s.fractions[i] << "\n";
    table.unsetf(std::ios::fixed);
    table << std::setprecision(6);
  }
  table << "steps_per_sec: " << num(s.xi) << "\n";
  std::cout << table.str();

  if (!out_path.empty())
    write_file(out_path, assignment_to_json(sc.collaboration, s));
  return kOk;
}

int cmd_simulate(const std::string& scenario_path, double hours,
                 unsigned long seed, bool seed_given,
                 const std::string& out_base) {
  Scenario sc = load_scenario(scenario_path);
  if (int rc = report_violations(sc.collaboration); rc != kOk) return rc;
  netsim::ChurnTrace trace =
      sc.trace.value_or(netsim::ChurnTrace{3600.0, {}});
  if (hours > 0) trace.horizon_s = hours * 3600.0;
  netsim::SimConfig cfg = sc.sim;
  if (seed_given) cfg.seed = seed;

  log_info("simulating scenario " + sc.name + " with " +
           netsim::algorithm_name(cfg.algorithm));
  netsim::SimTrace run;
  try {
    run = netsim::simulate_training(sc.collaboration, trace, cfg);
  } catch (const netsim::TrainingStalled& e) {
    std::cerr << "training stalled: " << e.what() << "\n";
    return kStalled;
  }

  std::ostringstream csv;
  csv << "step,t_complete_s,samples,active_peers,round_s,retries\n";
  for (const auto& st : run.steps)
    csv << st.step << "," << num(st.t_complete) << "," << num(st.samples)
        << "," << st.active_peers << "," << num(st.round_s) << ","
        << st.retries << "\n";

  json summary;
  summary["scenario"] = sc.name;
  summary["algorithm"] = netsim::algorithm_name(cfg.algorithm);
  summary["horizon_s"] = trace.horizon_s;
  summary["steps_total"] = run.steps.size();
  summary["steps_per_hour"] = run.steps_per_hour(0.0, trace.horizon_s);
  summary["samples_total"] = run.samples_total;
  summary["retries_total"] = run.retries_total;
  summary["lp_solves"] = run.lp_solves;
  summary["strategies"] = json::array();
  double sph_allreduce = 0.0, sph_adaptive = 0.0;
  for (const auto& cmp : netsim::compare_strategies(sc.collaboration, cfg)) {
    json row;
    row["algorithm"] = netsim::algorithm_name(cmp.algorithm);
    row["round_s"] = cmp.round_s;
    row["steps_per_hour"] = cmp.steps_per_hour;
    summary["strategies"].push_back(row);
    if (cmp.algorithm == netsim::Algorithm::AllReduce)
      sph_allreduce = cmp.steps_per_hour;
    if (cmp.algorithm == netsim::Algorithm::Adaptive)
      sph_adaptive = cmp.steps_per_hour;
  }
  summary["speedup_adaptive_over_allreduce"] =
      sph_allreduce > 0 ? sph_adaptive / sph_allreduce : 0.0;

  std::string summary_text = summary.dump(2) + "\n";
  if (!out_base.empty()) {
    write_file(out_base + ".csv", csv.str());
    write_file(out_base + ".json", summary_text);
  }
  std::cout << summary_text;
  return kOk;
}

bool parse_int_range(const std::string& text, int& lo, int& hi) {
  auto colon = text.find(':');
  if (colon == std::string::npos) return false;
  try {
    std::size_t used = 0;
    lo = std::stoi(text.substr(0, colon), &used);
    if (used != colon) return false;
    std::string rest = text.substr(colon + 1);
    hi = std::stoi(rest, &used);
    if (used != rest.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  return lo <= hi;
}

bool parse_double_range(const std::string& text, double& lo, double& hi,
                        double& step) {
  std::istringstream is(text);
  char c1 = 0, c2 = 0;
  if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':')
    return false;
  is.peek();
  return is.eof() && step > 0 && lo <= hi;
}

int cmd_groups(const std::string& n_range, const std::string& p_range,
               const std::string& out_path, const std::string& format) {
  int n_lo = 0, n_hi = 0;
  double p_lo = 0, p_hi = 0, p_step = 0;
  if (!parse_int_range(n_range, n_lo, n_hi) || n_lo < 2) {
    std::cerr << "bad --n-range (want a:b with 2 <= a <= b): " << n_range
              << "\n";
    return kInputError;
  }
  if (!parse_double_range(p_range, p_lo, p_hi, p_step) || p_lo < 0 ||
      p_hi >= 1) {
    std::cerr << "bad --p-range (want lo:hi:step with 0 <= lo <= hi < 1): "
              << p_range << "\n";
    return kInputError;
  }
  int p_count = static_cast<int>(std::floor((p_hi - p_lo) / p_step + 1e-9)) + 1;

  std::ostringstream csv;
  csv << "n,p,m_star,expected_iterations\n";
  json rows = json::array();
  for (int n = n_lo; n <= n_hi; ++n) {
    for (int k = 0; k < p_count; ++k) {
      double p = p_lo + k * p_step;
      int m_star = groups::optimal_group_size(n, p);
      double iters = groups::expected_iterations(n, m_star, p);
      csv << n << "," << num(p) << "," << m_star << "," << num(iters) << "\n";
      if (format == "json") {
        json row;
        row["n"] = n;
        row["p"] = p;
        row["m_star"] = m_star;
        row["expected_iterations"] = iters;
        rows.push_back(row);
      }
    }
  }
  std::string text = format == "json" ? rows.dump(2) + "\n" : csv.str();
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  return kOk;
}

struct SgdSettings {
  std::string mode;
  int dim = 20;
  double mu = 0.5;
  double L = 10.0;
  double sigma0_sq = 1.0;
  int steps = 500;
  int seeds = 50;
  int batch = 8;
  double extra_mean = 2.0;
  int staleness = 0;
  double lr = 0.0;
  double radius = 10.0;
  std::uint64_t seed = 1;
};

SgdSettings sgd_settings_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("invalid sgd config JSON: ") + e.what());
  }
  SgdSettings s;
  try {
    s.mode = j.at("mode").get<std::string>();
    s.dim = j.value("dim", s.dim);
    s.mu = j.value("mu", s.mu);
    s.L = j.value("L", s.L);
    s.sigma0_sq = j.value("sigma0_sq", s.sigma0_sq);
    s.steps = j.value("steps", s.steps);
    s.seeds = j.value("seeds", s.seeds);
    s.batch = j.value("batch", s.batch);
    s.extra_mean = j.value("extra_mean", s.extra_mean);
    s.staleness = j.value("staleness", s.staleness);
    s.lr = j.value("lr", s.lr);
    s.radius = j.value("radius", s.radius);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("bad sgd config: ") + e.what());
  }
  if (s.mode != "equivalence" && s.mode != "bound" && s.mode != "descent")
    throw SpecParseError("sgd mode must be equivalence, bound or descent");
  return s;
}

int cmd_sgd(const std::string& config_path, unsigned long seed,
            bool seed_given, const std::string& out_path) {
  SgdSettings s = sgd_settings_from_json(read_file(config_path));
  if (seed_given) s.seed = seed;
  sgd::QuadraticProblem problem =
      sgd::make_problem(s.dim, s.mu, s.L, s.sigma0_sq, s.seed);
  Eigen::VectorXd x0 =
      problem.x_star.array() + s.radius / std::sqrt(double(s.dim));
  const double f0 = problem.f(x0);

  std::ostringstream csv;
  std::ostringstream report;

  if (s.mode == "descent") {
    sgd::SgdConfig cfg;
    cfg.steps = s.steps;
    cfg.lr = s.lr;
    cfg.staleness = s.staleness;
    cfg.seed = s.seed;
    sgd::SgdRun run =
        sgd::run_sgd(problem, x0, [&s](int) { return s.batch; }, cfg);
    csv << "step,loss\n";
    bool monotone = true;
    double prev = f0;
    for (std::size_t k = 0; k < run.suboptimality.size(); ++k) {
      double fx = run.suboptimality[k];
      if (fx > prev + 1e-12) monotone = false;
      prev = fx;
      csv << (k + 1) << "," << num(fx) << "\n";
    }
    report << "final_loss: "
           << num(run.suboptimality.empty() ? f0 : run.suboptimality.back())
           << "\n";
    report << "monotone: " << (monotone ? "true" : "false") << "\n";
    report << "diverged: " << (run.diverged ? "true" : "false") << "\n";
  } else if (s.mode == "equivalence") {
    std::vector<double> fixed_mean(s.steps, 0.0), varying_mean(s.steps, 0.0);
    double gap_acc = 0.0;
    long gap_n = 0;
    for (int sd = 0; sd < s.seeds; ++sd) {
      sgd::SgdConfig cfg;
      cfg.steps = s.steps;
      cfg.lr = s.lr;
      cfg.staleness = s.staleness;
      cfg.seed = s.seed + static_cast<std::uint64_t>(sd);
      std::mt19937_64 rng(mix64(cfg.seed, 0xba7c4));
      std::vector<int> mks(s.steps);
      for (int k = 0; k < s.steps; ++k)
        mks[k] = s.batch + poisson_draw(rng, s.extra_mean);
      sgd::SgdRun fixed =
          sgd::run_sgd(problem, x0, [&s](int) { return s.batch; }, cfg);
      sgd::SgdRun varying =
          sgd::run_sgd(problem, x0, [&mks](int k) { return mks[k]; }, cfg);
      std::size_t steps =
          std::min(fixed.suboptimality.size(), varying.suboptimality.size());
      for (std::size_t k = 0; k < steps; ++k) {
        fixed_mean[k] += fixed.suboptimality[k];
        varying_mean[k] += varying.suboptimality[k];
        gap_acc += std::abs(fixed.suboptimality[k] - varying.suboptimality[k]);
        ++gap_n;
      }
    }
    csv << "step,fixed_loss_mean,varying_loss_mean\n";
    for (int k = 0; k < s.steps; ++k)
      csv << (k + 1) << "," << num(fixed_mean[k] / s.seeds) << ","
          << num(varying_mean[k] / s.seeds) << "\n";
    double gap_fraction = gap_n > 0 ? (gap_acc / gap_n) / f0 : 0.0;
    report << "gap_fraction: " << num(gap_fraction) << "\n";
    report << "gap_within_5pct: " << (gap_fraction <= 0.05 ? "true" : "false")
           << "\n";
  } else {  // bound
    std::vector<double> mean(s.steps, 0.0);
    for (int sd = 0; sd < s.seeds; ++sd) {
      sgd::SgdConfig cfg;
      cfg.steps = s.steps;
      cfg.lr = s.lr;
      cfg.staleness = s.staleness;
      cfg.seed = s.seed + static_cast<std::uint64_t>(sd);
      sgd::SgdRun run =
          sgd::run_sgd(problem, x0, [&s](int) { return s.batch; }, cfg);
      for (int k = 0; k < s.steps; ++k) mean[k] += run.suboptimality[k];
    }
    csv << "step,mean_loss\n";
    for (int k = 0; k < s.steps; ++k)
      csv << (k + 1) << "," << num(mean[k] / s.seeds) << "\n";
    sgd::BoundCheck bc =
        sgd::check_bound(problem, x0, s.steps, s.batch, s.seeds, s.seed);
    report << "bound holds: " << (bc.holds ? "true" : "false") << "\n";
    report << "lhs: " << num(bc.lhs) << "\n";
    report << "rhs: " << num(bc.rhs) << "\n";
  }

  if (!out_path.empty()) write_file(out_path, csv.str());
  std::cout << report.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive collaboration planner and simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, n_range, p_range, sgd_config;
  std::string format = "csv";
  double hours = 0.0;
  unsigned long seed = 1;

  CLI::App* plan = app.add_subcommand(
      "plan", "solve the communication strategy for a scenario");
  plan->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  plan->add_option("--out", out_path, "write the assignment JSON here");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "run the churn simulator over a scenario");
  simulate->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  simulate->add_option("--hours", hours, "override the trace horizon");
  CLI::Option* sim_seed = simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--out", out_path,
                       "base path; writes <base>.csv and <base>.json");

  CLI::App* groups_cmd = app.add_subcommand(
      "groups", "tabulate optimal group sizes over (n, p) grids");
  groups_cmd->add_option("--n-range", n_range, "collaboration sizes a:b")
      ->required();
  groups_cmd->add_option("--p-range", p_range, "failure rates lo:hi:step")
      ->required();
  groups_cmd->add_option("--out", out_path, "write the grid here");
  groups_cmd->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* sgd_cmd = app.add_subcommand(
      "sgd", "batch-size equivalence and convergence-bound experiments");
  sgd_cmd->add_option("--config", sgd_config, "experiment config JSON")
      ->required();
  CLI::Option* sgd_seed = sgd_cmd->add_option("--seed", seed, "RNG seed");
  sgd_cmd->add_option("--out", out_path, "write the loss-curve CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (plan->parsed()) return cmd_plan(scenario_path, out_path);
    if (simulate->parsed())
      return cmd_simulate(scenario_path, hours, seed, sim_seed->count() > 0,
                          out_path);
    if (groups_cmd->parsed())
      return cmd_groups(n_range, p_range, out_path, format);
    if (sgd_cmd->parsed())
      return cmd_sgd(sgd_config, seed, sgd_seed->count() > 0, out_path);
  } catch (const SpecParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const netsim::TrainingStalled& e) {
    std::cerr << "training stalled: " << e.what() << "\n";
    return kStalled;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  }
  return kOk;
}
