#include "bwshare/cli.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "bwshare/experiments.hpp"
#include "bwshare/io.hpp"

namespace bwshare::cli {

namespace {

// Fixed 9 significant digits so golden outputs stay stable.
std::string fmt9(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

std::string join_state(const FlowState& n) {
  std::string out;
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (r) out += ";";
    out += std::to_string(n[r]);
  }
  return out;
}

Eigen::VectorXd parse_doubles(const std::string& text,
                              const std::string& what) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse '" + token + "' in " + what);
    }
  }
  if (values.empty()) throw std::invalid_argument(what + " is empty");
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

FlowState parse_state(const std::string& text, const std::string& what) {
  const Eigen::VectorXd values = parse_doubles(text, what);
  FlowState state(values.size());
  for (Eigen::Index r = 0; r < values.size(); ++r) {
    if (values[r] != std::floor(values[r]) || values[r] < 0)
      throw std::invalid_argument(what + " must hold nonnegative integers");
    state[r] = static_cast<int>(values[r]);
  }
  return state;
}

std::vector<FlowState> parse_offsets(const std::string& text) {
  std::vector<FlowState> out;
  std::stringstream in(text);
  std::string group;
  while (std::getline(in, group, ';')) {
    const Eigen::VectorXd values = parse_doubles(group, "offset");
    FlowState offset(values.size());
    for (Eigen::Index r = 0; r < values.size(); ++r)
      offset[r] = static_cast<int>(values[r]);
    out.push_back(offset);
  }
  return out;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback, bool no_header,
         const std::string& tool) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_)
        throw std::invalid_argument("cannot open output file: " + path);
      stream_ = &file_;
    } else {
      stream_ = &fallback;
    }
    if (!no_header) {
      const std::time_t now =
          std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::tm tm{};
      gmtime_r(&now, &tm);
      (*stream_) << "# bwshare " << tool << " generated "
                 << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << "\n";
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

struct CommonOptions {
  std::string out_path;
  bool no_header = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--out", opts.out_path, "Output CSV path (default stdout)");
  cmd->add_flag("--no-header", opts.no_header,
                "Suppress the timestamp comment line");
}

// Potential domain caps sized so the dense value grid stays affordable.
int default_policy_cap(Eigen::Index routes) {
  if (routes <= 2) return 512;
  if (routes == 3) return 128;
  return 64;
}

LogPotential build_potential(const CapacityRegion& region,
                             const std::string& kind, double alpha,
                             const FlowState& cap) {
  LogPotential base = LogPotential::balanced_fairness(region, cap);
  if (kind == "bf") return base;
  if (kind == "counterexample")
    return LogPotential::counterexample(std::move(base), alpha);
  throw std::invalid_argument("unknown potential kind '" + kind + "'");
}

Eigen::VectorXd resolve_rho(const CapacityRegion& region,
                            const std::string& traffic_path,
                            const std::string& rho_text) {
  if (!traffic_path.empty() && !rho_text.empty())
    throw std::invalid_argument("give either --traffic or --rho, not both");
  if (!traffic_path.empty()) {
    const TrafficSpec traffic = load_traffic(traffic_path);
    if (traffic.num_routes() != region.num_routes())
      throw std::invalid_argument("traffic route count does not match network");
    return traffic.intensities();
  }
  if (rho_text.empty())
    throw std::invalid_argument("need --traffic or --rho");
  const Eigen::VectorXd rho = parse_doubles(rho_text, "--rho");
  if (rho.size() != region.num_routes())
    throw std::invalid_argument("rho dimension does not match network");
  return rho;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Bandwidth-sharing flow-level models: fair allocation, "
               "insensitive policies, stationary laws, simulation"};
  app.require_subcommand(1);

  // pf-solve ----------------------------------------------------------------
  struct {
    std::string network, state;
    double tol = 1e-9;
    CommonOptions common;
  } pf;
  {
    auto* cmd = app.add_subcommand("pf-solve",
                                   "Proportionally fair allocation at a state");
    cmd->add_option("--network", pf.network, "Network JSON file")->required();
    cmd->add_option("--state", pf.state, "Documents per route, e.g. \"2,1\"")
        ->required();
    cmd->add_option("--tol", pf.tol, "KKT residual tolerance");
    add_common(cmd, pf.common);
  }

  // potential ---------------------------------------------------------------
  struct {
    std::string network, kind = "bf", state;
    double alpha = 2.0;
    CommonOptions common;
  } pot;
  {
    auto* cmd = app.add_subcommand(
        "potential", "Evaluate log phi(n) and the derived allocation");
    cmd->add_option("--network", pot.network, "Network JSON file")->required();
    cmd->add_option("--kind", pot.kind, "bf | counterexample")
        ->check(CLI::IsMember({"bf", "counterexample"}));
    cmd->add_option("--alpha", pot.alpha, "Counterexample multiplier (> 1)");
    cmd->add_option("--state", pot.state, "Documents per route")->required();
    add_common(cmd, pot.common);
  }

  // stationary ----------------------------------------------------------------
  struct {
    std::string network, traffic, rho, kind = "bf";
    double alpha = 2.0, tail_tol = 1e-10;
    int max_shell = 0;
    CommonOptions common;
  } stat;
  {
    auto* cmd = app.add_subcommand(
        "stationary", "Product-form stationary law over a truncated simplex");
    cmd->add_option("--network", stat.network, "Network JSON file")
        ->required();
    cmd->add_option("--traffic", stat.traffic, "Traffic JSON file");
    cmd->add_option("--rho", stat.rho, "Inline intensities, e.g. \"0.3,0.3\"");
    cmd->add_option("--kind", stat.kind, "bf | counterexample")
        ->check(CLI::IsMember({"bf", "counterexample"}));
    cmd->add_option("--alpha", stat.alpha, "Counterexample multiplier");
    cmd->add_option("--max-shell", stat.max_shell, "Truncation |n| <= M")
        ->required();
    cmd->add_option("--tail-tol", stat.tail_tol, "Largest tolerated tail");
    add_common(cmd, stat.common);
  }

  // simulate ------------------------------------------------------------------
  struct {
    std::string network, traffic, policy = "bf";
    double alpha = 2.0, end_time = 0.0, warmup = -1.0, tol = 1e-9;
    std::uint64_t seed = 0;
    long guard = 0;
    int policy_cap = 0;
    bool literal_delta = false;
    CommonOptions common;
  } sim;
  {
    auto* cmd = app.add_subcommand("simulate",
                                   "Event-driven flow-level simulation");
    cmd->add_option("--network", sim.network, "Network JSON file")->required();
    cmd->add_option("--traffic", sim.traffic, "Traffic JSON file")->required();
    cmd->add_option("--policy", sim.policy, "bf | pf | counterexample")
        ->check(CLI::IsMember({"bf", "pf", "counterexample"}));
    cmd->add_option("--alpha", sim.alpha, "Counterexample multiplier");
    cmd->add_option("--end-time", sim.end_time, "Simulated time horizon")
        ->required();
    cmd->add_option("--warmup", sim.warmup,
                    "Warmup time (default 20% of end time)");
    cmd->add_option("--seed", sim.seed, "RNG seed");
    cmd->add_option("--guard", sim.guard,
                    "State-explosion guard on |n| (default: policy cap)");
    cmd->add_option("--policy-cap", sim.policy_cap,
                    "Per-route domain cap for potential policies");
    cmd->add_option("--tol", sim.tol, "Solver tolerance for --policy pf");
    cmd->add_flag("--literal-delta", sim.literal_delta,
                  "Use the literal stage-mean factor in service rates");
    add_common(cmd, sim.common);
  }

  // verify-insensitivity -------------------------------------------------------
  struct {
    std::string network, kind = "bf";
    std::vector<std::string> traffic;
    double alpha = 2.0, end_time = 0.0, warmup = -1.0, tail_tol = 1e-10;
    std::uint64_t seed = 0;
    int replicas = 3, workers = 1, max_shell = 512;
    long guard = 0;
    CommonOptions common;
  } insens;
  {
    auto* cmd = app.add_subcommand(
        "verify-insensitivity",
        "Simulate stage-law variants of equal intensity and compare laws");
    cmd->add_option("--network", insens.network, "Network JSON file")
        ->required();
    cmd->add_option("--traffic", insens.traffic,
                    "Traffic JSON file (repeat for each variant)")
        ->required()
        ->expected(-2);
    cmd->add_option("--kind", insens.kind, "bf | counterexample")
        ->check(CLI::IsMember({"bf", "counterexample"}));
    cmd->add_option("--alpha", insens.alpha, "Counterexample multiplier");
    cmd->add_option("--end-time", insens.end_time, "Simulated time per run")
        ->required();
    cmd->add_option("--warmup", insens.warmup, "Warmup time");
    cmd->add_option("--seed", insens.seed, "Base RNG seed");
    cmd->add_option("--replicas", insens.replicas, "Replicas per variant");
    cmd->add_option("--workers", insens.workers, "Concurrent simulations");
    cmd->add_option("--max-shell", insens.max_shell,
                    "Truncation for the analytic law");
    cmd->add_option("--tail-tol", insens.tail_tol, "Largest tolerated tail");
    cmd->add_option("--guard", insens.guard, "State-explosion guard");
    add_common(cmd, insens.common);
  }

  // limit-experiment -----------------------------------------------------------
  struct {
    std::string network, policy = "bf", state, c_grid, offsets;
    double alpha = 2.0, tol = 1e-9;
    CommonOptions common;
  } limit;
  {
    auto* cmd = app.add_subcommand(
        "limit-experiment",
        "Allocation along floor(c n) against the fair point");
    cmd->add_option("--network", limit.network, "Network JSON file")
        ->required();
    cmd->add_option("--policy", limit.policy, "bf | counterexample | pf")
        ->check(CLI::IsMember({"bf", "counterexample", "pf"}));
    cmd->add_option("--alpha", limit.alpha, "Counterexample multiplier");
    cmd->add_option("--state", limit.state, "Direction n, e.g. \"1,1,1\"")
        ->required();
    cmd->add_option("--c-grid", limit.c_grid, "Scales, e.g. \"5,10,20\"")
        ->required();
    cmd->add_option("--offsets", limit.offsets,
                    "Integer offsets, e.g. \"0,0,0;1,0,0\"");
    cmd->add_option("--tol", limit.tol, "Solver tolerance for --policy pf");
    add_common(cmd, limit.common);
  }

  // ldp-experiment -------------------------------------------------------------
  struct {
    std::string network, traffic, rho, kind = "bf", state, c_grid;
    double alpha = 2.0, tail_tol = 1e-10;
    int slack = 40;
    CommonOptions common;
  } ldp;
  {
    auto* cmd = app.add_subcommand(
        "ldp-experiment",
        "Decay of log pi(floor(c n))/c against the rate function");
    cmd->add_option("--network", ldp.network, "Network JSON file")->required();
    cmd->add_option("--traffic", ldp.traffic, "Traffic JSON file");
    cmd->add_option("--rho", ldp.rho, "Inline intensities");
    cmd->add_option("--kind", ldp.kind, "bf | counterexample")
        ->check(CLI::IsMember({"bf", "counterexample"}));
    cmd->add_option("--alpha", ldp.alpha, "Counterexample multiplier");
    cmd->add_option("--state", ldp.state, "Direction n")->required();
    cmd->add_option("--c-grid", ldp.c_grid, "Scales")->required();
    cmd->add_option("--slack", ldp.slack, "Extra shells past max c |n|");
    cmd->add_option("--tail-tol", ldp.tail_tol, "Largest tolerated tail");
    add_common(cmd, ldp.common);
  }

  // counterexample -------------------------------------------------------------
  struct {
    std::string network, state;
    double alpha = 2.0;
    int k_min = 3, k_max = 8;
    CommonOptions common;
  } osc;
  {
    auto* cmd = app.add_subcommand(
        "counterexample",
        "Oscillation of the bucket-transformed policy along two subsequences");
    cmd->add_option("--network", osc.network, "Network JSON file")->required();
    cmd->add_option("--alpha", osc.alpha, "Bucket multiplier (> 1)");
    cmd->add_option("--state", osc.state, "Direction n with |n| a power of 2")
        ->required();
    cmd->add_option("--k-min", osc.k_min, "Smallest exponent");
    cmd->add_option("--k-max", osc.k_max, "Largest exponent");
    add_common(cmd, osc.common);
  }

  // bhat-check -----------------------------------------------------------------
  struct {
    std::string network, traffic, rho;
    double alpha = 2.0;
    double epsilon = -1.0;
    int max_shell = 512;
    CommonOptions common;
  } bhat;
  {
    auto* cmd = app.add_subcommand(
        "bhat-check",
        "Finiteness evidence for the transformed normalizing constant");
    cmd->add_option("--network", bhat.network, "Network JSON file")
        ->required();
    cmd->add_option("--traffic", bhat.traffic, "Traffic JSON file");
    cmd->add_option("--rho", bhat.rho, "Inline intensities");
    cmd->add_option("--alpha", bhat.alpha, "Bucket multiplier (> 1)");
    cmd->add_option("--epsilon", bhat.epsilon,
                    "Interior shift (default: half the slack)");
    cmd->add_option("--max-shell", bhat.max_shell, "Shells to sum");
    add_common(cmd, bhat.common);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // normalize usage failures to exit code 1 (--help stays 0)
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("pf-solve")) {
      const CapacityRegion region = load_network(pf.network);
      const Eigen::VectorXd n = parse_doubles(pf.state, "--state");
      const PFSolution sol = solve_pf(region, n, pf.tol);
      Output output(pf.common.out_path, out, pf.common.no_header, "pf-solve");
      output.stream() << "route_id,n,lambda\n";
      for (Eigen::Index r = 0; r < region.num_routes(); ++r)
        output.stream() << region.route_ids[r] << "," << fmt9(n[r]) << ","
                        << fmt9(sol.allocation[r]) << "\n";
      output.stream() << "# objective=" << fmt9(pf_objective(n, sol.allocation))
                      << " kkt_residual=" << fmt9(sol.kkt_residual)
                      << " iterations=" << sol.iterations << "\n";
    } else if (app.got_subcommand("potential")) {
      const CapacityRegion region = load_network(pot.network);
      const FlowState n = parse_state(pot.state, "--state");
      const LogPotential phi = build_potential(region, pot.kind, pot.alpha, n);
      Output output(pot.common.out_path, out, pot.common.no_header,
                    "potential");
      output.stream() << "log_phi";
      for (const auto& id : region.route_ids)
        output.stream() << ",lambda_" << id;
      output.stream() << "\n" << fmt9(phi.log_phi(n));
      if (population(n) > 0) {
        const AllocationVector rates = phi.allocation(n);
        for (Eigen::Index r = 0; r < rates.size(); ++r)
          output.stream() << "," << fmt9(rates[r]);
      } else {
        for (Eigen::Index r = 0; r < region.num_routes(); ++r)
          output.stream() << ",0";
      }
      output.stream() << "\n";
    } else if (app.got_subcommand("stationary")) {
      const CapacityRegion region = load_network(stat.network);
      const Eigen::VectorXd rho = resolve_rho(region, stat.traffic, stat.rho);
      const FlowState cap =
          FlowState::Constant(region.num_routes(), stat.max_shell);
      const LogPotential phi =
          build_potential(region, stat.kind, stat.alpha, cap);
      const StationaryTable table =
          stationary_pi(phi, rho, stat.max_shell, stat.tail_tol);
      Output output(stat.common.out_path, out, stat.common.no_header,
                    "stationary");
      output.stream() << "state,log_phi,pi\n";
      table.for_each([&](const FlowState& n, double mass) {
        output.stream() << join_state(n) << "," << fmt9(phi.log_phi(n)) << ","
                        << fmt9(mass) << "\n";
      });
      output.stream() << "# log_B=" << fmt9(table.log_B())
                      << " tail_bound=" << fmt9(table.tail_bound()) << "\n";
    } else if (app.got_subcommand("simulate")) {
      const CapacityRegion region = load_network(sim.network);
      const TrafficSpec traffic = load_traffic(sim.traffic);
      if (traffic.num_routes() != region.num_routes())
        throw std::invalid_argument(
            "traffic route count does not match network");
      const int cap_value = sim.policy_cap > 0
                                ? sim.policy_cap
                                : default_policy_cap(region.num_routes());
      AllocationPolicy policy;
      long guard;
      if (sim.policy == "pf") {
        policy = pf_policy(region, sim.tol);
        guard = sim.guard > 0 ? sim.guard : 2000;
      } else {
        const FlowState cap = FlowState::Constant(region.num_routes(),
                                                  cap_value);
        policy = potential_policy(
            build_potential(region, sim.policy, sim.alpha, cap));
        guard = sim.guard > 0 ? sim.guard : cap_value;
      }
      SimOptions options;
      options.end_time = sim.end_time;
      options.warmup = sim.warmup;
      options.seed = sim.seed;
      options.max_population = guard;
      options.literal_delta_rates = sim.literal_delta;
      const EmpiricalDistribution emp = simulate(policy, traffic, options);
      Output output(sim.common.out_path, out, sim.common.no_header,
                    "simulate");
      output.stream() << "state,probability\n";
      for (const auto& [state, mass] : emp.occupancy)
        output.stream() << join_state(state) << "," << fmt9(mass) << "\n";
      output.stream() << "# events=" << emp.events
                      << " observed_time=" << fmt9(emp.observed_time) << "\n";
    } else if (app.got_subcommand("verify-insensitivity")) {
      const CapacityRegion region = load_network(insens.network);
      if (insens.traffic.size() < 2)
        throw std::invalid_argument("need at least two traffic variants");
      std::vector<TrafficSpec> variants;
      for (const auto& path : insens.traffic) {
        variants.push_back(load_traffic(path));
        if (variants.back().num_routes() != region.num_routes())
          throw std::invalid_argument(
              "traffic route count does not match network: " + path);
      }
      const FlowState cap =
          FlowState::Constant(region.num_routes(), insens.max_shell);
      const LogPotential phi =
          build_potential(region, insens.kind, insens.alpha, cap);
      SimParams params;
      params.end_time = insens.end_time;
      params.warmup = insens.warmup;
      params.seed = insens.seed;
      params.replicas = insens.replicas;
      params.workers = insens.workers;
      params.max_population =
          insens.guard > 0 ? insens.guard : insens.max_shell;
      const InsensitivityReport report = insensitivity_experiment(
          phi, variants, insens.max_shell, insens.tail_tol, params);
      Output output(insens.common.out_path, out, insens.common.no_header,
                    "verify-insensitivity");
      output.stream() << "kind,a,b,value\n";
      for (std::size_t v = 0; v < report.variants.size(); ++v)
        output.stream() << "oracle_tv," << v << ",,"
                        << fmt9(report.variants[v].tv_to_oracle) << "\n";
      for (std::size_t i = 0; i < report.variants.size(); ++i)
        for (std::size_t j = i + 1; j < report.variants.size(); ++j)
          output.stream() << "pairwise_tv," << i << "," << j << ","
                          << fmt9(report.pairwise_tv(i, j)) << "\n";
      output.stream() << "# max_pairwise_tv=" << fmt9(report.max_pairwise_tv)
                      << " max_oracle_tv=" << fmt9(report.max_oracle_tv)
                      << "\n";
    } else if (app.got_subcommand("limit-experiment")) {
      const CapacityRegion region = load_network(limit.network);
      const Eigen::VectorXd n = parse_doubles(limit.state, "--state");
      std::vector<double> c_list;
      const Eigen::VectorXd cs = parse_doubles(limit.c_grid, "--c-grid");
      for (Eigen::Index i = 0; i < cs.size(); ++i) c_list.push_back(cs[i]);
      std::vector<FlowState> offsets;
      if (!limit.offsets.empty()) offsets = parse_offsets(limit.offsets);
      int extra = 1;
      for (const auto& offset : offsets)
        for (Eigen::Index r = 0; r < offset.size(); ++r)
          extra = std::max(extra, offset[r] + 1);
      AllocationPolicy policy;
      if (limit.policy == "pf") {
        policy = pf_policy(region, limit.tol);
      } else {
        double c_max = 0.0;
        for (double c : c_list) c_max = std::max(c_max, c);
        FlowState cap(region.num_routes());
        for (Eigen::Index r = 0; r < cap.size(); ++r)
          cap[r] = static_cast<int>(std::ceil(c_max * n[r])) + extra;
        policy = potential_policy(
            build_potential(region, limit.policy, limit.alpha, cap));
      }
      const ConvergenceReport report =
          limit_convergence_experiment(region, policy, n, c_list, offsets);
      Output output(limit.common.out_path, out, limit.common.no_header,
                    "limit-experiment");
      output.stream() << "c,offset,state";
      for (const auto& id : region.route_ids)
        output.stream() << ",lambda_" << id;
      output.stream() << ",l1_gap\n";
      for (const auto& row : report.rows) {
        output.stream() << fmt9(row.c) << "," << join_state(row.offset) << ","
                        << join_state(row.state);
        for (Eigen::Index r = 0; r < row.allocation.size(); ++r)
          output.stream() << "," << fmt9(row.allocation[r]);
        output.stream() << "," << fmt9(row.l1_gap) << "\n";
      }
      output.stream() << "# pf";
      for (Eigen::Index r = 0; r < report.pf_allocation.size(); ++r)
        output.stream() << " " << region.route_ids[r] << "="
                        << fmt9(report.pf_allocation[r]);
      output.stream() << "\n";
    } else if (app.got_subcommand("ldp-experiment")) {
      const CapacityRegion region = load_network(ldp.network);
      const Eigen::VectorXd rho = resolve_rho(region, ldp.traffic, ldp.rho);
      const Eigen::VectorXd n = parse_doubles(ldp.state, "--state");
      std::vector<double> c_list;
      const Eigen::VectorXd cs = parse_doubles(ldp.c_grid, "--c-grid");
      for (Eigen::Index i = 0; i < cs.size(); ++i) c_list.push_back(cs[i]);
      double c_max = 0.0;
      for (double c : c_list) c_max = std::max(c_max, c);
      const int max_shell =
          static_cast<int>(std::ceil(c_max * n.sum())) + ldp.slack;
      const FlowState cap =
          FlowState::Constant(region.num_routes(), max_shell);
      const LogPotential phi =
          build_potential(region, ldp.kind, ldp.alpha, cap);
      const LdpReport report = ldp_experiment(region, phi, rho, n, c_list,
                                              ldp.slack, ldp.tail_tol);
      Output output(ldp.common.out_path, out, ldp.common.no_header,
                    "ldp-experiment");
      output.stream() << "c,state,log_pi_over_c,neg_rate,abs_error\n";
      for (const auto& row : report.rows)
        output.stream() << fmt9(row.c) << "," << join_state(row.state) << ","
                        << fmt9(row.log_pi_over_c) << "," << fmt9(row.neg_rate)
                        << "," << fmt9(row.error) << "\n";
      output.stream() << "# rate=" << fmt9(report.rate)
                      << " log_B=" << fmt9(report.log_B)
                      << " tail_bound=" << fmt9(report.tail_bound) << "\n";
    } else if (app.got_subcommand("counterexample")) {
      const CapacityRegion region = load_network(osc.network);
      const FlowState n = parse_state(osc.state, "--state");
      if (osc.k_min < 1 || osc.k_max < osc.k_min)
        throw std::invalid_argument("need 1 <= k-min <= k-max");
      std::vector<int> k_list;
      for (int k = osc.k_min; k <= osc.k_max; ++k) k_list.push_back(k);
      FlowState cap = n * (1 << osc.k_max);
      const LogPotential base = LogPotential::balanced_fairness(region, cap);
      const OscillationReport report =
          counterexample_oscillation(region, base, osc.alpha, n, k_list);
      Output output(osc.common.out_path, out, osc.common.no_header,
                    "counterexample");
      output.stream() << "subsequence,k,state";
      for (const auto& id : region.route_ids)
        output.stream() << ",lambda_" << id;
      output.stream() << ",gap_to_pf,gap_to_pf_over_alpha\n";
      auto emit = [&](const char* label, const OscillationRow& row) {
        output.stream() << label << "," << row.k << ","
                        << join_state(row.state);
        for (Eigen::Index r = 0; r < row.allocation.size(); ++r)
          output.stream() << "," << fmt9(row.allocation[r]);
        output.stream() << "," << fmt9(row.gap_to_pf) << ","
                        << fmt9(row.gap_to_pf_over_alpha) << "\n";
      };
      for (const auto& row : report.power_rows) emit("power_of_two", row);
      for (const auto& row : report.off_power_rows) emit("off_power", row);
      output.stream() << "# final_separation="
                      << fmt9(report.final_separation)
                      << " separation_lower_bound="
                      << fmt9(report.separation_lower_bound) << "\n";
    } else if (app.got_subcommand("bhat-check")) {
      const CapacityRegion region = load_network(bhat.network);
      const Eigen::VectorXd rho = resolve_rho(region, bhat.traffic, bhat.rho);
      const FlowState cap =
          FlowState::Constant(region.num_routes(), bhat.max_shell);
      const LogPotential base = LogPotential::balanced_fairness(region, cap);
      const BhatReport report = bhat_finiteness_check(
          region, base, rho, bhat.alpha,
          bhat.epsilon > 0 ? std::optional<double>(bhat.epsilon)
                           : std::nullopt,
          bhat.max_shell);
      Output output(bhat.common.out_path, out, bhat.common.no_header,
                    "bhat-check");
      output.stream() << "kind,index,log_sum,ratio\n";
      for (std::size_t m = 0; m < report.log_shell_sums.size(); ++m)
        output.stream() << "shell," << m << ","
                        << fmt9(report.log_shell_sums[m]) << ",\n";
      for (std::size_t j = 0; j < report.bucket_log_sums.size(); ++j) {
        output.stream() << "bucket," << j << ","
                        << fmt9(report.bucket_log_sums[j]) << ",";
        if (j < report.bucket_ratios.size())
          output.stream() << fmt9(report.bucket_ratios[j]);
        output.stream() << "\n";
      }
      output.stream() << "# epsilon=" << fmt9(report.epsilon)
                      << " crossover_N=" << report.crossover
                      << " log_B_hat=" << fmt9(report.log_B_hat)
                      << " geometric_decay="
                      << (report.geometric_decay ? "yes" : "no") << "\n";
    }
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace bwshare::cli
