#include "cli.hpp"

#include "rcsdid/config.hpp"
#include "rcsdid/data_model.hpp"
#include "rcsdid/errors.hpp"
#include "rcsdid/estimators.hpp"
#include "rcsdid/harness.hpp"
#include "rcsdid/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rcsdid::cli {

namespace {

struct DataArgs {
  std::string input;
  std::optional<int> k_co;
  std::optional<int> t_pre;
  std::string treated_col;
  std::string group_col = "group";
  std::string time_col = "time";
  std::string outcome_col = "outcome";
  double tol = SolverOptions{}.tol;
  int max_iter = SolverOptions{}.max_iter;
  bool allow_unconverged = false;
  std::string out;
  std::string format = "csv";
};

void add_data_options(CLI::App& cmd, DataArgs& a) {
  cmd.add_option("--input", a.input, "Long-format CSV with group, time and outcome columns")
      ->required();
  auto* kco = cmd.add_option("--kco", a.k_co,
                             "Number of control groups; groups sorted by label, the rest are treated");
  cmd.add_option("--tpre", a.t_pre, "Number of pre-treatment periods (periods sorted by label)");
  auto* tcol = cmd.add_option("--treated-col", a.treated_col,
                              "0/1 column marking treated groups (alternative to --kco)");
  tcol->excludes(kco);
  kco->excludes(tcol);
  cmd.add_option("--group-col", a.group_col, "Group column name")->capture_default_str();
  cmd.add_option("--time-col", a.time_col, "Time column name")->capture_default_str();
  cmd.add_option("--outcome-col", a.outcome_col, "Outcome column name")->capture_default_str();
  cmd.add_option("--tol", a.tol, "Frank-Wolfe duality-gap tolerance")->capture_default_str();
  cmd.add_option("--max-iter", a.max_iter, "Frank-Wolfe iteration cap")->capture_default_str();
  cmd.add_flag("--allow-unconverged", a.allow_unconverged,
               "Report weights even if the solver hits its iteration cap");
  cmd.add_option("--out", a.out, "Write results to this file instead of standard output");
}

RCDataset load_dataset(const DataArgs& a) {
  CsvSchema schema;
  schema.group = a.group_col;
  schema.time = a.time_col;
  schema.outcome = a.outcome_col;
  LayoutHints hints{a.k_co, a.t_pre};
  if (!a.treated_col.empty()) schema.treated = a.treated_col;
  if ((!hints.k_co && !schema.treated) || !hints.t_pre) {
    if (auto side = read_layout_sidecar(a.input)) {
      if (!hints.k_co && !schema.treated) hints.k_co = side->k_co;
      if (!hints.t_pre) hints.t_pre = side->t_pre;
    }
  }
  return load_long_csv(a.input, schema, hints);
}

void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) {
    writer(out);
  } else {
    io::write_atomically(path, writer);
  }
}

void require_converged(const SolverReport& report, const char* what, bool allowed, std::ostream& err) {
  if (report.converged) return;
  std::ostringstream msg;
  msg << what << " solver stopped after " << report.iterations
      << " iterations with duality gap " << report.gradient_gap;
  if (!allowed) throw SolverError(msg.str() + " (pass --allow-unconverged to accept)");
  err << "warning: " << msg.str() << '\n';
}

std::string fmt(double v) { return io::format_roundtrip(v); }

// ---------------------------------------------------------------------------

int run_estimate(const DataArgs& a, const std::string& method_arg, bool individual,
                 std::ostream& out, std::ostream& err) {
  std::vector<Method> methods;
  if (method_arg == "all") {
    methods.assign(kAllMethods.begin(), kAllMethods.end());
  } else {
    methods.push_back(*parse_method(method_arg));
  }
  const RCDataset data = load_dataset(a);
  EstimateOptions opts;
  opts.solver.tol = a.tol;
  opts.solver.max_iter = a.max_iter;
  opts.individual_level = individual;

  std::vector<Estimate> estimates;
  for (Method m : methods) {
    estimates.push_back(estimate(m, data, opts));
    const auto& ws = estimates.back().weights_used;
    if (ws.unit) require_converged(ws.unit->solver_report, "unit-weight", a.allow_unconverged, err);
    if (ws.time) require_converged(ws.time->solver_report, "time-weight", a.allow_unconverged, err);
  }

  const std::vector<std::string> header = {
      "method",          "tau_hat",    "mu_hat",         "n_obs",         "zeta",
      "sigma_hat",       "unit_iterations", "unit_gap",  "unit_converged", "time_iterations",
      "time_gap",        "time_converged",  "normal_equation_residual"};
  std::vector<std::vector<std::string>> table;
  for (const auto& e : estimates) {
    const auto& ws = e.weights_used;
    std::vector<std::string> row{std::string(method_name(e.method)), fmt(e.tau_hat), fmt(e.mu_hat),
                                 std::to_string(e.n_obs)};
    row.push_back(ws.zeta ? fmt(ws.zeta->zeta) : "");
    row.push_back(ws.zeta ? fmt(ws.zeta->sigma_hat) : "");
    row.push_back(ws.unit ? std::to_string(ws.unit->solver_report.iterations) : "");
    row.push_back(ws.unit ? fmt(ws.unit->solver_report.gradient_gap) : "");
    row.push_back(ws.unit ? (ws.unit->solver_report.converged ? "1" : "0") : "");
    row.push_back(ws.time ? std::to_string(ws.time->solver_report.iterations) : "");
    row.push_back(ws.time ? fmt(ws.time->solver_report.gradient_gap) : "");
    row.push_back(ws.time ? (ws.time->solver_report.converged ? "1" : "0") : "");
    row.push_back(fmt(e.normal_equation_residual));
    table.push_back(std::move(row));
  }

  emit(a.out, out, [&](std::ostream& os) {
    if (a.format == "csv") {
      for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
      os << '\n';
      for (const auto& row : table) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << io::csv_field(row[i]);
        os << '\n';
      }
    } else {
      os << std::left << std::setw(9) << "method" << std::right << std::setw(14) << "tau_hat"
         << std::setw(10) << "n_obs" << std::setw(12) << "zeta" << '\n';
      for (const auto& e : estimates) {
        os << std::left << std::setw(9) << method_name(e.method) << std::right << std::fixed
           << std::setprecision(7) << std::setw(14) << e.tau_hat << std::setw(10) << e.n_obs
           << std::setw(12);
        if (e.weights_used.zeta)
          os << e.weights_used.zeta->zeta;
        else
          os << "-";
        os << '\n';
      }
    }
  });
  return kOk;
}

int run_weights(const DataArgs& a, std::ostream& out, std::ostream& err) {
  const RCDataset data = load_dataset(a);
  const AggregatedPanel panel = aggregate(data);
  SolverOptions solver;
  solver.tol = a.tol;
  solver.max_iter = a.max_iter;
  const WeightSet ws = compute_weights(Method::RC_SDID, panel, solver);
  require_converged(ws.unit->solver_report, "unit-weight", a.allow_unconverged, err);
  require_converged(ws.time->solver_report, "time-weight", a.allow_unconverged, err);

  const auto& L = panel.layout();
  const auto& gl = data.group_labels();
  const auto& tl = data.period_labels();
  struct Entry {
    std::string block, group, time, value;
  };
  std::vector<Entry> entries;
  auto scalar = [&](const std::string& name, const std::string& v) { entries.push_back({name, "", "", v}); };
  scalar("zeta", fmt(ws.zeta->zeta));
  scalar("sigma_hat", fmt(ws.zeta->sigma_hat));
  scalar("delta_bar", fmt(ws.zeta->delta_bar));
  scalar("omega0", fmt(ws.unit->omega0));
  for (int k = 0; k < L.k_co(); ++k) entries.push_back({"omega", gl[k], "", fmt(ws.unit->omega[k])});
  scalar("lambda0", fmt(ws.time->lambda0));
  for (int t = 0; t < L.t_pre(); ++t) entries.push_back({"lambda", "", tl[t], fmt(ws.time->lambda[t])});
  for (int k = 0; k < L.groups(); ++k)
    for (int t = 0; t < L.periods(); ++t)
      entries.push_back({"nu", gl[k], tl[t], fmt(ws.cross_sectional->nu(k, t))});
  for (auto [prefix, rep] : {std::pair{"unit", &ws.unit->solver_report}, std::pair{"time", &ws.time->solver_report}}) {
    const std::string p = prefix;
    scalar(p + "_iterations", std::to_string(rep->iterations));
    scalar(p + "_objective", fmt(rep->final_objective));
    scalar(p + "_gap", fmt(rep->gradient_gap));
    scalar(p + "_converged", rep->converged ? "1" : "0");
  }

  emit(a.out, out, [&](std::ostream& os) {
    if (a.format == "csv") {
      os << "block,group,time,value\n";
      for (const auto& e : entries)
        os << e.block << ',' << io::csv_field(e.group) << ',' << io::csv_field(e.time) << ','
           << e.value << '\n';
    } else {
      for (const auto& e : entries) {
        os << std::left << std::setw(16) << e.block << std::setw(12) << e.group << std::setw(12)
           << e.time << e.value << '\n';
      }
    }
  });
  return kOk;
}

struct SimulateArgs {
  std::string table;
  int reps = 1000;
  int meta_reps = 1;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string format = "csv";
  std::optional<int> threads;
  bool redraw_counts = false;
  std::string emit_data;
  double tol = SolverOptions{}.tol;
  int max_iter = SolverOptions{}.max_iter;
  // Scenario overrides
  std::optional<int> k_co, k_tr, periods, t_pre, factors, base_rc, s_lo, s_hi;
  std::optional<double> tau, w, rho, noise_sd;
};

int resolve_threads(const std::optional<int>& flag) {
  if (flag) {
    if (*flag < 1) throw ValidationError("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("RCSDID_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(env, &used);
      if (used == std::string(env).size() && n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("RCSDID_THREADS must be a positive integer, found '") + env + "'");
  }
  return 0;
}

int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg;
  if (!a.config.empty()) cfg = load_scenario_config(a.config, cfg);
  if (a.seed) cfg.seed = *a.seed;
  if (a.k_co) cfg.k_co = *a.k_co;
  if (a.k_tr) cfg.k_tr = *a.k_tr;
  if (a.periods) cfg.periods = *a.periods;
  if (a.t_pre) cfg.t_pre = *a.t_pre;
  if (a.factors) cfg.factors = *a.factors;
  if (a.base_rc) cfg.base_rc = *a.base_rc;
  if (a.s_lo) cfg.s_lo = *a.s_lo;
  if (a.s_hi) cfg.s_hi = *a.s_hi;
  if (a.tau) cfg.tau = *a.tau;
  if (a.w) cfg.w = *a.w;
  if (a.rho) cfg.rho = *a.rho;
  if (a.noise_sd) cfg.noise_sd = *a.noise_sd;
  cfg.validate();

  HarnessOptions options;
  options.threads = resolve_threads(a.threads);
  options.redraw_counts = a.redraw_counts;
  options.solver.tol = a.tol;
  options.solver.max_iter = a.max_iter;

  if (a.table.empty() && a.emit_data.empty())
    throw ValidationError("simulate needs --table and/or --emit-data");

  if (!a.emit_data.empty()) {
    const RCDataset data = simulate_dataset(cfg);
    write_long_csv(a.emit_data, data);
    write_layout_sidecar(a.emit_data, data.layout());
    err << "wrote " << data.size() << " rows to " << a.emit_data << '\n';
  }
  if (a.table.empty()) return kOk;

  const TableSpec spec = make_table(*parse_table(a.table), cfg, a.reps, a.meta_reps, cfg.seed);
  const auto rows = run_table(spec, options);
  for (const auto& row : rows) {
    if (row.excluded > 0)
      err << "note: " << row.scenario_label << " (meta seed " << row.meta_seed << "): excluded "
          << row.excluded << " degenerate replications\n";
    if (row.unconverged > 0)
      err << "note: " << row.scenario_label << " (meta seed " << row.meta_seed << "): "
          << row.unconverged << " replications hit the solver iteration cap\n";
  }
  emit(a.out, out, [&](std::ostream& os) {
    if (a.format == "md")
      write_metrics_markdown(os, rows);
    else
      write_metrics_csv(os, rows);
  });
  return kOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic difference-in-differences for repeated cross-sections", "rcsdid"};
  app.require_subcommand(1);

  DataArgs est_args;
  std::string method = "all";
  bool individual = false;
  auto* est = app.add_subcommand("estimate", "Estimate tau with DiD, SDiD and/or RC-SDiD");
  add_data_options(*est, est_args);
  est->add_option("--method", method, "Estimator")
      ->check(CLI::IsMember({"did", "sdid", "rcsdid", "all"}))
      ->capture_default_str();
  est->add_flag("--individual", individual,
                "Solve the regression over individual rows instead of cell means");
  est->add_option("--format", est_args.format, "Output format")
      ->check(CLI::IsMember({"csv", "table"}))
      ->capture_default_str();

  DataArgs w_args;
  auto* wcmd = app.add_subcommand("weights", "Compute unit, time and cross-sectional weights");
  add_data_options(*wcmd, w_args);
  wcmd->add_option("--format", w_args.format, "Output format")
      ->check(CLI::IsMember({"csv", "table"}))
      ->capture_default_str();

  SimulateArgs s;
  auto* sim = app.add_subcommand("simulate", "Run Monte Carlo tables or emit a simulated dataset");
  sim->add_option("--table", s.table, "Scenario grid")
      ->check(CLI::IsMember({"scale", "factors", "assignment", "correlation", "size", "custom"}));
  sim->add_option("--reps", s.reps, "Replications per scenario row")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--meta-reps", s.meta_reps, "Redraws of the fixed parameters (seed, seed+1, ...)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--seed", s.seed, "Base seed (default 42 or the config's seed)");
  sim->add_option("--config", s.config, "Scenario file (JSON or key=value); flags override it")
      ->check(CLI::ExistingFile);
  sim->add_option("--out", s.out, "Write results to this file instead of standard output");
  sim->add_option("--format", s.format, "Output format")
      ->check(CLI::IsMember({"csv", "md"}))
      ->capture_default_str();
  sim->add_option("--threads", s.threads,
                  "Worker threads (default: RCSDID_THREADS or machine parallelism)");
  sim->add_flag("--redraw-counts", s.redraw_counts, "Redraw cell counts in every replication");
  sim->add_option("--emit-data", s.emit_data,
                  "Write one simulated dataset (long CSV + .layout.json sidecar) to this path");
  sim->add_option("--tol", s.tol, "Frank-Wolfe duality-gap tolerance")->capture_default_str();
  sim->add_option("--max-iter", s.max_iter, "Frank-Wolfe iteration cap")->capture_default_str();
  sim->add_option("--kco", s.k_co, "Control groups (default 30)");
  sim->add_option("--ktr", s.k_tr, "Treated groups (default 1)");
  sim->add_option("--periods", s.periods, "Total periods T (default 30)");
  sim->add_option("--tpre", s.t_pre, "Pre-treatment periods (default 15)");
  sim->add_option("--tau", s.tau, "True treatment effect (default 0.3)");
  sim->add_option("--factors", s.factors, "Number of latent factors r (default 1)");
  sim->add_option("--w", s.w, "Treated/control overlap shift in [0,1] (default 0.2)");
  sim->add_option("--rho", s.rho, "Correlation between S_k and alpha_k in [0,1] (default 0.2)");
  sim->add_option("--base-rc", s.base_rc, "Baseline observations per cell (default 100)");
  sim->add_option("--s-lo", s.s_lo, "Lower bound of the scale parameter S_k (default 1)");
  sim->add_option("--s-hi", s.s_hi, "Upper bound of the scale parameter S_k (default 10)");
  sim->add_option("--noise-sd", s.noise_sd, "Idiosyncratic error standard deviation (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidationFailure;
  }

  try {
    if (est->parsed()) return run_estimate(est_args, method, individual, out, err);
    if (wcmd->parsed()) return run_weights(w_args, out, err);
    return run_simulate(s, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const DegenerateDesignError& e) {
    err << "error: degenerate design: " << e.what() << '\n';
    return kEstimationFailure;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kEstimationFailure;
  } catch (const HarnessError& e) {
    err << "error: " << e.what() << '\n';
    return kEstimationFailure;
  }
}

}  // namespace rcsdid::cli
