#include "rcsdid/harness.hpp"

#include "rcsdid/errors.hpp"
#include "rcsdid/io.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace rcsdid {

MethodMetrics summarize(std::span<const double> tau_draws, double tau_true) {
  if (tau_draws.empty()) throw DomainError("cannot summarise an empty set of draws");
  const double n = static_cast<double>(tau_draws.size());

  CompensatedSum sum;
  for (double x : tau_draws) sum.add(x);
  const double mean = sum.value() / n;

  CompensatedSum dev_sq, err_sq;
  for (double x : tau_draws) {
    dev_sq.add((x - mean) * (x - mean));
    err_sq.add((x - tau_true) * (x - tau_true));
  }

  MethodMetrics m;
  m.mean_bias = mean - tau_true;
  m.single_draw = tau_draws.size() == 1;
  m.sd = m.single_draw ? 0.0 : std::sqrt(dev_sq.value() / (n - 1.0));
  m.rmse = std::sqrt(err_sq.value() / n);

  // mean squared error = bias^2 + biased variance
  const double lhs = m.rmse * m.rmse;
  const double rhs = m.mean_bias * m.mean_bias + dev_sq.value() / n;
  if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, lhs))
    throw std::logic_error("bias/sd/rmse identity violated");
  return m;
}

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct ReplicationResult {
  std::array<double, 3> tau{};
  bool excluded = false;
  bool unconverged = false;
};

}  // namespace

ScenarioDraws run_replications(const ScenarioConfig& cfg, int reps, std::uint64_t meta_seed,
                               const HarnessOptions& options) {
  cfg.validate();
  if (reps < 1) throw ValidationError("replications must be >= 1");

  const GroupParams params = draw_group_params(cfg, meta_seed);
  const auto layout = cfg.layout();
  CountMatrix fixed_counts = options.fixed_count
                                 ? CountMatrix::Constant(layout.groups(), layout.periods(),
                                                         *options.fixed_count)
                                 : simulate_counts(params, cfg, meta_seed, 0);

  std::vector<ReplicationResult> results(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= reps) return;
      const auto replication = static_cast<std::uint64_t>(rep) + 1;
      auto& out = results[static_cast<std::size_t>(rep)];
      try {
        const CountMatrix counts = options.redraw_counts && !options.fixed_count
                                       ? simulate_counts(params, cfg, meta_seed, replication)
                                       : fixed_counts;
        const auto panel = simulate_panel(cfg, params, counts, meta_seed, replication);
        const auto estimates = estimate_all(panel, options.solver);
        for (std::size_t m = 0; m < estimates.size(); ++m) {
          out.tau[m] = estimates[m].tau_hat;
          const auto& ws = estimates[m].weights_used;
          if ((ws.unit && !ws.unit->solver_report.converged) ||
              (ws.time && !ws.time->solver_report.converged))
            out.unconverged = true;
        }
      } catch (const DegenerateDesignError&) {
        out.excluded = true;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(reps);
        return;
      }
    }
  };

  const int n_threads = std::min(resolve_threads(options.threads), reps);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ScenarioDraws draws;
  for (const auto& r : results) {
    if (r.excluded) {
      ++draws.excluded;
      continue;
    }
    if (r.unconverged) ++draws.unconverged;
    for (std::size_t m = 0; m < 3; ++m) draws.tau_hat[m].push_back(r.tau[m]);
  }
  return draws;
}

const MethodMetrics& MetricsRow::operator[](Method m) const {
  for (std::size_t i = 0; i < kAllMethods.size(); ++i)
    if (kAllMethods[i] == m) return metrics[i];
  throw std::out_of_range("unknown method");
}

MetricsRow run_scenario(const ScenarioConfig& cfg, int reps, std::uint64_t meta_seed,
                        const HarnessOptions& options, std::string label) {
  const auto draws = run_replications(cfg, reps, meta_seed, options);
  if (draws.excluded > options.max_exclusion_fraction * reps)
    throw HarnessError("scenario '" + label + "': " + std::to_string(draws.excluded) + " of " +
                       std::to_string(reps) + " replications had a degenerate design");
  MetricsRow row;
  row.scenario_label = std::move(label);
  row.replications = reps - draws.excluded;
  row.excluded = draws.excluded;
  row.unconverged = draws.unconverged;
  row.meta_seed = meta_seed;
  for (std::size_t m = 0; m < 3; ++m) row.metrics[m] = summarize(draws.tau_hat[m], cfg.tau);
  return row;
}

std::string_view table_name(TableId id) {
  switch (id) {
    case TableId::Scale: return "scale";
    case TableId::Factors: return "factors";
    case TableId::Assignment: return "assignment";
    case TableId::Correlation: return "correlation";
    case TableId::Size: return "size";
    case TableId::Custom: return "custom";
  }
  return "?";
}

std::optional<TableId> parse_table(std::string_view name) {
  for (auto id : {TableId::Scale, TableId::Factors, TableId::Assignment, TableId::Correlation,
                  TableId::Size, TableId::Custom})
    if (table_name(id) == name) return id;
  return std::nullopt;
}

void TableSpec::validate() const {
  if (rows.empty()) throw ValidationError("table has no rows");
  if (replications < 1) throw ValidationError("replications must be >= 1");
  if (meta_replications < 1) throw ValidationError("meta-replications must be >= 1");
  for (const auto& r : rows) r.config.validate();
}

std::vector<ScenarioRow> scale_rows(const ScenarioConfig& base,
                                    const std::vector<std::pair<int, int>>& s_ranges) {
  std::vector<ScenarioRow> rows;
  for (auto [lo, hi] : s_ranges) {
    ScenarioConfig c = base;
    c.s_lo = lo;
    c.s_hi = hi;
    rows.push_back({lo == hi ? "S_k=" + std::to_string(lo)
                             : "S_k in [" + std::to_string(lo) + "," + std::to_string(hi) + "]",
                    c});
  }
  return rows;
}

std::vector<ScenarioRow> factor_rows(const ScenarioConfig& base, const std::vector<int>& factors) {
  std::vector<ScenarioRow> rows;
  for (int r : factors) {
    ScenarioConfig c = base;
    c.factors = r;
    rows.push_back({"r=" + std::to_string(r), c});
  }
  return rows;
}

std::vector<ScenarioRow> assignment_rows(const ScenarioConfig& base, const std::vector<double>& ws) {
  std::vector<ScenarioRow> rows;
  for (double w : ws) {
    ScenarioConfig c = base;
    c.w = w;
    rows.push_back({"w=" + io::format_roundtrip(w), c});
  }
  return rows;
}

std::vector<ScenarioRow> correlation_rows(const ScenarioConfig& base,
                                          const std::vector<double>& rhos) {
  std::vector<ScenarioRow> rows;
  for (double rho : rhos) {
    ScenarioConfig c = base;
    c.rho = rho;
    rows.push_back({"rho=" + io::format_roundtrip(rho), c});
  }
  return rows;
}

std::vector<ScenarioRow> size_rows(const ScenarioConfig& base, const std::vector<SizeCell>& cells) {
  std::vector<ScenarioRow> rows;
  for (const auto& cell : cells) {
    ScenarioConfig c = base;
    c.base_rc = cell.base_rc;
    c.k_co = cell.k_co;
    c.periods = cell.periods;
    c.t_pre = cell.periods / 2;
    rows.push_back({"Base_RC=" + std::to_string(cell.base_rc) + " K_co=" +
                        std::to_string(cell.k_co) + " T=" + std::to_string(cell.periods),
                    c});
  }
  return rows;
}

TableSpec make_table(TableId id, const ScenarioConfig& base, int replications,
                     int meta_replications, std::uint64_t seed) {
  TableSpec spec;
  spec.id = id;
  spec.replications = replications;
  spec.meta_replications = meta_replications;
  spec.seed = seed;
  switch (id) {
    case TableId::Scale:
      spec.rows = scale_rows(base, {{1, 1}, {1, 2}, {1, 4}, {1, 6}, {1, 8}, {1, 10}, {1, 15}, {1, 20}});
      break;
    case TableId::Factors:
      spec.rows = factor_rows(base, {0, 1, 2, 3, 4});
      break;
    case TableId::Assignment:
      spec.rows = assignment_rows(base, {1.0, 0.8, 0.6, 0.4, 0.2, 0.0});
      break;
    case TableId::Correlation:
      spec.rows = correlation_rows(base, {0.0, 0.2, 0.5, 0.8, 1.0});
      break;
    case TableId::Size:
      spec.rows = size_rows(base, {{100, 30, 30}, {100, 15, 30}, {100, 30, 15}, {100, 15, 15},
                                   {50, 30, 30}, {50, 15, 30}, {50, 30, 15}, {50, 15, 15}});
      break;
    case TableId::Custom:
      spec.rows = {{"custom", base}};
      break;
  }
  return spec;
}

std::vector<MetricsRow> run_table(const TableSpec& spec, const HarnessOptions& options) {
  spec.validate();
  std::vector<MetricsRow> out;
  for (const auto& row : spec.rows)
    for (int m = 0; m < spec.meta_replications; ++m)
      out.push_back(run_scenario(row.config, spec.replications,
                                 spec.seed + static_cast<std::uint64_t>(m), options, row.label));
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "scenario_label,estimator,mean_bias,sd,rmse,reps,meta_seed\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::fixed << std::setprecision(10);
  for (const auto& row : rows)
    for (std::size_t m = 0; m < kAllMethods.size(); ++m) {
      const auto& mm = row.metrics[m];
      out << io::csv_field(row.scenario_label) << ',' << method_name(kAllMethods[m]) << ','
          << mm.mean_bias << ',' << mm.sd << ',' << mm.rmse << ',' << row.replications << ','
          << row.meta_seed << '\n';
    }
  out.flags(flags);
  out.precision(precision);
}

void write_metrics_markdown(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "| Scenario | Bias DiD | Bias RC-SDiD | Bias SDiD | SD DiD | SD RC-SDiD | SD SDiD "
         "| RMSE DiD | RMSE RC-SDiD | RMSE SDiD | reps | meta_seed |\n";
  out << "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::fixed << std::setprecision(7);
  for (const auto& row : rows) {
    out << "| " << row.scenario_label;
    for (const auto& m : row.metrics) out << " | " << m.mean_bias;
    for (const auto& m : row.metrics) out << " | " << m.sd;
    for (const auto& m : row.metrics) out << " | " << m.rmse;
    out << " | " << row.replications << " | " << row.meta_seed << " |\n";
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace rcsdid
