#pragma once

#include "rcsdid/dgp.hpp"
#include "rcsdid/estimators.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rcsdid {

struct MethodMetrics {
  double mean_bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  // Set when only one draw was available; sd is then reported as 0.
  bool single_draw = false;
};

// mean_bias = mean(tau_hat) - tau; sd with n - 1 denominator;
// rmse = sqrt(mean((tau_hat - tau)^2)). Throws DomainError on empty input.
MethodMetrics summarize(std::span<const double> tau_draws, double tau_true);

struct HarnessOptions {
  int threads = 0;  // 0: machine parallelism
  bool redraw_counts = false;
  // Forces every cell to hold this many observations.
  std::optional<long> fixed_count;
  SolverOptions solver;
  double max_exclusion_fraction = 0.01;
};

// Raw per-replication estimates, indexed like kAllMethods. Excluded
// replications are absent from every vector.
struct ScenarioDraws {
  std::array<std::vector<double>, 3> tau_hat;
  int excluded = 0;
  int unconverged = 0;
};

ScenarioDraws run_replications(const ScenarioConfig& cfg, int reps, std::uint64_t meta_seed,
                               const HarnessOptions& options = {});

struct MetricsRow {
  std::string scenario_label;
  std::array<MethodMetrics, 3> metrics;  // kAllMethods order
  int replications = 0;                  // successful replications
  int excluded = 0;
  int unconverged = 0;
  std::uint64_t meta_seed = 0;

  const MethodMetrics& operator[](Method m) const;
};

// Fixed parameters and counts come from meta_seed; each replication redraws
// the idiosyncratic errors. Throws HarnessError when more than
// max_exclusion_fraction of replications hit a degenerate design.
MetricsRow run_scenario(const ScenarioConfig& cfg, int reps, std::uint64_t meta_seed,
                        const HarnessOptions& options = {}, std::string label = {});

enum class TableId { Scale, Factors, Assignment, Correlation, Size, Custom };

std::string_view table_name(TableId id);
std::optional<TableId> parse_table(std::string_view name);

struct ScenarioRow {
  std::string label;
  ScenarioConfig config;
};

struct TableSpec {
  TableId id = TableId::Custom;
  std::vector<ScenarioRow> rows;
  int replications = 1000;
  int meta_replications = 1;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SizeCell {
  int base_rc;
  int k_co;
  int periods;
};

// Row builders. Every row keeps `base` except for the varied parameter; in
// the size grid the pre-period count is floor(T / 2).
std::vector<ScenarioRow> scale_rows(const ScenarioConfig& base,
                                    const std::vector<std::pair<int, int>>& s_ranges);
std::vector<ScenarioRow> factor_rows(const ScenarioConfig& base, const std::vector<int>& factors);
std::vector<ScenarioRow> assignment_rows(const ScenarioConfig& base, const std::vector<double>& ws);
std::vector<ScenarioRow> correlation_rows(const ScenarioConfig& base,
                                          const std::vector<double>& rhos);
std::vector<ScenarioRow> size_rows(const ScenarioConfig& base, const std::vector<SizeCell>& cells);

// Full grids in published row order.
TableSpec make_table(TableId id, const ScenarioConfig& base, int replications,
                     int meta_replications, std::uint64_t seed);

// Every row shares the meta seed (seed + meta index), so rows differ only in
// the varied parameter. Output is ordered by row, then meta-replication.
std::vector<MetricsRow> run_table(const TableSpec& spec, const HarnessOptions& options = {});

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
void write_metrics_markdown(std::ostream& out, std::span<const MetricsRow> rows);

}  // namespace rcsdid
