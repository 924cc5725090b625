#pragma once

#include "rcsdid/data_model.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace rcsdid {

// Interactive fixed-effects scenario. Defaults are the baseline design:
// 30 controls, one treated group, 30 periods (15 pre), tau = 0.3, one
// factor, w = 0.2, rho = 0.2, Base_RC = 100, S_k in [1, 10].
struct ScenarioConfig {
  int k_co = 30;
  int k_tr = 1;
  int periods = 30;
  int t_pre = 15;
  double tau = 0.3;
  int factors = 1;
  double w = 0.2;
  double rho = 0.2;
  int base_rc = 100;
  int s_lo = 1;
  int s_hi = 10;
  std::uint64_t seed = 42;
  // Standard deviation of the idiosyncratic error; 0 switches noise off.
  double noise_sd = 1.0;

  void validate() const;  // throws ValidationError
  PanelLayout layout() const;
};

struct GroupParams {
  Eigen::VectorXd alpha;          // K
  Eigen::MatrixXd loadings;       // K x r
  Eigen::VectorXi scale;          // K, S_k
  Eigen::VectorXd beta;           // T
  Eigen::MatrixXd factor_values;  // T x r

  // alpha_k + beta_t + Lambda_k' f_t
  double untreated_mean(int group, int period) const;
};

// Support of the uniform law for alpha_k and Lambda_k entries.
struct UniformBounds {
  double lo;
  double hi;
};
UniformBounds control_bounds();
UniformBounds treated_bounds(double w);

// Standard normal CDF.
double normal_cdf(double z);

GroupParams draw_group_params(const ScenarioConfig& cfg, std::uint64_t seed);

// Recursion N_{k,1} = S_k Base + S_k E_{k,1}, N_{k,t} = N_{k,t-1} + S_k E_{k,t},
// each value rounded half away from zero and floored at 1.
CountMatrix counts_from_increments(const Eigen::VectorXi& scale, int base_rc,
                                   const Eigen::MatrixXd& increments);

// E_{k,t} ~ Normal(0.02 Base_RC, sd = sqrt(Base_RC) / 2), one stream per cell.
Eigen::MatrixXd draw_count_increments(const ScenarioConfig& cfg, std::uint64_t seed,
                                      std::uint64_t replication);

CountMatrix simulate_counts(const GroupParams& params, const ScenarioConfig& cfg,
                            std::uint64_t seed, std::uint64_t replication = 0);

// Individual rows Y = tau W + alpha_k + beta_t + Lambda_k' f_t + eps with
// fresh eps for the given replication (replication >= 1).
RCDataset simulate_dataset(const ScenarioConfig& cfg, const GroupParams& params,
                           const CountMatrix& counts, std::uint64_t seed, std::uint64_t replication);

// Same draws as simulate_dataset, aggregated on the fly without storing rows.
// aggregate(simulate_dataset(...)) reproduces this bit for bit.
AggregatedPanel simulate_panel(const ScenarioConfig& cfg, const GroupParams& params,
                               const CountMatrix& counts, std::uint64_t seed,
                               std::uint64_t replication);

// Convenience: parameters and counts from cfg.seed, replication 1.
RCDataset simulate_dataset(const ScenarioConfig& cfg);

}  // namespace rcsdid
