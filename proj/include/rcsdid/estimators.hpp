#pragma once

#include "rcsdid/data_model.hpp"
#include "rcsdid/regression.hpp"
#include "rcsdid/weights.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string_view>

namespace rcsdid {

enum class Method { DID, RC_SDID, SDID };

// Table column order: DiD, RC-SDiD, SDiD.
inline constexpr std::array<Method, 3> kAllMethods{Method::DID, Method::RC_SDID, Method::SDID};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

// Components left empty mean uniform unit/time weights or nu == 1.
struct WeightSet {
  std::optional<ZetaResult> zeta;
  std::optional<UnitWeights> unit;
  std::optional<TimeWeights> time;
  std::optional<NuWeights> cross_sectional;
};

struct Estimate {
  Method method = Method::DID;
  double tau_hat = 0.0;
  double mu_hat = 0.0;
  Eigen::VectorXd alpha_hat;  // NaN for zero-weight groups
  Eigen::VectorXd beta_hat;   // NaN for zero-weight periods
  int reference_group = 0;
  int reference_period = 0;
  double normal_equation_residual = 0.0;
  WeightSet weights_used;
  long n_obs = 0;
};

struct EstimateOptions {
  SolverOptions solver;
  // Run the regression over individual rows instead of the cell means.
  bool individual_level = false;
};

// Per-observation weight in cell (k,t): DiD 1; SDiD omega_k lambda_t;
// RC-SDiD omega_k lambda_t / N_{k,t}.
Eigen::MatrixXd observation_weights(Method method, const AggregatedPanel& panel,
                                    const WeightSet& weights);

WeightSet compute_weights(Method method, const AggregatedPanel& panel,
                          const SolverOptions& solver = {});

Estimate estimate_did(const RCDataset& data, const EstimateOptions& options = {});
Estimate estimate_sdid_baseline(const RCDataset& data, const EstimateOptions& options = {});
Estimate estimate_rcsdid(const RCDataset& data, const EstimateOptions& options = {});
Estimate estimate(Method method, const RCDataset& data, const EstimateOptions& options = {});

// Cell-level estimators. estimate_all solves omega and lambda once and
// shares them between SDiD and RC-SDiD; results follow kAllMethods.
Estimate estimate(Method method, const AggregatedPanel& panel, const SolverOptions& solver = {});
std::array<Estimate, 3> estimate_all(const AggregatedPanel& panel, const SolverOptions& solver = {});

}  // namespace rcsdid
