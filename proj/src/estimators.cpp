#include "rcsdid/estimators.hpp"

#include "rcsdid/errors.hpp"

namespace rcsdid {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::DID: return "DiD";
    case Method::RC_SDID: return "RC-SDiD";
    case Method::SDID: return "SDiD";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "did" || name == "DiD") return Method::DID;
  if (name == "sdid" || name == "SDiD") return Method::SDID;
  if (name == "rcsdid" || name == "RC-SDiD") return Method::RC_SDID;
  return std::nullopt;
}

WeightSet compute_weights(Method method, const AggregatedPanel& panel, const SolverOptions& solver) {
  WeightSet ws;
  if (method == Method::DID) return ws;
  ws.zeta = compute_zeta(panel);
  ws.unit = solve_unit_weights(panel, ws.zeta->zeta, solver);
  ws.time = solve_time_weights(panel, solver);
  if (method == Method::RC_SDID) ws.cross_sectional = cross_sectional_weights(panel);
  return ws;
}

Eigen::MatrixXd observation_weights(Method method, const AggregatedPanel& panel,
                                    const WeightSet& weights) {
  const auto& L = panel.layout();
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(L.groups(), L.periods());
  if (method == Method::DID) return w;
  if (!weights.unit || !weights.time)
    throw DomainError(std::string(method_name(method)) + " needs unit and time weights");
  const Eigen::VectorXd omega = full_unit_weights(L, *weights.unit);
  const Eigen::VectorXd lambda = full_time_weights(L, *weights.time);
  w = omega * lambda.transpose();
  if (method == Method::RC_SDID) {
    if (!weights.cross_sectional) throw DomainError("RC-SDiD needs cross-sectional weights");
    w = w.cwiseProduct(weights.cross_sectional->nu);
  }
  return w;
}

namespace {

Estimate package(Method method, const TwfeFit& fit, WeightSet weights, long n_obs) {
  Estimate e;
  e.method = method;
  e.tau_hat = fit.tau;
  e.mu_hat = fit.mu;
  e.alpha_hat = fit.alpha;
  e.beta_hat = fit.beta;
  e.reference_group = fit.reference_group;
  e.reference_period = fit.reference_period;
  e.normal_equation_residual = fit.normal_equation_residual;
  e.weights_used = std::move(weights);
  e.n_obs = n_obs;
  return e;
}

Estimate estimate_with(Method method, const AggregatedPanel& panel, WeightSet weights) {
  const Eigen::MatrixXd per_obs = observation_weights(method, panel, weights);
  const Eigen::MatrixXd cell = per_obs.cwiseProduct(panel.counts().cast<double>());
  return package(method, weighted_twfe_regression(panel, cell), std::move(weights),
                 panel.total_count());
}

}  // namespace

Estimate estimate(Method method, const AggregatedPanel& panel, const SolverOptions& solver) {
  return estimate_with(method, panel, compute_weights(method, panel, solver));
}

std::array<Estimate, 3> estimate_all(const AggregatedPanel& panel, const SolverOptions& solver) {
  WeightSet rc = compute_weights(Method::RC_SDID, panel, solver);
  WeightSet sdid = rc;
  sdid.cross_sectional.reset();
  return {estimate_with(Method::DID, panel, WeightSet{}),
          estimate_with(Method::RC_SDID, panel, std::move(rc)),
          estimate_with(Method::SDID, panel, std::move(sdid))};
}

Estimate estimate(Method method, const RCDataset& data, const EstimateOptions& options) {
  const AggregatedPanel panel = aggregate(data);
  if (!options.individual_level) return estimate(method, panel, options.solver);

  WeightSet weights = compute_weights(method, panel, options.solver);
  const Eigen::MatrixXd per_obs = observation_weights(method, panel, weights);
  TwfeAccumulator acc(data.layout());
  for (const auto& r : data.rows()) acc.add(r.group, r.period, r.outcome, per_obs(r.group, r.period));
  return package(method, acc.solve(), std::move(weights), static_cast<long>(data.size()));
}

Estimate estimate_did(const RCDataset& data, const EstimateOptions& options) {
  return estimate(Method::DID, data, options);
}

Estimate estimate_sdid_baseline(const RCDataset& data, const EstimateOptions& options) {
  return estimate(Method::SDID, data, options);
}

Estimate estimate_rcsdid(const RCDataset& data, const EstimateOptions& options) {
  return estimate(Method::RC_SDID, data, options);
}

}  // namespace rcsdid
