#include "rcsdid/dgp.hpp"

#include "rcsdid/errors.hpp"
#include "rcsdid/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace rcsdid {

namespace {
const double kSqrt3 = std::sqrt(3.0);
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("scenario: " + msg); };
  if (k_co < 1) fail("k_co must be >= 1");
  if (k_tr < 1) fail("k_tr must be >= 1");
  if (t_pre < 1) fail("t_pre must be >= 1");
  if (periods <= t_pre) fail("periods must exceed t_pre");
  if (factors < 0) fail("factor count must be >= 0");
  if (!(w >= 0.0 && w <= 1.0)) fail("w must lie in [0, 1]");
  if (!(rho >= 0.0 && rho <= 1.0)) fail("rho must lie in [0, 1]");
  if (base_rc < 1) fail("base_rc must be >= 1");
  if (s_lo < 1) fail("s_lo must be >= 1");
  if (s_hi < s_lo) fail("s_hi must be >= s_lo");
  if (!std::isfinite(tau)) fail("tau must be finite");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) fail("noise_sd must be finite and >= 0");
}

PanelLayout ScenarioConfig::layout() const { return PanelLayout(k_co, k_tr, t_pre, periods - t_pre); }

double GroupParams::untreated_mean(int group, int period) const {
  return alpha[group] + beta[period] + loadings.row(group).dot(factor_values.row(period));
}

UniformBounds control_bounds() { return {-kSqrt3, kSqrt3}; }

UniformBounds treated_bounds(double w) {
  return {kSqrt3 - 2.0 * w * kSqrt3, 3.0 * kSqrt3 - 2.0 * w * kSqrt3};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

GroupParams draw_group_params(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto layout = cfg.layout();
  const int K = layout.groups();
  const int T = layout.periods();
  const int r = cfg.factors;

  GroupParams p;
  p.alpha.resize(K);
  p.loadings.resize(K, r);
  p.scale.resize(K);
  p.beta.resize(T);
  p.factor_values.resize(T, r);

  const int n_scale = cfg.s_hi - cfg.s_lo + 1;
  const double rho_c = std::sqrt(1.0 - cfg.rho * cfg.rho);
  for (int k = 0; k < K; ++k) {
    const auto bounds = layout.is_treated(k) ? treated_bounds(cfg.w) : control_bounds();

    // Gaussian copula: alpha_k and S_k share correlation rho on the latent scale.
    auto eng = make_engine({seed, 0, static_cast<std::uint64_t>(k), 0, StreamPurpose::GroupEffects});
    std::normal_distribution<double> normal;
    const double z1 = normal(eng);
    const double z2 = cfg.rho * z1 + rho_c * normal(eng);
    p.alpha[k] = bounds.lo + (bounds.hi - bounds.lo) * normal_cdf(z1);
    const int bin = std::min(static_cast<int>(normal_cdf(z2) * n_scale), n_scale - 1);
    p.scale[k] = cfg.s_lo + bin;

    auto leng = make_engine({seed, 0, static_cast<std::uint64_t>(k), 0, StreamPurpose::Loadings});
    std::uniform_real_distribution<double> uniform(bounds.lo, bounds.hi);
    for (int j = 0; j < r; ++j) p.loadings(k, j) = uniform(leng);
  }
  for (int t = 0; t < T; ++t) {
    auto eng = make_engine({seed, 0, 0, static_cast<std::uint64_t>(t), StreamPurpose::TimeEffects});
    std::normal_distribution<double> normal;
    p.beta[t] = normal(eng);
    for (int j = 0; j < r; ++j) p.factor_values(t, j) = normal(eng);
  }
  return p;
}

CountMatrix counts_from_increments(const Eigen::VectorXi& scale, int base_rc,
                                   const Eigen::MatrixXd& increments) {
  if (increments.rows() != scale.size())
    throw DomainError("increment matrix rows must match the number of groups");
  const auto K = increments.rows();
  const auto T = increments.cols();
  CountMatrix counts(K, T);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double s = scale[k];
    long prev = 0;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double level = t == 0 ? s * base_rc + s * increments(k, t)
                                  : static_cast<double>(prev) + s * increments(k, t);
      prev = std::max(1L, static_cast<long>(std::llround(level)));
      counts(k, t) = prev;
    }
  }
  return counts;
}

Eigen::MatrixXd draw_count_increments(const ScenarioConfig& cfg, std::uint64_t seed,
                                      std::uint64_t replication) {
  const auto layout = cfg.layout();
  const double mean = 0.02 * cfg.base_rc;
  const double sd = std::sqrt(static_cast<double>(cfg.base_rc)) / 2.0;
  Eigen::MatrixXd e(layout.groups(), layout.periods());
  for (int k = 0; k < layout.groups(); ++k)
    for (int t = 0; t < layout.periods(); ++t) {
      auto eng = make_engine({seed, replication, static_cast<std::uint64_t>(k),
                              static_cast<std::uint64_t>(t), StreamPurpose::CountIncrements});
      std::normal_distribution<double> normal(mean, sd);
      e(k, t) = normal(eng);
    }
  return e;
}

CountMatrix simulate_counts(const GroupParams& params, const ScenarioConfig& cfg,
                            std::uint64_t seed, std::uint64_t replication) {
  return counts_from_increments(params.scale, cfg.base_rc,
                                draw_count_increments(cfg, seed, replication));
}

namespace {

void check_shapes(const ScenarioConfig& cfg, const GroupParams& params, const CountMatrix& counts) {
  cfg.validate();
  const auto L = cfg.layout();
  if (params.alpha.size() != L.groups() || params.beta.size() != L.periods() ||
      counts.rows() != L.groups() || counts.cols() != L.periods())
    throw DomainError("parameters or counts do not match the scenario layout");
}

// Visits every simulated outcome in (group, period, draw) order.
template <typename Sink>
void generate_outcomes(const ScenarioConfig& cfg, const GroupParams& params,
                       const CountMatrix& counts, std::uint64_t seed, std::uint64_t replication,
                       Sink&& sink) {
  const auto L = cfg.layout();
  for (int k = 0; k < L.groups(); ++k)
    for (int t = 0; t < L.periods(); ++t) {
      const double mean =
          params.untreated_mean(k, t) + (L.is_exposed(k, t) ? cfg.tau : 0.0);
      auto eng = make_engine({seed, replication, static_cast<std::uint64_t>(k),
                              static_cast<std::uint64_t>(t), StreamPurpose::Noise});
      std::normal_distribution<double> normal;
      const long n = counts(k, t);
      for (long i = 0; i < n; ++i) sink(k, t, mean + cfg.noise_sd * normal(eng));
    }
}

}  // namespace

RCDataset simulate_dataset(const ScenarioConfig& cfg, const GroupParams& params,
                           const CountMatrix& counts, std::uint64_t seed,
                           std::uint64_t replication) {
  check_shapes(cfg, params, counts);
  std::vector<Observation> rows;
  rows.reserve(static_cast<std::size_t>(counts.sum()));
  generate_outcomes(cfg, params, counts, seed, replication,
                    [&](int k, int t, double y) { rows.push_back({k, t, y}); });
  return RCDataset(cfg.layout(), std::move(rows));
}

AggregatedPanel simulate_panel(const ScenarioConfig& cfg, const GroupParams& params,
                               const CountMatrix& counts, std::uint64_t seed,
                               std::uint64_t replication) {
  check_shapes(cfg, params, counts);
  const auto L = cfg.layout();
  std::vector<CompensatedSum> sums(L.cells());
  generate_outcomes(cfg, params, counts, seed, replication, [&](int k, int t, double y) {
    sums[static_cast<std::size_t>(k) * L.periods() + t].add(y);
  });
  Eigen::MatrixXd means(L.groups(), L.periods());
  for (int k = 0; k < L.groups(); ++k)
    for (int t = 0; t < L.periods(); ++t)
      means(k, t) = sums[static_cast<std::size_t>(k) * L.periods() + t].value() /
                    static_cast<double>(counts(k, t));
  return AggregatedPanel(L, std::move(means), counts);
}

RCDataset simulate_dataset(const ScenarioConfig& cfg) {
  const auto params = draw_group_params(cfg, cfg.seed);
  const auto counts = simulate_counts(params, cfg, cfg.seed);
  return simulate_dataset(cfg, params, counts, cfg.seed, 1);
}

}  // namespace rcsdid
