#include "doctest.h"

#include "rcsdid/dgp.hpp"
#include "rcsdid/errors.hpp"
#include "rcsdid/estimators.hpp"

#include <cmath>
#include <random>

using namespace rcsdid;

namespace {

ScenarioConfig small_config(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.k_co = 8;
  cfg.periods = 10;
  cfg.t_pre = 6;
  cfg.base_rc = 20;
  cfg.s_hi = 4;
  cfg.seed = seed;
  return cfg;
}

RCDataset draw(const ScenarioConfig& cfg, std::uint64_t rep = 1) {
  const auto params = draw_group_params(cfg, cfg.seed);
  const auto counts = simulate_counts(params, cfg, cfg.seed);
  return simulate_dataset(cfg, params, counts, cfg.seed, rep);
}

RCDataset transform(const RCDataset& d, double scale, double shift) {
  std::vector<Observation> rows(d.rows().begin(), d.rows().end());
  for (auto& r : rows) r.outcome = scale * r.outcome + shift;
  return RCDataset(d.layout(), std::move(rows));
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("method names") {
    for (Method m : kAllMethods) CHECK(parse_method(method_name(m)) == m);
    CHECK(parse_method("rcsdid") == Method::RC_SDID);
    CHECK(parse_method("sdid") == Method::SDID);
    CHECK(parse_method("did") == Method::DID);
    CHECK_FALSE(parse_method("ols").has_value());
  }

  TEST_CASE("canonical 2x2 DiD") {
    PanelLayout L(1, 1, 1, 1);
    RCDataset d(L, {{0, 0, 10}, {0, 1, 12}, {1, 0, 20}, {1, 1, 25}});
    const auto e = estimate_did(d);
    CHECK(e.tau_hat == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e.n_obs == 4);
    CHECK(e.alpha_hat(0) == 0.0);
    CHECK(e.beta_hat(0) == 0.0);
  }

  TEST_CASE("exact recovery without noise or factors") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto cfg = small_config(seed);
      cfg.factors = 0;
      cfg.noise_sd = 0.0;
      const auto d = draw(cfg);
      for (Method m : kAllMethods) {
        CHECK(std::abs(estimate(m, d).tau_hat - 0.3) <= 1e-10);
        EstimateOptions ind;
        ind.individual_level = true;
        CHECK(std::abs(estimate(m, d, ind).tau_hat - 0.3) <= 1e-10);
      }
    }
  }

  TEST_CASE("constant counts: RC-SDiD equals SDiD") {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
      const auto cfg = small_config(seed);
      const auto params = draw_group_params(cfg, seed);
      const CountMatrix counts = CountMatrix::Constant(cfg.k_co + cfg.k_tr, cfg.periods, 7);
      const auto d = simulate_dataset(cfg, params, counts, seed, 1);
      CHECK(std::abs(estimate_rcsdid(d).tau_hat - estimate_sdid_baseline(d).tau_hat) <= 1e-10);
    }
  }

  TEST_CASE("one observation per cell: RC-SDiD equals SDiD") {
    const auto cfg = small_config(4);
    const auto params = draw_group_params(cfg, 4);
    const CountMatrix counts = CountMatrix::Ones(cfg.k_co + cfg.k_tr, cfg.periods);
    const auto d = simulate_dataset(cfg, params, counts, 4, 1);
    CHECK(std::abs(estimate_rcsdid(d).tau_hat - estimate_sdid_baseline(d).tau_hat) <= 1e-12);
  }

  TEST_CASE("individual-level regression collapses to the cell level") {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
      const auto d = draw(small_config(seed));
      EstimateOptions ind;
      ind.individual_level = true;
      for (Method m : kAllMethods)
        CHECK(std::abs(estimate(m, d, ind).tau_hat - estimate(m, d).tau_hat) <= 1e-8);

      // RC-SDiD per-observation weights summed over a cell are omega * lambda.
      const auto panel = aggregate(d);
      const auto rc = estimate_rcsdid(d);
      const auto om = full_unit_weights(d.layout(), *rc.weights_used.unit);
      const auto la = full_time_weights(d.layout(), *rc.weights_used.time);
      const Eigen::MatrixXd cell = om * la.transpose();
      const auto fit = weighted_twfe_regression(panel, cell);
      CHECK(std::abs(estimate(Method::RC_SDID, d, ind).tau_hat - fit.tau) <= 1e-8);
    }
  }

  TEST_CASE("scale equivariance and shift invariance") {
    const auto d = draw(small_config(31));
    const auto scaled = transform(d, 2.5, 0.0);
    const auto shifted = transform(d, 1.0, -40.0);
    for (Method m : kAllMethods) {
      const double tau = estimate(m, d).tau_hat;
      CHECK(estimate(m, scaled).tau_hat == doctest::Approx(2.5 * tau).epsilon(1e-8));
      CHECK(std::abs(estimate(m, shifted).tau_hat - tau) <= 1e-8);
    }
  }

  TEST_CASE("weight components follow the method") {
    const auto d = draw(small_config(5));
    const auto did = estimate_did(d);
    CHECK_FALSE(did.weights_used.unit.has_value());
    CHECK_FALSE(did.weights_used.time.has_value());
    CHECK_FALSE(did.weights_used.cross_sectional.has_value());
    const auto sdid = estimate_sdid_baseline(d);
    CHECK(sdid.weights_used.unit.has_value());
    CHECK(sdid.weights_used.time.has_value());
    CHECK_FALSE(sdid.weights_used.cross_sectional.has_value());
    const auto rc = estimate_rcsdid(d);
    CHECK(rc.weights_used.unit.has_value());
    CHECK(rc.weights_used.time.has_value());
    CHECK(rc.weights_used.cross_sectional.has_value());
    CHECK(rc.n_obs == static_cast<long>(d.size()));
  }

  TEST_CASE("normalisation and normal equations") {
    const auto d = draw(small_config(6));
    for (Method m : kAllMethods) {
      const auto e = estimate(m, d);
      REQUIRE(e.alpha_hat.size() == d.layout().groups());
      REQUIRE(e.beta_hat.size() == d.layout().periods());
      CHECK(e.alpha_hat(e.reference_group) == 0.0);
      CHECK(e.beta_hat(e.reference_period) == 0.0);
      CHECK(e.normal_equation_residual <= 1e-8);
      if (m != Method::DID && e.weights_used.unit) {
        const auto& om = e.weights_used.unit->omega;
        for (Eigen::Index k = 0; k < om.size(); ++k)
          if (om(k) == 0.0) CHECK(std::isnan(e.alpha_hat(k)));
      }
    }
    CHECK(estimate_did(d).reference_group == 0);
  }

  TEST_CASE("observation weights") {
    const auto d = draw(small_config(7));
    const auto panel = aggregate(d);
    const auto ws = compute_weights(Method::RC_SDID, panel);
    const auto rc = observation_weights(Method::RC_SDID, panel, ws);
    const auto sd = observation_weights(Method::SDID, panel, ws);
    for (int k = 0; k < panel.layout().groups(); ++k)
      for (int t = 0; t < panel.layout().periods(); ++t)
        CHECK(rc(k, t) == doctest::Approx(sd(k, t) / panel.counts()(k, t)).epsilon(1e-15));
    CHECK((observation_weights(Method::DID, panel, {}).array() == 1.0).all());
    CHECK_THROWS_AS(observation_weights(Method::SDID, panel, {}), DomainError);
  }

  TEST_CASE("estimate_all matches the individual calls") {
    const auto panel = aggregate(draw(small_config(8)));
    const auto all = estimate_all(panel);
    for (std::size_t i = 0; i < kAllMethods.size(); ++i) {
      CHECK(all[i].method == kAllMethods[i]);
      CHECK(all[i].tau_hat == doctest::Approx(estimate(kAllMethods[i], panel).tau_hat).epsilon(1e-12));
    }
  }

  TEST_CASE("single pre-period: DiD runs, synthetic estimators refuse") {
    PanelLayout L(2, 1, 1, 1);
    RCDataset d(L, {{0, 0, 1}, {0, 1, 2}, {1, 0, 3}, {1, 1, 3}, {2, 0, 0}, {2, 1, 4}});
    CHECK(estimate_did(d).tau_hat == doctest::Approx(3.5));
    CHECK_THROWS_AS(estimate_rcsdid(d), DomainError);
  }
}
