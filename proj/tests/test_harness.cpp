#include "doctest.h"

#include "rcsdid/errors.hpp"
#include "rcsdid/harness.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace rcsdid;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.k_co = 10;
  cfg.periods = 10;
  cfg.t_pre = 5;
  cfg.base_rc = 30;
  cfg.s_hi = 5;
  return cfg;
}

std::string csv_of(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  write_metrics_csv(out, rows);
  return out.str();
}

}  // namespace

TEST_SUITE("summarize") {
  TEST_CASE("constant draws at the truth") {
    const std::vector<double> x{0.3, 0.3, 0.3};
    const auto m = summarize(x, 0.3);
    CHECK(std::abs(m.mean_bias) <= 1e-15);
    CHECK(m.sd == 0.0);
    CHECK(m.rmse <= 1e-15);
    CHECK_FALSE(m.single_draw);
  }

  TEST_CASE("two draws") {
    const std::vector<double> x{0.2, 0.4};
    const auto m = summarize(x, 0.3);
    CHECK(m.mean_bias == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(m.sd == doctest::Approx(0.1414213562).epsilon(1e-9));
    CHECK(m.rmse == doctest::Approx(0.1).epsilon(1e-12));
  }

  TEST_CASE("single draw") {
    const std::vector<double> x{0.5};
    const auto m = summarize(x, 0.3);
    CHECK(m.mean_bias == doctest::Approx(0.2));
    CHECK(m.sd == 0.0);
    CHECK(m.rmse == doctest::Approx(0.2));
    CHECK(m.single_draw);
  }

  TEST_CASE("empty input") {
    CHECK_THROWS_AS(summarize(std::vector<double>{}, 0.3), DomainError);
  }

  TEST_CASE("rmse^2 = bias^2 + (n-1)/n sd^2") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z(0.1, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(static_cast<std::size_t>(2 + trial));
      for (auto& v : x) v = z(rng);
      const auto m = summarize(x, 0.3);
      const double n = static_cast<double>(x.size());
      CHECK(m.rmse * m.rmse ==
            doctest::Approx(m.mean_bias * m.mean_bias + (n - 1) / n * m.sd * m.sd).epsilon(1e-12));
    }
  }
}

TEST_SUITE("scenarios") {
  TEST_CASE("noiseless single replication has zero error") {
    auto cfg = small_config();
    cfg.factors = 0;
    cfg.noise_sd = 0.0;
    const auto row = run_scenario(cfg, 1, 42, {}, "exact");
    CHECK(row.replications == 1);
    for (Method m : kAllMethods) {
      CHECK(std::abs(row[m].mean_bias) <= 1e-10);
      CHECK(row[m].rmse <= 1e-10);
      CHECK(row[m].sd == 0.0);
      CHECK(row[m].single_draw);
    }
  }

  TEST_CASE("thread count does not change results") {
    const auto cfg = small_config();
    HarnessOptions one, three;
    one.threads = 1;
    three.threads = 3;
    const auto a = run_replications(cfg, 12, 5, one);
    const auto b = run_replications(cfg, 12, 5, three);
    for (std::size_t m = 0; m < 3; ++m) CHECK(a.tau_hat[m] == b.tau_hat[m]);
    CHECK(a.excluded == 0);
    CHECK(a.unconverged == 0);
  }

  TEST_CASE("constant counts: RC-SDiD equals SDiD per replication") {
    HarnessOptions opts;
    opts.fixed_count = 9;
    const auto d = run_replications(small_config(), 8, 3, opts);
    for (std::size_t i = 0; i < d.tau_hat[1].size(); ++i)
      CHECK(std::abs(d.tau_hat[1][i] - d.tau_hat[2][i]) <= 1e-10);
  }

  TEST_CASE("redrawing counts changes the draws") {
    HarnessOptions redraw;
    redraw.redraw_counts = true;
    const auto a = run_replications(small_config(), 4, 3);
    const auto b = run_replications(small_config(), 4, 3, redraw);
    CHECK(a.tau_hat[0] != b.tau_hat[0]);
  }

  TEST_CASE("without factors DiD has the lowest RMSE") {
    ScenarioConfig cfg;
    cfg.factors = 0;
    const auto row = run_scenario(cfg, 100, 42);
    CHECK(row[Method::DID].rmse < row[Method::RC_SDID].rmse);
    CHECK(row[Method::DID].rmse < row[Method::SDID].rmse);
  }

  TEST_CASE("exclusion limit") {
    HarnessOptions opts;
    opts.max_exclusion_fraction = -1.0;  // any run exceeds it
    CHECK_THROWS_AS(run_scenario(small_config(), 2, 1, opts), HarnessError);
  }

  TEST_CASE("invalid arguments") {
    CHECK_THROWS_AS(run_scenario(small_config(), 0, 1), ValidationError);
    auto cfg = small_config();
    cfg.w = 2.0;
    CHECK_THROWS_AS(run_scenario(cfg, 1, 1), ValidationError);
  }
}

TEST_SUITE("tables") {
  TEST_CASE("table names") {
    for (auto id : {TableId::Scale, TableId::Factors, TableId::Assignment, TableId::Correlation,
                    TableId::Size, TableId::Custom})
      CHECK(parse_table(table_name(id)) == id);
    CHECK_FALSE(parse_table("table1").has_value());
  }

  TEST_CASE("published grids") {
    const ScenarioConfig base;
    const auto scale = make_table(TableId::Scale, base, 10, 1, 42);
    REQUIRE(scale.rows.size() == 8);
    CHECK(scale.rows[0].label == "S_k=1");
    CHECK(scale.rows[5].label == "S_k in [1,10]");
    CHECK(scale.rows[7].config.s_hi == 20);

    const auto factors = make_table(TableId::Factors, base, 10, 1, 42);
    REQUIRE(factors.rows.size() == 5);
    CHECK(factors.rows[0].config.factors == 0);
    CHECK(factors.rows[4].config.factors == 4);

    const auto assign = make_table(TableId::Assignment, base, 10, 1, 42);
    REQUIRE(assign.rows.size() == 6);
    CHECK(assign.rows[0].label == "w=1");
    CHECK(assign.rows[5].config.w == 0.0);

    const auto corr = make_table(TableId::Correlation, base, 10, 1, 42);
    REQUIRE(corr.rows.size() == 5);
    CHECK(corr.rows[2].config.rho == 0.5);

    const auto size = make_table(TableId::Size, base, 10, 1, 42);
    REQUIRE(size.rows.size() == 8);
    for (const auto& r : size.rows) CHECK(r.config.t_pre == r.config.periods / 2);
    CHECK(size.rows[3].config.k_co == 15);
    CHECK(size.rows[3].config.periods == 15);
    CHECK(size.rows[4].config.base_rc == 50);

    CHECK(make_table(TableId::Custom, base, 10, 1, 42).rows.size() == 1);
  }

  TEST_CASE("rows share the meta seed and output is reproducible") {
    auto spec = make_table(TableId::Assignment, small_config(), 5, 2, 7);
    spec.rows.resize(2);
    const auto rows = run_table(spec);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].meta_seed == 7);
    CHECK(rows[1].meta_seed == 8);
    CHECK(rows[2].meta_seed == 7);
    CHECK(rows[0].scenario_label == rows[1].scenario_label);

    HarnessOptions three;
    three.threads = 3;
    CHECK(csv_of(rows) == csv_of(run_table(spec, three)));

    // The run reproduces from its reported meta seed.
    const auto again = run_scenario(spec.rows[1].config, 5, rows[3].meta_seed);
    CHECK(again[Method::RC_SDID].mean_bias == rows[3][Method::RC_SDID].mean_bias);
  }

  TEST_CASE("writers") {
    MetricsRow row;
    row.scenario_label = "S_k in [1,4]";
    row.replications = 3;
    row.meta_seed = 42;
    row.metrics[0] = {0.5, 0.25, 0.125, false};
    std::vector<MetricsRow> rows{row};
    const auto csv = csv_of(rows);
    CHECK(csv.rfind("scenario_label,estimator,mean_bias,sd,rmse,reps,meta_seed\n", 0) == 0);
    CHECK(csv.find("\"S_k in [1,4]\",DiD,0.5000000000,0.2500000000,0.1250000000,3,42\n") !=
          std::string::npos);
    std::ostringstream md;
    write_metrics_markdown(md, rows);
    CHECK(md.str().find("| S_k in [1,4] | 0.5000000 |") != std::string::npos);
  }

  TEST_CASE("validation") {
    TableSpec spec;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = make_table(TableId::Custom, {}, 0, 1, 1);
    CHECK_THROWS_AS(spec.validate(), ValidationError);
  }
}
