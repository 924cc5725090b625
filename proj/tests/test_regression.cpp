#include "doctest.h"

#include "oracles.hpp"

#include "rcsdid/errors.hpp"
#include "rcsdid/regression.hpp"

#include <cmath>
#include <random>

using namespace rcsdid;

namespace {

AggregatedPanel panel_from(const PanelLayout& L, const Eigen::MatrixXd& means) {
  return AggregatedPanel(L, means, CountMatrix::Ones(L.groups(), L.periods()));
}

}  // namespace

TEST_SUITE("twfe") {
  TEST_CASE("2x2 equal weights is the double difference") {
    PanelLayout L(1, 1, 1, 1);
    Eigen::MatrixXd Y(2, 2);
    Y << 10, 12,
         20, 25;
    const auto fit = weighted_twfe_regression(panel_from(L, Y), Eigen::MatrixXd::Ones(2, 2));
    CHECK(fit.tau == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(fit.mu == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(fit.alpha(0) == 0.0);
    CHECK(fit.alpha(1) == doctest::Approx(10.0));
    CHECK(fit.beta(1) == doctest::Approx(2.0));
  }

  TEST_CASE("matches a dense pseudoinverse solve") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z(0.0, 2.0);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (const PanelLayout& L : {PanelLayout(2, 1, 2, 1), PanelLayout(3, 2, 3, 2), PanelLayout(5, 1, 4, 3)}) {
      for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd Y(L.groups(), L.periods()), W(L.groups(), L.periods());
        for (Eigen::Index i = 0; i < Y.size(); ++i) {
          Y.data()[i] = z(rng);
          W.data()[i] = u(rng);
        }
        const auto p = panel_from(L, Y);
        const auto fit = weighted_twfe_regression(p, W);
        const auto ref = oracle::dense_gls(p, W);
        CHECK(std::abs(fit.tau - ref.tau) <= 1e-9);
        CHECK(std::abs(fit.mu - ref.mu) <= 1e-9);
        CHECK((fit.alpha - ref.alpha).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((fit.beta - ref.beta).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(fit.normal_equation_residual <= 1e-8);
        CHECK(fit.total_weight == doctest::Approx(W.sum()));
      }
    }
  }

  TEST_CASE("accumulating rows equals cell means with summed weights") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0.0, 1.0);
    PanelLayout L(3, 1, 3, 2);
    TwfeAccumulator acc(L);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(L.groups(), L.periods());
    Eigen::MatrixXd cw = Eigen::MatrixXd::Zero(L.groups(), L.periods());
    for (int k = 0; k < L.groups(); ++k)
      for (int t = 0; t < L.periods(); ++t)
        for (int i = 0; i < 3 + k + t; ++i) {
          const double y = z(rng), w = 0.5 + 0.1 * k;
          acc.add(k, t, y, w);
          sum(k, t) += w * y;
          cw(k, t) += w;
        }
    const Eigen::MatrixXd means = sum.cwiseQuotient(cw);
    const auto a = acc.solve();
    const auto b = weighted_twfe_regression(panel_from(L, means), cw);
    CHECK(a.tau == doctest::Approx(b.tau).epsilon(1e-10));
  }

  TEST_CASE("zero weight on every pre-period is degenerate") {
    PanelLayout L(2, 1, 2, 1);
    Eigen::MatrixXd W = Eigen::MatrixXd::Ones(3, 3);
    W.leftCols(2).setZero();
    CHECK_THROWS_AS(weighted_twfe_regression(panel_from(L, Eigen::MatrixXd::Zero(3, 3)), W),
                    DegenerateDesignError);
  }

  TEST_CASE("zero weight on treated post cells or on controls is degenerate") {
    PanelLayout L(2, 1, 2, 1);
    const auto p = panel_from(L, Eigen::MatrixXd::Zero(3, 3));
    Eigen::MatrixXd W = Eigen::MatrixXd::Ones(3, 3);
    W(2, 2) = 0.0;
    CHECK_THROWS_AS(weighted_twfe_regression(p, W), DegenerateDesignError);
    W = Eigen::MatrixXd::Ones(3, 3);
    W.topRows(2).setZero();
    CHECK_THROWS_AS(weighted_twfe_regression(p, W), DegenerateDesignError);
    CHECK_THROWS_AS(weighted_twfe_regression(p, Eigen::MatrixXd::Zero(3, 3)), DegenerateDesignError);
  }

  TEST_CASE("zero-weight group is dropped and reported as NaN") {
    PanelLayout L(3, 1, 2, 1);
    Eigen::MatrixXd Y(4, 3);
    Y << 1, 2, 3,
         4, 4, 7,
         0, 1, 1,
         5, 6, 9;
    Eigen::MatrixXd W = Eigen::MatrixXd::Ones(4, 3);
    W.row(0).setZero();
    const auto fit = weighted_twfe_regression(panel_from(L, Y), W);
    CHECK(std::isnan(fit.alpha(0)));
    CHECK(fit.reference_group == 1);
    CHECK(fit.alpha(1) == 0.0);

    // Same answer as removing the group outright.
    PanelLayout L2(2, 1, 2, 1);
    const auto fit2 = weighted_twfe_regression(panel_from(L2, Y.bottomRows(3)), Eigen::MatrixXd::Ones(3, 3));
    CHECK(fit.tau == doctest::Approx(fit2.tau).epsilon(1e-12));
  }

  TEST_CASE("invalid weights") {
    PanelLayout L(1, 1, 1, 1);
    const auto p = panel_from(L, Eigen::MatrixXd::Zero(2, 2));
    Eigen::MatrixXd W = Eigen::MatrixXd::Ones(2, 2);
    W(0, 0) = -1.0;
    CHECK_THROWS_AS(weighted_twfe_regression(p, W), DomainError);
    W(0, 0) = std::nan("");
    CHECK_THROWS_AS(weighted_twfe_regression(p, W), DomainError);
    CHECK_THROWS_AS(weighted_twfe_regression(p, Eigen::MatrixXd::Ones(3, 2)), DomainError);
  }
}
