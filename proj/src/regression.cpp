#include "rcsdid/regression.hpp"

#include "rcsdid/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace rcsdid {

namespace {
constexpr double kRankThreshold = 1e-11;
}

TwfeAccumulator::TwfeAccumulator(const PanelLayout& layout)
    : layout_(layout),
      gram_(Eigen::MatrixXd::Zero(layout.groups() + layout.periods() + 2,
                                  layout.groups() + layout.periods() + 2)),
      moment_(Eigen::VectorXd::Zero(layout.groups() + layout.periods() + 2)) {}

void TwfeAccumulator::add(int group, int period, double outcome, double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight))
    throw DomainError("regression weights must be finite and non-negative");
  if (weight == 0.0) return;
  Eigen::Index idx[4] = {0, alpha_index(group), beta_index(period), tau_index()};
  const int n = layout_.is_exposed(group, period) ? 4 : 3;
  for (int i = 0; i < n; ++i) {
    moment_[idx[i]] += weight * outcome;
    for (int j = i; j < n; ++j) gram_(idx[i], idx[j]) += weight;
  }
  if (!layout_.is_treated(group)) control_weight_ += weight;
}

TwfeFit TwfeAccumulator::solve() const {
  const int K = layout_.groups();
  const int T = layout_.periods();
  const double total = gram_(0, 0);
  if (!(total > 0.0)) throw DegenerateDesignError("all regression weights are zero");
  if (!(gram_(tau_index(), tau_index()) > 0.0))
    throw DegenerateDesignError("zero total weight on treated post-treatment cells");
  if (!(control_weight_ > 0.0)) throw DegenerateDesignError("zero total weight on control cells");

  TwfeFit fit;
  fit.total_weight = total;
  fit.reference_group = -1;
  fit.reference_period = -1;
  for (int k = 0; k < K && fit.reference_group < 0; ++k)
    if (gram_(alpha_index(k), alpha_index(k)) > 0.0) fit.reference_group = k;
  for (int t = 0; t < T && fit.reference_period < 0; ++t)
    if (gram_(beta_index(t), beta_index(t)) > 0.0) fit.reference_period = t;

  // Active columns: mu, non-reference positive-weight alphas and betas, tau.
  std::vector<Eigen::Index> active{0};
  for (int k = 0; k < K; ++k)
    if (k != fit.reference_group && gram_(alpha_index(k), alpha_index(k)) > 0.0)
      active.push_back(alpha_index(k));
  for (int t = 0; t < T; ++t)
    if (t != fit.reference_period && gram_(beta_index(t), beta_index(t)) > 0.0)
      active.push_back(beta_index(t));
  active.push_back(tau_index());

  const auto p = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd G(p, p);
  Eigen::VectorXd h(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    h[i] = moment_[active[i]] / total;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto a = std::min(active[i], active[j]);
      const auto b = std::max(active[i], active[j]);
      G(i, j) = gram_(a, b) / total;
    }
  }

  const Eigen::VectorXd scale = G.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd Gs = scale.asDiagonal() * G * scale.asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Gs);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < p) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> effects_only(Gs.topLeftCorner(p - 1, p - 1));
    effects_only.setThreshold(kRankThreshold);
    if (effects_only.rank() == p - 1)
      throw DegenerateDesignError(
          "treatment indicator is collinear with the group and period effects");
    throw DegenerateDesignError("group and period effects are collinear under these weights");
  }
  const Eigen::VectorXd theta = scale.asDiagonal() * qr.solve(scale.asDiagonal() * h);
  fit.normal_equation_residual = (G * theta - h).cwiseAbs().maxCoeff();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  fit.alpha = Eigen::VectorXd::Constant(K, nan);
  fit.beta = Eigen::VectorXd::Constant(T, nan);
  fit.alpha[fit.reference_group] = 0.0;
  fit.beta[fit.reference_period] = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto col = active[i];
    if (col == 0)
      fit.mu = theta[i];
    else if (col == tau_index())
      fit.tau = theta[i];
    else if (col <= K)
      fit.alpha[col - 1] = theta[i];
    else
      fit.beta[col - 1 - K] = theta[i];
  }
  return fit;
}

TwfeFit weighted_twfe_regression(const AggregatedPanel& panel, const Eigen::MatrixXd& cell_weights) {
  const auto& L = panel.layout();
  if (cell_weights.rows() != L.groups() || cell_weights.cols() != L.periods())
    throw DomainError("cell weight matrix does not match the panel layout");
  TwfeAccumulator acc(L);
  for (int k = 0; k < L.groups(); ++k)
    for (int t = 0; t < L.periods(); ++t) acc.add(k, t, panel.means()(k, t), cell_weights(k, t));
  return acc.solve();
}

}  // namespace rcsdid
