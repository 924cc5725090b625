#pragma once

#include "rcsdid/data_model.hpp"

#include <Eigen/Dense>

namespace rcsdid {

struct TwfeFit {
  double tau = 0.0;
  double mu = 0.0;
  // Group and period effects relative to the reference levels. Entries for
  // groups/periods that carry zero total weight are NaN.
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  int reference_group = 0;
  int reference_period = 0;
  // Max-norm residual of the normal equations, weights normalised to sum 1.
  double normal_equation_residual = 0.0;
  double total_weight = 0.0;
};

// Weighted least squares of y on  mu + alpha_k + beta_t + tau * W_{k,t}.
//
// Observations are streamed in one at a time and only the Gram matrix of the
// dummy design is kept, so the same accumulator serves individual rows and
// cell means (with the cell's summed weight). The reference level of each
// effect is the first group/period with positive weight; zero-weight groups
// and periods are dropped from the solve.
class TwfeAccumulator {
 public:
  explicit TwfeAccumulator(const PanelLayout& layout);

  void add(int group, int period, double outcome, double weight);

  // Throws DegenerateDesignError when tau is not identified.
  TwfeFit solve() const;

  const PanelLayout& layout() const noexcept { return layout_; }

 private:
  Eigen::Index alpha_index(int group) const { return 1 + group; }
  Eigen::Index beta_index(int period) const { return 1 + layout_.groups() + period; }
  Eigen::Index tau_index() const { return 1 + layout_.groups() + layout_.periods(); }

  PanelLayout layout_;
  Eigen::MatrixXd gram_;  // upper triangle filled
  Eigen::VectorXd moment_;
  double control_weight_ = 0.0;
};

// Cell-level regression on the panel means with the given K x T cell weights
// (each cell weight is the sum of the per-observation weights in the cell).
TwfeFit weighted_twfe_regression(const AggregatedPanel& panel, const Eigen::MatrixXd& cell_weights);

}  // namespace rcsdid
