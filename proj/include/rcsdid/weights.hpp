#pragma once

#include "rcsdid/data_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rcsdid {

struct SolverOptions {
  double tol = 1e-8;     // Frank-Wolfe duality gap at exit
  int max_iter = 10'000;
  bool record_trace = false;
};

struct SolverReport {
  int iterations = 0;
  double final_objective = 0.0;
  double gradient_gap = 0.0;
  bool converged = false;
  // Objective after initialisation and after every step; only filled when
  // SolverOptions::record_trace is set.
  std::vector<double> objective_trace;
};

struct SimplexFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  SolverReport report;
};

// Minimises  || intercept + A w - b ||^2 + ridge * ||w||^2
// over intercept in R and w in the probability simplex.
//
// The intercept is profiled out by centring A and b. Fully-corrective
// Frank-Wolfe runs from the barycentre: every outer iteration first
// minimises exactly over the face spanned by the current support (dropping
// coordinates that reach zero), checks the duality gap, then takes a
// Frank-Wolfe step with exact line search. Linear minimisation ties go to the
// lowest index. Entries within 1e-12 below zero are clamped and the vector
// renormalised before returning.
SimplexFit frank_wolfe_simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double ridge,
                               const SolverOptions& options = {});

struct ZetaResult {
  double zeta = 0.0;
  double sigma_hat = 0.0;
  double delta_bar = 0.0;
};

// Regularisation level from the spread of first differences of the control
// pre-period means: zeta = (K_tr * T_post)^(1/4) * sigma_hat.
ZetaResult compute_zeta(const AggregatedPanel& panel);

struct UnitWeights {
  double omega0 = 0.0;
  Eigen::VectorXd omega;  // length K_co; treated groups implicitly 1/K_tr
  double zeta = 0.0;
  SolverReport solver_report;
};

struct TimeWeights {
  double lambda0 = 0.0;
  Eigen::VectorXd lambda;  // length T_pre; post periods implicitly 1/T_post
  SolverReport solver_report;
};

struct NuWeights {
  Eigen::MatrixXd nu;  // K x T, 1 / N_{k,t}
};

UnitWeights solve_unit_weights(const AggregatedPanel& panel, double zeta,
                               const SolverOptions& options = {});
TimeWeights solve_time_weights(const AggregatedPanel& panel, const SolverOptions& options = {});
NuWeights cross_sectional_weights(const AggregatedPanel& panel);

// Objectives as written, with the intercept as an explicit argument.
double unit_objective(const AggregatedPanel& panel, double omega0, const Eigen::VectorXd& omega,
                      double zeta);
double time_objective(const AggregatedPanel& panel, double lambda0, const Eigen::VectorXd& lambda);

// Length-K omega with 1/K_tr on treated groups, length-T lambda with
// 1/T_post on post periods.
Eigen::VectorXd full_unit_weights(const PanelLayout& layout, const UnitWeights& w);
Eigen::VectorXd full_time_weights(const PanelLayout& layout, const TimeWeights& w);

}  // namespace rcsdid
