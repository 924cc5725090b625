#include "rcsdid/weights.hpp"

#include "rcsdid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rcsdid {

namespace {

constexpr double kClampTolerance = 1e-12;

Eigen::Index lowest_argmin(const Eigen::VectorXd& g) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < g.size(); ++i)
    if (g[i] < g[best]) best = i;
  return best;
}

void clamp_to_simplex(Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < 0.0 && x[i] >= -kClampTolerance) x[i] = 0.0;
  const double total = x.sum();
  if (total > 0.0) x /= total;
}

}  // namespace

namespace {

// Quadratic f(x) = x'Qx - 2 c'x + const + ridge ||x||^2 in terms of the
// centred design: Q = Ac'Ac, c = Ac'bc.
struct SimplexQuadratic {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double bb;
  double ridge;

  double value(const Eigen::VectorXd& x) const {
    return x.dot(Q * x) - 2.0 * c.dot(x) + bb + ridge * x.squaredNorm();
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    return 2.0 * (Q * x - c + ridge * x);
  }
};

// Minimiser of f over the affine hull {x : x_i = 0 off `face`, sum x = 1}.
// Minimum-norm solution when the restricted Hessian is singular.
Eigen::VectorXd affine_minimiser(const SimplexQuadratic& f, const std::vector<Eigen::Index>& face,
                                 Eigen::Index n) {
  const auto m = static_cast<Eigen::Index>(face.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd rhs(m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) kkt(i, j) = f.Q(face[i], face[j]);
    kkt(i, i) += f.ridge;
    kkt(i, m) = kkt(m, i) = 1.0;
    rhs[i] = f.c[face[i]];
  }
  rhs[m] = 1.0;
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) y[face[i]] = sol[i];
  return y;
}

// Exact minimisation over conv(face) starting from x (x > 0 on the face):
// move toward the affine minimiser, dropping coordinates that reach zero.
void correct_on_face(const SimplexQuadratic& f, Eigen::VectorXd& x,
                     std::vector<Eigen::Index>& face) {
  for (;;) {
    const Eigen::VectorXd y = affine_minimiser(f, face, x.size());
    double step = 1.0;
    Eigen::Index blocking = -1;
    for (auto i : face) {
      if (y[i] < 0.0) {
        const double s = x[i] / (x[i] - y[i]);
        if (s < step) {
          step = s;
          blocking = i;
        }
      }
    }
    Eigen::VectorXd candidate = x + step * (y - x);
    if (f.value(candidate) > f.value(x)) return;
    x = std::move(candidate);
    if (blocking < 0) return;
    x[blocking] = 0.0;
    std::erase_if(face, [&](Eigen::Index i) { return x[i] <= 0.0; });
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < 0.0) x[i] = 0.0;
    x /= x.sum();
    if (face.size() == 1) return;
  }
}

}  // namespace

SimplexFit frank_wolfe_simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double ridge,
                               const SolverOptions& options) {
  if (A.cols() < 1) throw DomainError("simplex problem needs at least one column");
  if (A.rows() < 1) throw DomainError("simplex problem needs at least one row");
  if (A.rows() != b.size())
    throw DomainError("design has " + std::to_string(A.rows()) + " rows but target has " +
                      std::to_string(b.size()));
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw DomainError("ridge must be finite and >= 0");
  if (!(options.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  if (options.max_iter < 0) throw DomainError("max_iter must be non-negative");

  const Eigen::RowVectorXd col_means = A.colwise().mean();
  const double b_mean = b.mean();
  const Eigen::MatrixXd Ac = A.rowwise() - col_means;
  const Eigen::VectorXd bc = b.array() - b_mean;
  const Eigen::Index m = A.cols();
  const SimplexQuadratic f{Ac.transpose() * Ac, Ac.transpose() * bc, bc.squaredNorm(), ridge};

  Eigen::VectorXd x = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  std::vector<Eigen::Index> face(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) face[static_cast<std::size_t>(i)] = i;

  SimplexFit fit;
  auto& report = fit.report;
  auto record = [&] {
    if (options.record_trace) report.objective_trace.push_back(f.value(x));
  };
  record();

  if (m == 1) {
    report.converged = true;
  } else {
    for (;;) {
      correct_on_face(f, x, face);
      record();

      const Eigen::VectorXd grad = f.gradient(x);
      const Eigen::Index s = lowest_argmin(grad);
      const double fw_gap = grad.dot(x) - grad[s];
      if (fw_gap <= options.tol) {
        report.converged = true;
        break;
      }
      if (report.iterations >= options.max_iter) break;

      // Frank-Wolfe step toward vertex s with exact line search.
      Eigen::VectorXd d = -x;
      d[s] += 1.0;
      const double curvature = 2.0 * (d.dot(f.Q * d) + ridge * d.squaredNorm());
      double step = curvature > 0.0 ? fw_gap / curvature : 1.0;
      step = std::clamp(step, 0.0, 1.0);
      x *= (1.0 - step);
      x[s] += step;
      if (step == 1.0) {
        x.setZero();
        x[s] = 1.0;
      }
      ++report.iterations;
      face.clear();
      for (Eigen::Index i = 0; i < m; ++i)
        if (x[i] > 0.0) face.push_back(i);
      record();
    }
  }

  clamp_to_simplex(x);
  const Eigen::VectorXd grad = f.gradient(x);
  report.final_objective = f.value(x);
  report.gradient_gap = m == 1 ? 0.0 : grad.dot(x) - grad[lowest_argmin(grad)];
  if (report.converged && report.gradient_gap > options.tol) report.converged = false;

  fit.intercept = b_mean - col_means.dot(x);
  fit.weights = std::move(x);
  return fit;
}

ZetaResult compute_zeta(const AggregatedPanel& panel) {
  const auto& layout = panel.layout();
  const int k_co = layout.k_co();
  const int t_pre = layout.t_pre();
  if (t_pre < 2)
    throw DomainError("zeta needs at least two pre-treatment periods (found " +
                      std::to_string(t_pre) + ")");

  const auto& Y = panel.means();
  const double n = static_cast<double>(k_co) * (t_pre - 1);
  double sum = 0.0;
  for (int k = 0; k < k_co; ++k)
    for (int t = 0; t + 1 < t_pre; ++t) sum += Y(k, t + 1) - Y(k, t);
  const double delta_bar = sum / n;
  double ss = 0.0;
  for (int k = 0; k < k_co; ++k)
    for (int t = 0; t + 1 < t_pre; ++t) {
      const double dev = (Y(k, t + 1) - Y(k, t)) - delta_bar;
      ss += dev * dev;
    }
  ZetaResult out;
  out.delta_bar = delta_bar;
  out.sigma_hat = std::sqrt(ss / n);
  out.zeta = std::pow(static_cast<double>(layout.k_tr()) * layout.t_post(), 0.25) * out.sigma_hat;
  return out;
}

namespace {

Eigen::VectorXd treated_average_pre(const AggregatedPanel& panel) {
  const auto& L = panel.layout();
  return panel.means().block(L.k_co(), 0, L.k_tr(), L.t_pre()).colwise().mean().transpose();
}

Eigen::VectorXd post_average_controls(const AggregatedPanel& panel) {
  const auto& L = panel.layout();
  return panel.means().block(0, L.t_pre(), L.k_co(), L.t_post()).rowwise().mean();
}

}  // namespace

UnitWeights solve_unit_weights(const AggregatedPanel& panel, double zeta,
                               const SolverOptions& options) {
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw DomainError("zeta must be finite and >= 0");
  const auto& L = panel.layout();
  const Eigen::MatrixXd A = panel.means().block(0, 0, L.k_co(), L.t_pre()).transpose();
  const double ridge = zeta * zeta * L.t_pre();
  auto fit = frank_wolfe_simplex(A, treated_average_pre(panel), ridge, options);
  return UnitWeights{fit.intercept, std::move(fit.weights), zeta, std::move(fit.report)};
}

TimeWeights solve_time_weights(const AggregatedPanel& panel, const SolverOptions& options) {
  const auto& L = panel.layout();
  const Eigen::MatrixXd A = panel.means().block(0, 0, L.k_co(), L.t_pre());
  auto fit = frank_wolfe_simplex(A, post_average_controls(panel), 0.0, options);
  return TimeWeights{fit.intercept, std::move(fit.weights), std::move(fit.report)};
}

NuWeights cross_sectional_weights(const AggregatedPanel& panel) {
  return NuWeights{panel.counts().cast<double>().cwiseInverse()};
}

double unit_objective(const AggregatedPanel& panel, double omega0, const Eigen::VectorXd& omega,
                      double zeta) {
  const auto& L = panel.layout();
  const Eigen::VectorXd target = treated_average_pre(panel);
  double loss = 0.0;
  for (int t = 0; t < L.t_pre(); ++t) {
    double fitted = omega0;
    for (int k = 0; k < L.k_co(); ++k) fitted += omega[k] * panel.means()(k, t);
    loss += (fitted - target[t]) * (fitted - target[t]);
  }
  return loss + zeta * zeta * L.t_pre() * omega.squaredNorm();
}

double time_objective(const AggregatedPanel& panel, double lambda0, const Eigen::VectorXd& lambda) {
  const auto& L = panel.layout();
  const Eigen::VectorXd target = post_average_controls(panel);
  double loss = 0.0;
  for (int k = 0; k < L.k_co(); ++k) {
    double fitted = lambda0;
    for (int t = 0; t < L.t_pre(); ++t) fitted += lambda[t] * panel.means()(k, t);
    loss += (fitted - target[k]) * (fitted - target[k]);
  }
  return loss;
}

Eigen::VectorXd full_unit_weights(const PanelLayout& layout, const UnitWeights& w) {
  Eigen::VectorXd out(layout.groups());
  out.head(layout.k_co()) = w.omega;
  out.tail(layout.k_tr()).setConstant(1.0 / layout.k_tr());
  return out;
}

Eigen::VectorXd full_time_weights(const PanelLayout& layout, const TimeWeights& w) {
  Eigen::VectorXd out(layout.periods());
  out.head(layout.t_pre()) = w.lambda;
  out.tail(layout.t_post()).setConstant(1.0 / layout.t_post());
  return out;
}

}  // namespace rcsdid
