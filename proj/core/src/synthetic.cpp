#include "lsopt/synthetic.hpp"

#include <cmath>
#include <limits>

#include "lsopt/errors.hpp"

namespace lsopt {

double pl_sine_value(const Eigen::VectorXd& w) {
  double v = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    double s = std::sin(w[j]);
    v += w[j] * w[j] + 3.0 * s * s;
  }
  return v;
}

Eigen::VectorXd pl_sine_grad(const Eigen::VectorXd& w) {
  Eigen::VectorXd g(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    g[j] = 2.0 * w[j] + 3.0 * std::sin(2.0 * w[j]);
  }
  return g;
}

double pl_sine_grid_mu() {
  static const double mu = [] {
    const int n = 2'000'001;
    const double lo = -10.0, hi = 10.0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double w = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
      double s = std::sin(w);
      double f = w * w + 3.0 * s * s;
      if (f <= 1e-12) continue;
      double g = 2.0 * w + 3.0 * std::sin(2.0 * w);
      double ratio = g * g / (2.0 * f);
      if (ratio < best) best = ratio;
    }
    return best;
  }();
  return mu;
}

double SyntheticPLProblem::value(const Eigen::VectorXd& w) const {
  if (w.size() != dim) throw InvalidInputError("point dimension does not match problem");
  switch (objective_id) {
    case SyntheticObjective::kPlSine:
      return pl_sine_value(w);
    case SyntheticObjective::kShiftedQuadratic:
      return 0.5 * curvature * (w - w_star).squaredNorm();
  }
  throw InvalidInputError("unknown objective");
}

Eigen::VectorXd SyntheticPLProblem::grad(const Eigen::VectorXd& w) const {
  if (w.size() != dim) throw InvalidInputError("point dimension does not match problem");
  switch (objective_id) {
    case SyntheticObjective::kPlSine:
      return pl_sine_grad(w);
    case SyntheticObjective::kShiftedQuadratic:
      return curvature * (w - w_star);
  }
  throw InvalidInputError("unknown objective");
}

SyntheticPLProblem SyntheticPLProblem::pl_sine(int dim) {
  if (dim < 1) throw InvalidInputError("pl_sine needs dim >= 1");
  SyntheticPLProblem p;
  p.dim = dim;
  p.objective_id = SyntheticObjective::kPlSine;
  p.L = 8.0;
  p.mu = pl_sine_grid_mu();
  p.f_star = 0.0;
  return p;
}

SyntheticPLProblem SyntheticPLProblem::shifted_quadratic(int dim, double curvature,
                                                         const Eigen::VectorXd& w_star) {
  if (dim < 1) throw InvalidInputError("shifted_quadratic needs dim >= 1");
  if (!(curvature > 0.0)) throw InvalidInputError("shifted_quadratic needs curvature > 0");
  if (w_star.size() != dim) throw InvalidInputError("w_star dimension does not match dim");
  SyntheticPLProblem p;
  p.dim = dim;
  p.objective_id = SyntheticObjective::kShiftedQuadratic;
  p.L = curvature;
  p.mu = curvature;
  p.f_star = 0.0;
  p.curvature = curvature;
  p.w_star = w_star;
  return p;
}

void NoiseSpec::validate() const {
  if (!(sigma2 >= 0.0)) throw InvalidInputError("sigma2 must be >= 0");
  if (!(delta >= 0.0)) throw InvalidInputError("delta must be >= 0");
  if (!(bias_fraction >= 0.0 && bias_fraction <= 1.0)) {
    throw InvalidInputError("bias_fraction must lie in [0,1]");
  }
}

namespace {

Eigen::VectorXd unbiased_draw(const SyntheticPLProblem& problem, const NoiseSpec& noise,
                              const Eigen::VectorXd& w, RngStream& rng) {
  double scale = std::sqrt(noise.sigma2 / problem.dim);
  return problem.grad(w) + scale * rng.normal_vector(problem.dim);
}

Eigen::VectorXd hat_draw(const SyntheticPLProblem& problem, const NoiseSpec& noise,
                         const Eigen::VectorXd& w, RngStream& rng) {
  double bias2 = noise.bias_fraction * noise.delta * noise.sigma2;
  double var = (1.0 - noise.bias_fraction) * noise.delta * noise.sigma2;
  Eigen::VectorXd g = problem.grad(w) + std::sqrt(var / problem.dim) * rng.normal_vector(problem.dim);
  g[0] += std::sqrt(bias2);
  return g;
}

}  // namespace

Eigen::VectorXd noisy_gradient(const SyntheticPLProblem& problem, const NoiseSpec& noise,
                               const Eigen::VectorXd& w, NoiseMode mode, double theta,
                               RngStream& rng) {
  noise.validate();
  if (w.size() != problem.dim) throw InvalidInputError("point dimension does not match problem");
  switch (mode) {
    case NoiseMode::kUnbiased:
      return unbiased_draw(problem, noise, w, rng);
    case NoiseMode::kHat:
      return hat_draw(problem, noise, w, rng);
    case NoiseMode::kSmoothed: {
      if (!(theta >= 0.0 && theta <= 1.0)) {
        throw InvalidInputError("smoothed mode needs theta in [0,1]");
      }
      Eigen::VectorXd u = unbiased_draw(problem, noise, w, rng);
      Eigen::VectorXd h = hat_draw(problem, noise, w, rng);
      return (1.0 - theta) * u + theta * h;
    }
  }
  throw InvalidInputError("unknown noise mode");
}

SyntheticOracle::SyntheticOracle(SyntheticPLProblem problem, NoiseSpec noise)
    : problem_(std::move(problem)), noise_(noise) {
  noise_.validate();
}

Eigen::VectorXd SyntheticOracle::stochastic_gradient(const Eigen::VectorXd& w,
                                                     const LabelMode& mode, RngStream& /*index_rng*/,
                                                     RngStream& noise_rng) const {
  switch (mode.kind) {
    case LabelMode::kOneHot:
      return noisy_gradient(problem_, noise_, w, NoiseMode::kUnbiased, 0.0, noise_rng);
    case LabelMode::kHatOnly:
      return noisy_gradient(problem_, noise_, w, NoiseMode::kHat, 0.0, noise_rng);
    case LabelMode::kSmoothed:
      return noisy_gradient(problem_, noise_, w, NoiseMode::kSmoothed, mode.spec.theta, noise_rng);
  }
  throw InvalidInputError("unknown label mode");
}

}  // namespace lsopt
