#pragma once

#include <Eigen/Core>

#include "lsopt/oracle.hpp"
#include "lsopt/rng.hpp"

namespace lsopt {

enum class SyntheticObjective { kPlSine, kShiftedQuadratic };

// An analytic objective with known smoothness L, gradient-dominance
// constant mu, and optimal value f_star.
struct SyntheticPLProblem {
  int dim = 1;
  SyntheticObjective objective_id = SyntheticObjective::kPlSine;
  double L = 0.0;
  double mu = 0.0;
  double f_star = 0.0;

  // shifted_quadratic parameters; unused for pl_sine.
  double curvature = 1.0;
  Eigen::VectorXd w_star;

  double value(const Eigen::VectorXd& w) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& w) const;

  // F(w) = sum_j w_j^2 + 3 sin^2(w_j). L = 8 since |F''| = |2 + 6 cos 2w| <= 8.
  // mu is the dense-grid infimum of ||grad||^2 / (2(F - f_star)) on [-10,10];
  // the objective is a sum over coordinates, so the one dimensional infimum
  // is valid for every dim.
  static SyntheticPLProblem pl_sine(int dim);

  // F(w) = (curvature/2) ||w - w_star||^2 with mu = L = curvature.
  static SyntheticPLProblem shifted_quadratic(int dim, double curvature,
                                              const Eigen::VectorXd& w_star);
};

double pl_sine_value(const Eigen::VectorXd& w);
Eigen::VectorXd pl_sine_grad(const Eigen::VectorXd& w);

// Dense-grid infimum defining pl_sine's mu; cached after the first call.
double pl_sine_grid_mu();

// Additive gradient-noise model. The unbiased oracle has second moment about
// the true gradient exactly sigma2; the hat oracle has second moment exactly
// delta*sigma2, split between a fixed bias along the first coordinate axis
// (fraction bias_fraction) and isotropic variance (the rest).
struct NoiseSpec {
  double sigma2 = 0.0;
  double delta = 0.0;
  double bias_fraction = 0.0;

  void validate() const;
};

enum class NoiseMode { kUnbiased, kHat, kSmoothed };

// One stochastic gradient draw at w. kSmoothed combines independent unbiased
// and hat draws with weights (1-theta) and theta.
Eigen::VectorXd noisy_gradient(const SyntheticPLProblem& problem, const NoiseSpec& noise,
                               const Eigen::VectorXd& w, NoiseMode mode, double theta,
                               RngStream& rng);

// Oracle adapter. kOneHot maps to the unbiased oracle, kHatOnly to the hat
// oracle, kSmoothed to the theta-weighted combination.
class SyntheticOracle : public Oracle {
 public:
  SyntheticOracle(SyntheticPLProblem problem, NoiseSpec noise);

  int dim() const override { return problem_.dim; }
  double objective(const Eigen::VectorXd& w) const override { return problem_.value(w); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override { return problem_.grad(w); }
  Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w, const LabelMode& mode,
                                      RngStream& index_rng, RngStream& noise_rng) const override;
  std::optional<double> analytic_smoothness() const override { return problem_.L; }
  std::optional<double> known_f_star() const override { return problem_.f_star; }

  const SyntheticPLProblem& problem() const { return problem_; }
  const NoiseSpec& noise() const { return noise_; }

 private:
  SyntheticPLProblem problem_;
  NoiseSpec noise_;
};

}  // namespace lsopt
