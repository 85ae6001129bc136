#pragma once

#include <optional>

#include <Eigen/Core>

#include "lsopt/labels.hpp"
#include "lsopt/rng.hpp"

namespace lsopt {

// Which label the per-sample gradient is taken against.
struct LabelMode {
  enum Kind {
    kOneHot,   // the hard training label
    kHatOnly,  // the smoothing distribution alone
    kSmoothed, // the convex combination with weight spec.theta
  };
  Kind kind = kOneHot;
  SmoothingSpec spec;  // source for kHatOnly, source and theta for kSmoothed

  static LabelMode one_hot() { return {kOneHot, {}}; }
  static LabelMode hat_only(SmoothingSource source) {
    LabelMode m;
    m.kind = kHatOnly;
    m.spec.source = source;
    return m;
  }
  static LabelMode smoothed(SmoothingSpec spec) { return {kSmoothed, std::move(spec)}; }
};

// A differentiable objective with an exactly computable value and full
// gradient plus per-draw stochastic gradients. Implementations are immutable
// after construction; parameters are always passed in.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual int dim() const = 0;

  // Exact objective F(w).
  virtual double objective(const Eigen::VectorXd& w) const = 0;

  // Exact full gradient of F at w.
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& w) const = 0;

  // One stochastic gradient draw. index_rng drives sample selection (datasets),
  // noise_rng drives additive noise (synthetic problems); keeping the streams
  // separate lets runs with different label modes share sample paths.
  virtual Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w, const LabelMode& mode,
                                              RngStream& index_rng,
                                              RngStream& noise_rng) const = 0;

  // Steps per epoch: dataset size for finite-sum problems, 1 otherwise.
  virtual int epoch_length() const { return 1; }

  // Analytic gradient-Lipschitz constant when one is known.
  virtual std::optional<double> analytic_smoothness() const { return std::nullopt; }

  // Known optimal value when one exists.
  virtual std::optional<double> known_f_star() const { return std::nullopt; }
};

}  // namespace lsopt
