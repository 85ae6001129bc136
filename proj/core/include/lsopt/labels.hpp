#pragma once

#include <optional>

#include <Eigen/Core>

#include "lsopt/errors.hpp"

namespace lsopt {

// A probability vector over K classes. Holds hard labels, smoothing
// distributions, and their convex combinations alike.
struct LabelDistribution {
  Eigen::VectorXd probs;

  int K() const { return static_cast<int>(probs.size()); }

  // Throws InvalidInputError unless entries are nonnegative, sum to 1
  // within 1e-9, and K >= 2.
  void validate() const;

  static LabelDistribution one_hot(int K, int index);
  static LabelDistribution uniform(int K);
};

// Where the smoothing distribution comes from.
enum class SmoothingSource {
  kUniform,  // mass 1/K on every class, the true one included
  kFixed,    // a caller supplied distribution, shared by all examples
  kTeacher,  // per example predictions stored with the dataset
};

struct SmoothingSpec {
  double theta = 0.0;  // mixing weight on the smoothing distribution, in [0,1)
  SmoothingSource source = SmoothingSource::kUniform;
  std::optional<LabelDistribution> fixed;  // required iff source == kFixed

  void validate() const;
};

// Pre-softmax scores of a predictor.
struct Logits {
  Eigen::VectorXd values;

  int K() const { return static_cast<int>(values.size()); }

  // Throws InvalidInputError if any entry is NaN or infinite.
  void validate() const;
};

// Returns (1-theta)*y + theta*y_hat.
LabelDistribution smooth_label(const LabelDistribution& y, const LabelDistribution& y_hat,
                               double theta);

// Numerically stable softmax of the logits.
Eigen::VectorXd softmax(const Logits& logits);

// Cross entropy sum_i -y_i log softmax_i(logits), evaluated through the
// log-sum-exp form so large logits cannot overflow.
double cross_entropy(const LabelDistribution& y, const Logits& logits);

// Gradient of cross_entropy with respect to the logits: softmax(logits) - y.
Eigen::VectorXd cross_entropy_grad_logits(const LabelDistribution& y, const Logits& logits);

}  // namespace lsopt
