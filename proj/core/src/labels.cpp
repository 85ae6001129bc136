#include "lsopt/labels.hpp"

#include <cmath>

namespace lsopt {

void LabelDistribution::validate() const {
  if (probs.size() < 2) {
    throw InvalidInputError("label distribution needs at least 2 classes");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0)) {
      throw InvalidInputError("label distribution entry " + std::to_string(i) +
                              " is negative or NaN");
    }
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidInputError("label distribution sums to " + std::to_string(sum) +
                            ", expected 1");
  }
}

LabelDistribution LabelDistribution::one_hot(int K, int index) {
  if (K < 2) throw InvalidInputError("one_hot needs K >= 2");
  if (index < 0 || index >= K) throw InvalidInputError("one_hot index out of range");
  LabelDistribution d;
  d.probs = Eigen::VectorXd::Zero(K);
  d.probs[index] = 1.0;
  return d;
}

LabelDistribution LabelDistribution::uniform(int K) {
  if (K < 2) throw InvalidInputError("uniform needs K >= 2");
  LabelDistribution d;
  d.probs = Eigen::VectorXd::Constant(K, 1.0 / K);
  return d;
}

void SmoothingSpec::validate() const {
  if (!(theta >= 0.0 && theta < 1.0)) {
    throw InvalidInputError("smoothing strength theta must lie in [0,1)");
  }
  if (source == SmoothingSource::kFixed) {
    if (!fixed.has_value()) {
      throw InvalidInputError("fixed smoothing source needs a distribution");
    }
    fixed->validate();
  }
}

void Logits::validate() const {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidInputError("logit entry " + std::to_string(i) + " is not finite");
    }
  }
}

LabelDistribution smooth_label(const LabelDistribution& y, const LabelDistribution& y_hat,
                               double theta) {
  if (y.probs.size() != y_hat.probs.size()) {
    throw InvalidInputError("smooth_label: label dimensions differ");
  }
  if (!(theta >= 0.0 && theta < 1.0)) {
    throw InvalidInputError("smooth_label: theta must lie in [0,1)");
  }
  LabelDistribution out;
  out.probs = (1.0 - theta) * y.probs + theta * y_hat.probs;
  return out;
}

Eigen::VectorXd softmax(const Logits& logits) {
  logits.validate();
  const Eigen::VectorXd& z = logits.values;
  double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp();
  return e / e.sum();
}

double cross_entropy(const LabelDistribution& y, const Logits& logits) {
  if (y.probs.size() != logits.values.size()) {
    throw InvalidInputError("cross_entropy: dimension mismatch");
  }
  logits.validate();
  const Eigen::VectorXd& z = logits.values;
  double m = z.maxCoeff();
  double lse = std::log((z.array() - m).exp().sum()) + m;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += y.probs[i] * (lse - z[i]);
  }
  return loss;
}

Eigen::VectorXd cross_entropy_grad_logits(const LabelDistribution& y, const Logits& logits) {
  if (y.probs.size() != logits.values.size()) {
    throw InvalidInputError("cross_entropy_grad_logits: dimension mismatch");
  }
  return softmax(logits) - y.probs;
}

}  // namespace lsopt
