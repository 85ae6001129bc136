#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lsopt/labels.hpp"
#include "lsopt/oracle.hpp"

namespace lsopt {

// A finite labeled sample. The empirical distribution over these n examples
// plays the role of the data distribution, so the full objective and all
// population moments are exactly computable.
struct Dataset {
  Eigen::MatrixXd X;       // n rows of d features
  Eigen::VectorXi labels;  // n class indices in {0,...,K-1}
  int K = 0;
  std::optional<std::vector<LabelDistribution>> teacher_labels;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
  void validate() const;
};

// n points from K spherical unit-variance Gaussian components whose means
// have norm class_separation; class counts balanced within one; a
// label_noise_rate fraction of labels redrawn uniformly. Deterministic in seed.
Dataset generate_gaussian_mixture(int K, int d, int n, double class_separation,
                                  double label_noise_rate, std::uint64_t seed);

enum class ModelKind { kSoftmaxLinear, kMlpOneHidden };

// A predictor with a flat parameter vector.
// softmax_linear: params = [W (K x d, row major), b (K)], logits = W x + b.
// mlp_one_hidden: params = [W1 (h x d), b1 (h), W2 (K x h), b2 (K)],
//                 logits = W2 tanh(W1 x + b1) + b2.
struct Model {
  ModelKind kind = ModelKind::kSoftmaxLinear;
  int K = 0;
  int d = 0;
  int h = 0;  // hidden width, mlp only
  Eigen::VectorXd params;

  static int param_count(ModelKind kind, int K, int d, int h);
  void validate() const;
};

Logits logits(const Model& model, const Eigen::VectorXd& x);

// Exact mean cross entropy over the dataset with one-hot labels: F(w).
double full_objective(const Model& model, const Dataset& data);

// Exact gradient of full_objective, accumulated in index order.
Eigen::VectorXd full_gradient(const Model& model, const Dataset& data);

// Label used for example `index` under the given mode.
LabelDistribution resolve_label(const Dataset& data, int index, const LabelMode& mode);

// Gradient of the single-example cross entropy against the mode's label.
Eigen::VectorXd stochastic_gradient(const Model& model, const Dataset& data, int index,
                                    const LabelMode& mode);

// Stores model's softmax outputs as the dataset's teacher labels.
void attach_teacher(Dataset& data, const Model& model);

// Fraction of examples whose predicted class (lowest index among maximal
// logits) equals the stored label.
double top1_accuracy(const Model& model, const Dataset& data);

// Fraction of examples whose label is among the k highest logits
// (ties broken toward lower indices).
double topk_accuracy(const Model& model, const Dataset& data, int k);

// Columnar text round trip: header "n d K has_teacher", then one example per
// line (d features, label, K teacher probabilities when present), written
// with 17 significant digits so reloading is exact.
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

// First train_n examples and the remainder, teacher labels included.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, int train_n);

// Finite-sum oracle over (dataset, model kind). Parameters are supplied per
// call; stochastic draws pick an example uniformly from index_rng.
class ClassificationOracle : public Oracle {
 public:
  ClassificationOracle(Dataset data, ModelKind kind, int hidden = 0);

  int dim() const override;
  double objective(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w, const LabelMode& mode,
                                      RngStream& index_rng, RngStream& noise_rng) const override;
  int epoch_length() const override { return data_.n(); }

  // Gradient for a specific example, used by the exact population estimators.
  Eigen::VectorXd example_gradient(const Eigen::VectorXd& w, int index,
                                   const LabelMode& mode) const;

  Model model_at(const Eigen::VectorXd& w) const;
  const Dataset& data() const { return data_; }
  ModelKind kind() const { return kind_; }
  int hidden() const { return hidden_; }

 private:
  Dataset data_;
  ModelKind kind_;
  int hidden_;
};

}  // namespace lsopt
