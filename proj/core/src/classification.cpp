#include "lsopt/classification.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lsopt/errors.hpp"
#include "lsopt/rng.hpp"

namespace lsopt {

void Dataset::validate() const {
  if (n() < 1) throw InvalidInputError("dataset is empty");
  if (K < 2) throw InvalidInputError("dataset needs K >= 2");
  if (labels.size() != n()) throw InvalidInputError("label count does not match examples");
  for (int i = 0; i < n(); ++i) {
    if (labels[i] < 0 || labels[i] >= K) {
      throw InvalidInputError("label " + std::to_string(i) + " out of range");
    }
  }
  if (teacher_labels.has_value()) {
    if (static_cast<int>(teacher_labels->size()) != n()) {
      throw InvalidInputError("teacher label count does not match examples");
    }
    for (const auto& t : *teacher_labels) {
      if (t.K() != K) throw InvalidInputError("teacher label class count mismatch");
      t.validate();
    }
  }
}

Dataset generate_gaussian_mixture(int K, int d, int n, double class_separation,
                                  double label_noise_rate, std::uint64_t seed) {
  if (K < 2) throw InvalidInputError("generate_gaussian_mixture needs K >= 2");
  if (d < 1) throw InvalidInputError("generate_gaussian_mixture needs d >= 1");
  if (n < K) throw InvalidInputError("generate_gaussian_mixture needs n >= K");
  if (!(class_separation >= 0.0)) throw InvalidInputError("class_separation must be >= 0");
  if (!(label_noise_rate >= 0.0 && label_noise_rate < 1.0)) {
    throw InvalidInputError("label_noise_rate must lie in [0,1)");
  }

  RngStream means_rng(seed, 0);
  RngStream points_rng(seed, 1);
  RngStream shuffle_rng(seed, 2);
  RngStream noise_rng(seed, 3);

  // Component means: signed coordinate axes when they suffice, random
  // directions otherwise.
  Eigen::MatrixXd means(K, d);
  if (K <= 2 * d) {
    means.setZero();
    for (int k = 0; k < K; ++k) {
      means(k, k / 2) = (k % 2 == 0 ? 1.0 : -1.0) * class_separation;
    }
  } else {
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd dir = means_rng.normal_vector(d);
      double norm = dir.norm();
      while (norm < 1e-12) {
        dir = means_rng.normal_vector(d);
        norm = dir.norm();
      }
      means.row(k) = (class_separation / norm) * dir.transpose();
    }
  }

  // Balanced component assignment, then a uniform shuffle.
  std::vector<int> comp(n);
  int base = n / K, rem = n % K, pos = 0;
  for (int k = 0; k < K; ++k) {
    int count = base + (k < rem ? 1 : 0);
    for (int c = 0; c < count; ++c) comp[pos++] = k;
  }
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(shuffle_rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(comp[i], comp[j]);
  }

  Dataset data;
  data.K = K;
  data.X.resize(n, d);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    data.X.row(i) = means.row(comp[i]) + points_rng.normal_vector(d).transpose();
    data.labels[i] = comp[i];
  }
  for (int i = 0; i < n; ++i) {
    double u = noise_rng.uniform();
    if (u < label_noise_rate) {
      data.labels[i] = static_cast<int>(noise_rng.uniform_int(K));
    }
  }
  return data;
}

int Model::param_count(ModelKind kind, int K, int d, int h) {
  switch (kind) {
    case ModelKind::kSoftmaxLinear:
      return K * (d + 1);
    case ModelKind::kMlpOneHidden:
      return h * (d + 1) + K * (h + 1);
  }
  throw InvalidInputError("unknown model kind");
}

void Model::validate() const {
  if (K < 2 || d < 1) throw InvalidInputError("model needs K >= 2 and d >= 1");
  if (kind == ModelKind::kMlpOneHidden && h < 1) {
    throw InvalidInputError("mlp model needs hidden width >= 1");
  }
  if (params.size() != param_count(kind, K, d, h)) {
    throw InvalidInputError("parameter count does not match model kind");
  }
}

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

Logits logits(const Model& model, const Eigen::VectorXd& x) {
  if (x.size() != model.d) throw InvalidInputError("feature dimension does not match model");
  Logits out;
  switch (model.kind) {
    case ModelKind::kSoftmaxLinear: {
      RowMajorMap W(model.params.data(), model.K, model.d);
      auto b = model.params.segment(model.K * model.d, model.K);
      out.values = W * x + b;
      return out;
    }
    case ModelKind::kMlpOneHidden: {
      const int h = model.h;
      RowMajorMap W1(model.params.data(), h, model.d);
      auto b1 = model.params.segment(h * model.d, h);
      RowMajorMap W2(model.params.data() + h * (model.d + 1), model.K, h);
      auto b2 = model.params.segment(h * (model.d + 1) + model.K * h, model.K);
      Eigen::VectorXd a = (W1 * x + b1).array().tanh();
      out.values = W2 * a + b2;
      return out;
    }
  }
  throw InvalidInputError("unknown model kind");
}

namespace {

// Gradient of cross_entropy(y, logits(model, x)) with respect to the params.
Eigen::VectorXd example_grad(const Model& model, const Eigen::VectorXd& x,
                             const LabelDistribution& y) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.params.size());
  switch (model.kind) {
    case ModelKind::kSoftmaxLinear: {
      Logits z = logits(model, x);
      Eigen::VectorXd gz = cross_entropy_grad_logits(y, z);
      RowMajorMutMap dW(grad.data(), model.K, model.d);
      dW = gz * x.transpose();
      grad.segment(model.K * model.d, model.K) = gz;
      return grad;
    }
    case ModelKind::kMlpOneHidden: {
      const int h = model.h;
      RowMajorMap W1(model.params.data(), h, model.d);
      auto b1 = model.params.segment(h * model.d, h);
      RowMajorMap W2(model.params.data() + h * (model.d + 1), model.K, h);
      auto b2 = model.params.segment(h * (model.d + 1) + model.K * h, model.K);
      Eigen::VectorXd a = (W1 * x + b1).array().tanh();
      Logits z;
      z.values = W2 * a + b2;
      Eigen::VectorXd gz = cross_entropy_grad_logits(y, z);
      Eigen::VectorXd da = W2.transpose() * gz;
      Eigen::VectorXd dpre = da.array() * (1.0 - a.array().square());
      RowMajorMutMap dW1(grad.data(), h, model.d);
      dW1 = dpre * x.transpose();
      grad.segment(h * model.d, h) = dpre;
      RowMajorMutMap dW2(grad.data() + h * (model.d + 1), model.K, h);
      dW2 = gz * a.transpose();
      grad.segment(h * (model.d + 1) + model.K * h, model.K) = gz;
      return grad;
    }
  }
  throw InvalidInputError("unknown model kind");
}

}  // namespace

double full_objective(const Model& model, const Dataset& data) {
  if (data.n() < 1) throw InvalidInputError("dataset is empty");
  if (model.K != data.K || model.d != data.d()) {
    throw InvalidInputError("model shape does not match dataset");
  }
  double sum = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    sum += cross_entropy(LabelDistribution::one_hot(data.K, data.labels[i]),
                         logits(model, data.X.row(i).transpose()));
  }
  return sum / data.n();
}

Eigen::VectorXd full_gradient(const Model& model, const Dataset& data) {
  if (data.n() < 1) throw InvalidInputError("dataset is empty");
  if (model.K != data.K || model.d != data.d()) {
    throw InvalidInputError("model shape does not match dataset");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.params.size());
  for (int i = 0; i < data.n(); ++i) {
    sum += example_grad(model, data.X.row(i).transpose(),
                        LabelDistribution::one_hot(data.K, data.labels[i]));
  }
  return sum / data.n();
}

LabelDistribution resolve_label(const Dataset& data, int index, const LabelMode& mode) {
  if (index < 0 || index >= data.n()) throw InvalidInputError("example index out of range");
  LabelDistribution y = LabelDistribution::one_hot(data.K, data.labels[index]);
  if (mode.kind == LabelMode::kOneHot) return y;

  LabelDistribution hat;
  switch (mode.spec.source) {
    case SmoothingSource::kUniform:
      hat = LabelDistribution::uniform(data.K);
      break;
    case SmoothingSource::kFixed:
      if (!mode.spec.fixed.has_value()) {
        throw ConfigError("fixed smoothing source without a distribution");
      }
      hat = *mode.spec.fixed;
      if (hat.K() != data.K) throw InvalidInputError("fixed distribution class count mismatch");
      break;
    case SmoothingSource::kTeacher:
      if (!data.teacher_labels.has_value()) {
        throw ConfigError("teacher labels requested but none are attached to the dataset");
      }
      hat = (*data.teacher_labels)[index];
      break;
  }
  if (mode.kind == LabelMode::kHatOnly) return hat;
  return smooth_label(y, hat, mode.spec.theta);
}

Eigen::VectorXd stochastic_gradient(const Model& model, const Dataset& data, int index,
                                    const LabelMode& mode) {
  if (model.K != data.K || model.d != data.d()) {
    throw InvalidInputError("model shape does not match dataset");
  }
  return example_grad(model, data.X.row(index).transpose(), resolve_label(data, index, mode));
}

void attach_teacher(Dataset& data, const Model& model) {
  if (model.K != data.K || model.d != data.d()) {
    throw InvalidInputError("teacher model shape does not match dataset");
  }
  std::vector<LabelDistribution> teacher;
  teacher.reserve(data.n());
  for (int i = 0; i < data.n(); ++i) {
    LabelDistribution t;
    t.probs = softmax(logits(model, data.X.row(i).transpose()));
    teacher.push_back(std::move(t));
  }
  data.teacher_labels = std::move(teacher);
}

double top1_accuracy(const Model& model, const Dataset& data) {
  int correct = 0;
  for (int i = 0; i < data.n(); ++i) {
    Logits z = logits(model, data.X.row(i).transpose());
    int best = 0;
    for (int k = 1; k < data.K; ++k) {
      if (z.values[k] > z.values[best]) best = k;
    }
    if (best == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / data.n();
}

double topk_accuracy(const Model& model, const Dataset& data, int k) {
  if (k < 1 || k > data.K) throw InvalidInputError("topk_accuracy needs 1 <= k <= K");
  int correct = 0;
  for (int i = 0; i < data.n(); ++i) {
    Logits z = logits(model, data.X.row(i).transpose());
    int label = data.labels[i];
    int rank = 0;
    for (int j = 0; j < data.K; ++j) {
      if (z.values[j] > z.values[label] || (z.values[j] == z.values[label] && j < label)) {
        ++rank;
      }
    }
    if (rank < k) ++correct;
  }
  return static_cast<double>(correct) / data.n();
}

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& data) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot open '" + path + "' for writing");
  bool has_teacher = data.teacher_labels.has_value();
  out << data.n() << ' ' << data.d() << ' ' << data.K << ' ' << (has_teacher ? 1 : 0) << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.d(); ++j) {
      if (j) out << ' ';
      out << format_real(data.X(i, j));
    }
    out << ' ' << data.labels[i];
    if (has_teacher) {
      const auto& t = (*data.teacher_labels)[i];
      for (int c = 0; c < data.K; ++c) out << ' ' << format_real(t.probs[c]);
    }
    out << '\n';
  }
  if (!out) throw InvalidInputError("failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1, "header");
  std::istringstream header(line);
  int n = 0, d = 0, K = 0, has_teacher = 0;
  if (!(header >> n >> d >> K >> has_teacher)) {
    throw ParseError("header must be 'n d K has_teacher'", 1, "header");
  }
  if (n < 1 || d < 1 || K < 2 || (has_teacher != 0 && has_teacher != 1)) {
    throw ParseError("header values out of range", 1, "header");
  }
  Dataset data;
  data.K = K;
  data.X.resize(n, d);
  data.labels.resize(n);
  std::vector<LabelDistribution> teacher;
  if (has_teacher) teacher.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError("expected " + std::to_string(n) + " example lines", i + 2, "example");
    }
    std::istringstream row(line);
    for (int j = 0; j < d; ++j) {
      if (!(row >> data.X(i, j))) {
        throw ParseError("bad feature value", i + 2, "feature " + std::to_string(j));
      }
    }
    if (!(row >> data.labels[i])) throw ParseError("bad label", i + 2, "label");
    if (has_teacher) {
      LabelDistribution t;
      t.probs.resize(K);
      for (int c = 0; c < K; ++c) {
        if (!(row >> t.probs[c])) {
          throw ParseError("bad teacher probability", i + 2, "teacher " + std::to_string(c));
        }
      }
      teacher.push_back(std::move(t));
    }
    std::string extra;
    if (row >> extra) throw ParseError("unexpected trailing tokens", i + 2, "example");
  }
  if (has_teacher) data.teacher_labels = std::move(teacher);
  data.validate();
  return data;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, int train_n) {
  if (train_n < 1 || train_n >= data.n()) {
    throw InvalidInputError("split_dataset needs 1 <= train_n < n");
  }
  auto take = [&](int start, int count) {
    Dataset out;
    out.K = data.K;
    out.X = data.X.middleRows(start, count);
    out.labels = data.labels.segment(start, count);
    if (data.teacher_labels.has_value()) {
      out.teacher_labels = std::vector<LabelDistribution>(
          data.teacher_labels->begin() + start, data.teacher_labels->begin() + start + count);
    }
    return out;
  };
  return {take(0, train_n), take(train_n, data.n() - train_n)};
}

ClassificationOracle::ClassificationOracle(Dataset data, ModelKind kind, int hidden)
    : data_(std::move(data)), kind_(kind), hidden_(hidden) {
  data_.validate();
  if (kind_ == ModelKind::kMlpOneHidden && hidden_ < 1) {
    throw InvalidInputError("mlp oracle needs hidden width >= 1");
  }
}

int ClassificationOracle::dim() const {
  return Model::param_count(kind_, data_.K, data_.d(), hidden_);
}

Model ClassificationOracle::model_at(const Eigen::VectorXd& w) const {
  if (w.size() != dim()) throw InvalidInputError("parameter dimension does not match oracle");
  Model m;
  m.kind = kind_;
  m.K = data_.K;
  m.d = data_.d();
  m.h = hidden_;
  m.params = w;
  return m;
}

double ClassificationOracle::objective(const Eigen::VectorXd& w) const {
  return full_objective(model_at(w), data_);
}

Eigen::VectorXd ClassificationOracle::gradient(const Eigen::VectorXd& w) const {
  return full_gradient(model_at(w), data_);
}

Eigen::VectorXd ClassificationOracle::stochastic_gradient(const Eigen::VectorXd& w,
                                                          const LabelMode& mode,
                                                          RngStream& index_rng,
                                                          RngStream& /*noise_rng*/) const {
  int i = static_cast<int>(index_rng.uniform_int(data_.n()));
  return lsopt::stochastic_gradient(model_at(w), data_, i, mode);
}

Eigen::VectorXd ClassificationOracle::example_gradient(const Eigen::VectorXd& w, int index,
                                                       const LabelMode& mode) const {
  return lsopt::stochastic_gradient(model_at(w), data_, index, mode);
}

}  // namespace lsopt
