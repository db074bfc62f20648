#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "maya/common.hpp"

namespace maya {

struct SampleVector {
  Eigen::VectorXd features;
  int label = 0;
};

// Fully connected net: ReLU hidden layers, log-softmax output. Samples are columns.
template <typename Scalar = double>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    Scalar loss{0};
  };

  Mlp() = default;

  Mlp(std::vector<int> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw Error("invalid_network", "network needs at least input and output sizes");
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      if (in < 1 || out < 1) throw Error("invalid_network", "layer sizes must be positive");
      std::normal_distribution<double> init(0.0, std::sqrt(2.0 / in));
      Matrix w(out, in);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = Scalar(init(rng));
      weights.push_back(std::move(w));
      biases.push_back(Vector::Zero(out));
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int classes() const { return sizes_.back(); }
  int inputs() const { return sizes_.front(); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  // Flat view: per layer, weights in column-major order then biases.
  Scalar& parameter(Eigen::Index k) { return locate(*this, k); }
  Scalar parameter(Eigen::Index k) const { return locate(const_cast<Mlp&>(*this), k); }

  Matrix log_probs(const Matrix& x) const {
    std::vector<Matrix> z, a;
    return forward(x, z, a);
  }

  Vector log_probs(const Vector& x) const { return log_probs(Matrix(x)).col(0); }

  int predict(const Vector& x) const {
    Eigen::Index best;
    log_probs(x).maxCoeff(&best);
    return static_cast<int>(best);
  }

  std::vector<int> predict(const Matrix& x) const {
    const Matrix lp = log_probs(x);
    std::vector<int> out(lp.cols());
    for (Eigen::Index j = 0; j < lp.cols(); ++j) {
      Eigen::Index best;
      lp.col(j).maxCoeff(&best);
      out[j] = static_cast<int>(best);
    }
    return out;
  }

  // Mean negative log-likelihood.
  Scalar loss(const Matrix& x, std::span<const int> labels) const {
    const Matrix lp = log_probs(x);
    Scalar s{0};
    for (Eigen::Index j = 0; j < lp.cols(); ++j) s -= lp(labels[j], j);
    return s / Scalar(lp.cols());
  }

  Gradients backprop(const Matrix& x, std::span<const int> labels) const {
    std::vector<Matrix> z, a;
    const Matrix lp = forward(x, z, a);
    const Scalar batch = Scalar(x.cols());
    Gradients g;
    g.weights.resize(weights.size());
    g.biases.resize(biases.size());
    Matrix delta = lp.array().exp().matrix();
    for (Eigen::Index j = 0; j < delta.cols(); ++j) {
      g.loss -= lp(labels[j], j);
      delta(labels[j], j) -= Scalar(1);
    }
    g.loss /= batch;
    delta /= batch;
    for (std::size_t l = weights.size(); l-- > 0;) {
      g.weights[l] = delta * a[l].transpose();
      g.biases[l] = delta.rowwise().sum();
      if (l > 0) {
        Matrix back = weights[l].transpose() * delta;
        delta = back.cwiseProduct((z[l - 1].array() > Scalar(0)).matrix().template cast<Scalar>());
      }
    }
    return g;
  }

  std::vector<Matrix> weights;
  std::vector<Vector> biases;

 private:
  static Scalar& locate(Mlp& net, Eigen::Index k) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      if (k < net.weights[l].size()) return net.weights[l].data()[k];
      k -= net.weights[l].size();
      if (k < net.biases[l].size()) return net.biases[l](k);
      k -= net.biases[l].size();
    }
    throw Error("out_of_range", "parameter index out of range");
  }

  // z[l] = pre-activation of layer l, a[l] = input to layer l.
  Matrix forward(const Matrix& x, std::vector<Matrix>& z, std::vector<Matrix>& a) const {
    if (x.rows() != inputs()) throw Error("shape_mismatch", "input size does not match the network");
    a.assign(1, x);
    z.clear();
    for (std::size_t l = 0; l < weights.size(); ++l) {
      z.push_back((weights[l] * a.back()).colwise() + biases[l]);
      if (l + 1 < weights.size()) a.push_back(z.back().cwiseMax(Scalar(0)));
    }
    Matrix out = z.back();
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const Scalar mx = out.col(j).maxCoeff();
      const Scalar lse = mx + std::log((out.col(j).array() - mx).exp().sum());
      out.col(j).array() -= lse;
    }
    return out;
  }

  std::vector<int> sizes_;
};

using MlpD = Mlp<double>;

// d loss / d logits for one sample: softmax(logits) - one_hot(label).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> output_gradient(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& logits,
                                                         int label) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p = (logits.array() - logits.maxCoeff()).exp().matrix();
  p /= p.sum();
  p(label) -= Scalar(1);
  return p;
}

struct TrainOptions {
  int epochs = 40;
  double learn_rate = 0.05;
  int batch_size = 32;
  double momentum = 0.0;
  std::uint64_t seed = 1;
  double train_frac = 0.6;
  double validation_frac = 0.2;
};

struct DatasetSplit {
  std::vector<std::size_t> train, validation, test;
};

// Per-class shuffled split; each class contributes floor(frac * count) to train and validation.
DatasetSplit stratified_split(const std::vector<int>& labels, double train_frac, double validation_frac,
                              std::uint64_t seed);

struct TrainReport {
  MlpD model;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  int best_epoch = 0;
  std::vector<double> epoch_loss;  // full training-split loss after each epoch
  DatasetSplit split;
};

// Mini-batch gradient descent on the NLL; keeps the epoch with the best validation accuracy.
TrainReport train(MlpD model, const std::vector<SampleVector>& data, const TrainOptions& options);

Eigen::MatrixXd stack_features(const std::vector<SampleVector>& data, std::span<const std::size_t> index);
Eigen::MatrixXd stack_features(const std::vector<SampleVector>& data);

double accuracy(const MlpD& model, const std::vector<SampleVector>& data);

// Row-normalized class x class fractions; rows are true labels.
Eigen::MatrixXd confusion(const MlpD& model, const std::vector<SampleVector>& data, int classes);

// Max relative error between backprop and central differences over `count` random parameters.
double grad_check(const MlpD& model, const SampleVector& sample, double epsilon, int count = 100,
                  std::uint64_t seed = 7);

}  // namespace maya
