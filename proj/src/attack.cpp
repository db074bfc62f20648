#include "maya/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maya {

int quantize_level(double v, double qmin, double qmax, int levels) {
  const int level = static_cast<int>(std::floor(levels * (v - qmin) / (qmax - qmin)));
  return std::clamp(level, 0, levels - 1);
}

std::vector<SampleVector> preprocess(std::span<const double> measured, int label, int segment_length,
                                     double qmin, double qmax) {
  if (segment_length <= 0 || segment_length % kBlock != 0)
    throw Error("invalid_segment", "segment_length must be a positive multiple of 5");
  if (!(qmin < qmax)) throw Error("invalid_quantization", "quant_min must be below quant_max");
  const int positions = segment_length / kBlock;
  std::vector<SampleVector> out;
  for (std::size_t start = 0; start + segment_length <= measured.size(); start += segment_length) {
    SampleVector s;
    s.label = label;
    s.features = Eigen::VectorXd::Zero(positions * kQuantLevels);
    for (int p = 0; p < positions; ++p) {
      const auto block = measured.subspan(start + static_cast<std::size_t>(p) * kBlock, kBlock);
      const double mean = std::accumulate(block.begin(), block.end(), 0.0) / kBlock;
      s.features(p * kQuantLevels + quantize_level(mean, qmin, qmax)) = 1.0;
    }
    out.push_back(std::move(s));
  }
  return out;
}

DatasetSplit stratified_split(const std::vector<int>& labels, double train_frac, double validation_frac,
                              std::uint64_t seed) {
  if (train_frac <= 0 || validation_frac < 0 || train_frac + validation_frac >= 1)
    throw Error("invalid_split", "split fractions must leave a non-empty test share");
  Rng rng(seed);
  const int classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  DatasetSplit split;
  for (int c = 0; c < classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::floor(train_frac * idx.size()));
    const auto n_val = static_cast<std::size_t>(std::floor(validation_frac * idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_train ? split.train : k < n_train + n_val ? split.validation : split.test).push_back(idx[k]);
  }
  for (auto* part : {&split.train, &split.validation, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

Eigen::MatrixXd stack_features(const std::vector<SampleVector>& data, std::span<const std::size_t> index) {
  if (index.empty()) return {};
  Eigen::MatrixXd x(data[index[0]].features.size(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t j = 0; j < index.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = data[index[j]].features;
  return x;
}

Eigen::MatrixXd stack_features(const std::vector<SampleVector>& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  return stack_features(data, all);
}

namespace {

double subset_accuracy(const MlpD& model, const std::vector<SampleVector>& data,
                       const std::vector<std::size_t>& index) {
  if (index.empty()) return 0.0;
  const auto pred = model.predict(stack_features(data, index));
  int hits = 0;
  for (std::size_t j = 0; j < index.size(); ++j) hits += pred[j] == data[index[j]].label;
  return static_cast<double>(hits) / static_cast<double>(index.size());
}

std::vector<int> labels_of(const std::vector<SampleVector>& data, const std::vector<std::size_t>& index) {
  std::vector<int> out;
  for (auto i : index) out.push_back(data[i].label);
  return out;
}

}  // namespace

TrainReport train(MlpD model, const std::vector<SampleVector>& data, const TrainOptions& opt) {
  if (data.empty()) throw Error("empty_dataset", "training needs samples");
  if (opt.epochs < 1 || opt.batch_size < 1 || !(opt.learn_rate > 0))
    throw Error("invalid_options", "epochs, batch_size and learn_rate must be positive");
  std::vector<int> labels;
  for (const auto& s : data) {
    if (s.label < 0 || s.label >= model.classes()) throw Error("invalid_label", "label outside the class range");
    labels.push_back(s.label);
  }
  for (int c = 0; c < model.classes(); ++c)
    if (std::find(labels.begin(), labels.end(), c) == labels.end())
      throw Error("missing_class", "dataset has no samples of class " + std::to_string(c));

  TrainReport report;
  report.split = stratified_split(labels, opt.train_frac, opt.validation_frac, derive_seed(opt.seed, 1));
  const auto& tr = report.split.train;
  const Eigen::MatrixXd x_train = stack_features(data, tr);
  const std::vector<int> y_train = labels_of(data, tr);

  Rng rng(derive_seed(opt.seed, 2));
  std::vector<std::size_t> order(tr.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Eigen::MatrixXd> vw(model.weights.size());
  std::vector<Eigen::VectorXd> vb(model.biases.size());
  for (std::size_t l = 0; l < vw.size(); ++l) {
    vw[l] = Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols());
    vb[l] = Eigen::VectorXd::Zero(model.biases[l].size());
  }

  MlpD best = model;
  double best_val = -1.0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(opt.batch_size));
      Eigen::MatrixXd xb(x_train.rows(), static_cast<Eigen::Index>(e - b));
      std::vector<int> yb;
      for (std::size_t k = b; k < e; ++k) {
        xb.col(static_cast<Eigen::Index>(k - b)) = x_train.col(static_cast<Eigen::Index>(order[k]));
        yb.push_back(y_train[order[k]]);
      }
      const auto g = model.backprop(xb, yb);
      if (!std::isfinite(g.loss))
        throw Error("divergence", "training loss is not finite; lower learn_rate");
      for (std::size_t l = 0; l < vw.size(); ++l) {
        vw[l] = opt.momentum * vw[l] - opt.learn_rate * g.weights[l];
        vb[l] = opt.momentum * vb[l] - opt.learn_rate * g.biases[l];
        model.weights[l] += vw[l];
        model.biases[l] += vb[l];
      }
    }
    const double loss = model.loss(x_train, y_train);
    if (!std::isfinite(loss)) throw Error("divergence", "training loss is not finite; lower learn_rate");
    report.epoch_loss.push_back(loss);
    const double val = report.split.validation.empty() ? 0.0 : subset_accuracy(model, data, report.split.validation);
    if (val > best_val) {
      best_val = val;
      best = model;
      report.best_epoch = epoch;
    }
  }
  report.model = std::move(best);
  report.train_accuracy = subset_accuracy(report.model, data, tr);
  report.validation_accuracy = subset_accuracy(report.model, data, report.split.validation);
  report.test_accuracy = subset_accuracy(report.model, data, report.split.test);
  return report;
}

double accuracy(const MlpD& model, const std::vector<SampleVector>& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  return subset_accuracy(model, data, all);
}

Eigen::MatrixXd confusion(const MlpD& model, const std::vector<SampleVector>& data, int classes) {
  if (data.empty()) throw Error("empty_dataset", "confusion needs a non-empty test set");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(classes, classes);
  const auto pred = model.predict(stack_features(data));
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (data[j].label < 0 || data[j].label >= classes || pred[j] >= classes)
      throw Error("invalid_label", "label outside the class range");
    m(data[j].label, pred[j]) += 1.0;
  }
  for (int c = 0; c < classes; ++c) {
    const double total = m.row(c).sum();
    if (total == 0) throw Error("missing_class", "test set has no samples of class " + std::to_string(c));
    m.row(c) /= total;
  }
  return m;
}

double grad_check(const MlpD& model, const SampleVector& sample, double epsilon, int count, std::uint64_t seed) {
  if (epsilon < 1e-6 || epsilon > 1e-3) throw Error("invalid_epsilon", "epsilon must lie in [1e-6, 1e-3]");
  const Eigen::MatrixXd x = sample.features;
  const std::vector<int> y{sample.label};
  const auto g = model.backprop(x, y);
  MlpD grad_view = model;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    grad_view.weights[l] = g.weights[l];
    grad_view.biases[l] = g.biases[l];
  }
  MlpD probe = model;
  Rng rng(seed);
  const Eigen::Index total = model.parameter_count();
  std::uniform_int_distribution<Eigen::Index> pick(0, total - 1);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const Eigen::Index k = pick(rng);
    const double saved = probe.parameter(k);
    probe.parameter(k) = saved + epsilon;
    const double up = probe.loss(x, y);
    probe.parameter(k) = saved - epsilon;
    const double down = probe.loss(x, y);
    probe.parameter(k) = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = grad_view.parameter(k);
    const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace maya
