#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "maya/common.hpp"
#include "maya/plant.hpp"
#include "maya/workloads.hpp"

namespace maya {

template <typename Scalar = double>
struct ArxModel {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using InputMatrix = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

  Vector a;       // a_1..a_m
  InputMatrix b;  // column j holds b_{j+1}
  Scalar bias{0};
  Scalar residual_rms{0};

  Eigen::Index m() const { return a.size(); }
  Eigen::Index n() const { return b.cols(); }

  Eigen::Matrix<Scalar, 3, 1> static_gain() const {
    return b.rowwise().sum() / (Scalar(1) - a.sum());
  }
};

using ArxModelD = ArxModel<double>;

// Roots of z^m - a_1 z^(m-1) - ... - a_m.
template <typename Scalar>
Scalar spectral_radius(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& a) {
  const Eigen::Index m = a.size();
  if (m == 0) return Scalar(0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> companion =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m, m);
  companion.row(0) = a.transpose();
  if (m > 1) companion.bottomLeftCorner(m - 1, m - 1).setIdentity();
  return companion.eigenvalues().cwiseAbs().maxCoeff();
}

template <typename Scalar>
bool is_stable(const ArxModel<Scalar>& model) {
  return spectral_radius<Scalar>(model.a) < Scalar(1);
}

template <typename Scalar = double>
struct IdDataset {
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> inputs;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> outputs;
  std::string workload;

  Eigen::Index size() const { return outputs.size(); }
};

using IdDatasetD = IdDataset<double>;

// First sample index with a full regressor.
inline Eigen::Index arx_start(Eigen::Index m, Eigen::Index n) { return std::max(m, n - 1); }

// Least-squares fit of y(T) = sum a_i y(T-i) + sum b_j . u(T-j+1) + bias over all datasets.
template <typename Scalar>
ArxModel<Scalar> fit_arx(std::span<const IdDataset<Scalar>> data, Eigen::Index m, Eigen::Index n) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (m < 1 || n < 1) throw Error("invalid_order", "ARX orders must be >= 1");
  const Eigen::Index start = arx_start(m, n);
  const Eigen::Index unknowns = m + 3 * n + 1;

  Eigen::Index rows = 0, samples = 0;
  Eigen::Matrix<Scalar, 3, 1> mean = Eigen::Matrix<Scalar, 3, 1>::Zero();
  for (const auto& d : data) {
    if (d.inputs.cols() != d.outputs.size())
      throw Error("length_mismatch", "dataset inputs and outputs differ in length");
    rows += std::max<Eigen::Index>(0, d.size() - start);
    samples += d.size();
    mean += d.inputs.rowwise().sum();
  }
  if (samples <= m + n + unknowns || rows < unknowns)
    throw Error("insufficient_data", "dataset too short for the requested ARX orders");
  mean /= Scalar(samples);

  Matrix phi(rows, unknowns);
  Vector y(rows);
  Eigen::Index r = 0;
  for (const auto& d : data) {
    for (Eigen::Index t = start; t < d.size(); ++t, ++r) {
      for (Eigen::Index i = 0; i < m; ++i) phi(r, i) = d.outputs(t - 1 - i);
      for (Eigen::Index j = 0; j < n; ++j)
        phi.row(r).segment(m + 3 * j, 3) = (d.inputs.col(t - j) - mean).transpose();
      phi(r, unknowns - 1) = Scalar(1);
      y(r) = d.outputs(t);
    }
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(phi);
  qr.setThreshold(Scalar(1e-10));
  if (qr.rank() < unknowns)
    throw Error("singular_regression",
                "regression matrix is rank deficient; use a richer excitation schedule");
  const Vector theta = qr.solve(y);

  ArxModel<Scalar> model;
  model.a = theta.head(m);
  model.b.resize(3, n);
  for (Eigen::Index j = 0; j < n; ++j) model.b.col(j) = theta.segment(m + 3 * j, 3);
  model.bias = theta(unknowns - 1) - model.b.rowwise().sum().dot(mean);
  model.residual_rms = std::sqrt((phi * theta - y).squaredNorm() / Scalar(rows));
  if (!is_stable(model))
    throw Error("unstable_model", "identified ARX model is unstable (spectral radius " +
                                      std::to_string(double(spectral_radius<Scalar>(model.a))) + ")");
  return model;
}

template <typename Scalar>
ArxModel<Scalar> fit_arx(const IdDataset<Scalar>& data, Eigen::Index m, Eigen::Index n) {
  return fit_arx<Scalar>(std::span<const IdDataset<Scalar>>(&data, 1), m, n);
}

// One-step-ahead predictions for T >= arx_start(m, n), using measured past outputs.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> one_step_predict(const ArxModel<Scalar>& model,
                                                          const IdDataset<Scalar>& data) {
  const Eigen::Index start = arx_start(model.m(), model.n());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(std::max<Eigen::Index>(0, data.size() - start));
  for (Eigen::Index t = start; t < data.size(); ++t) {
    Scalar v = model.bias;
    for (Eigen::Index i = 0; i < model.m(); ++i) v += model.a(i) * data.outputs(t - 1 - i);
    for (Eigen::Index j = 0; j < model.n(); ++j) v += model.b.col(j).dot(data.inputs.col(t - j));
    out(t - start) = v;
  }
  return out;
}

// 1 - ||y - yhat|| / ||y - mean(y)|| over the predicted samples.
template <typename Scalar>
Scalar fit_ratio(const ArxModel<Scalar>& model, const IdDataset<Scalar>& data) {
  const auto pred = one_step_predict(model, data);
  const auto y = data.outputs.tail(pred.size());
  const Scalar denom = (y.array() - y.mean()).matrix().norm();
  return Scalar(1) - (y - pred).norm() / denom;
}

// Free-run simulation. y_init holds y(-1), y(-2), ...; inputs before 0 repeat the first input.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> simulate_arx(
    const ArxModel<Scalar>& model, const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>& inputs,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y_init) {
  if (inputs.cols() == 0) throw Error("empty_input", "simulate_arx needs at least one input");
  const Eigen::Index m = model.m(), n = model.n(), len = inputs.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y(len);
  auto past_y = [&](Eigen::Index t) -> Scalar {
    if (t >= 0) return y(t);
    const Eigen::Index k = -t - 1;
    return k < y_init.size() ? y_init(k) : Scalar(0);
  };
  for (Eigen::Index t = 0; t < len; ++t) {
    Scalar v = model.bias;
    for (Eigen::Index i = 0; i < m; ++i) v += model.a(i) * past_y(t - 1 - i);
    for (Eigen::Index j = 0; j < n; ++j)
      v += model.b.col(j).dot(inputs.col(std::max<Eigen::Index>(0, t - j)));
    y(t) = v;
  }
  return y;
}

// Split at floor(fraction * size); the second part keeps full regressors by overlapping.
template <typename Scalar>
std::pair<IdDataset<Scalar>, IdDataset<Scalar>> split_dataset(const IdDataset<Scalar>& d,
                                                              double fraction) {
  const Eigen::Index cut = static_cast<Eigen::Index>(std::floor(fraction * d.size()));
  IdDataset<Scalar> head{d.inputs.leftCols(cut), d.outputs.head(cut), d.workload};
  IdDataset<Scalar> tail{d.inputs.rightCols(d.size() - cut), d.outputs.tail(d.size() - cut),
                         d.workload};
  return {std::move(head), std::move(tail)};
}

enum class ExcitationKind { Staircase };

struct ExcitationOptions {
  int hold_min = 5;
  int hold_max = 20;
  Eigen::Index m = 4;
  Eigen::Index n = 4;
};

// Drive the plant with a pseudorandom staircase over every actuator grid.
IdDatasetD excite(const MachineProfile& profile, const WorkloadSpec& workload, ExcitationKind kind,
                  int length, std::uint64_t seed, const ExcitationOptions& options = {});

struct IdentificationResult {
  ArxModelD model;
  double holdout_fit = 0.0;
  std::vector<IdDatasetD> datasets;
};

// Excite two built-in workloads, fit on the first 70% of each and score the rest.
IdentificationResult identify_plant(const MachineProfile& profile, std::uint64_t seed,
                                    int length = 4000, Eigen::Index m = 4, Eigen::Index n = 4);

}  // namespace maya
