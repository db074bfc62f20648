#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "maya/common.hpp"
#include "maya/plant.hpp"
#include "maya/riccati.hpp"
#include "maya/sysid.hpp"

namespace maya {

template <typename Scalar = double>
struct ControllerMatrices {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix A;  // state x state
  Matrix B;  // state x 1
  Matrix C;  // 3 x state
  Matrix D;  // 3 x 1
  Vec3 operating_point = Vec3::Zero();
  Vec3 command_min = Vec3::Zero();
  Vec3 command_max = Vec3::Zero();
  Eigen::Index integrator_index = -1;
  // First of the three entries that store the previous command offset.
  Eigen::Index command_register = -1;

  Eigen::Index state_dim() const { return A.rows(); }

  void validate() const {
    const Eigen::Index k = A.rows();
    if (A.cols() != k || B.rows() != k || B.cols() != 1 || C.rows() != 3 || C.cols() != k ||
        D.rows() != 3 || D.cols() != 1)
      throw Error("invalid_controller", "controller matrix dimensions are inconsistent");
    if (integrator_index >= k || command_register + 3 > k)
      throw Error("invalid_controller", "controller metadata indexes outside the state");
    if ((command_max - command_min).minCoeff() < 0)
      throw Error("invalid_controller", "command_max must be >= command_min");
  }
};

using ControllerMatricesD = ControllerMatrices<double>;

template <typename Scalar = double>
struct ControllerState {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Eigen::Matrix<Scalar, 3, 1> last_command = Eigen::Matrix<Scalar, 3, 1>::Zero();

  static ControllerState zero(const ControllerMatrices<Scalar>& ctrl) {
    return {Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(ctrl.state_dim()), ctrl.operating_point};
  }
};

struct SynthesisOptions {
  // Linearization point; a mid-demand workload draws about the masks' mean level here.
  Eigen::Vector3d operating_point{1.7, 18.0, 10.0};
  Eigen::Vector3d command_min{1.2, 0.0, 0.0};
  Eigen::Vector3d command_max{2.0, 48.0, 100.0};
  // Output range used to turn the fractional deviation bound into watts.
  double output_scale_w = 38.0;
  // Input cost is effort_penalty * weight_i / span_i^2, span_i = command_max_i - command_min_i.
  double effort_penalty = 7e-5;
  // Integrated-error cost relative to the tracking-error cost.
  double integral_ratio = 0.01;

  static SynthesisOptions for_profile(const MachineProfile& p) {
    SynthesisOptions o;
    o.command_min = p.command_min();
    o.command_max = p.command_max();
    const Eigen::Vector3d span = o.command_max - o.command_min;
    o.operating_point = o.command_min + span.cwiseProduct(Eigen::Vector3d(0.625, 0.375, 0.1));
    o.output_scale_w = 0.4 * p.tdp_w;
    return o;
  }
};

namespace detail {

// Augmented design model over [e_k..e_{k-m+1}, u_{k-1}..u_{k-n+1}, q_k] with e = r - y.
template <typename Scalar>
void design_model(const ArxModel<Scalar>& model,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Phi,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Gamma) {
  const Eigen::Index m = model.m(), n = model.n();
  const Eigen::Index dim = m + 3 * (n - 1) + 1;
  Phi.setZero(dim, dim);
  Gamma.setZero(dim, 3);
  Phi.row(0).head(m) = model.a.transpose();
  for (Eigen::Index j = 1; j < n; ++j)
    Phi.block(0, m + 3 * (j - 1), 1, 3) = -model.b.col(j).transpose();
  Gamma.row(0) = -model.b.col(0).transpose();
  for (Eigen::Index i = 1; i < m; ++i) Phi(i, i - 1) = Scalar(1);
  if (n > 1) Gamma.block(m, 0, 3, 3).setIdentity();
  for (Eigen::Index j = 2; j < n; ++j)
    Phi.block(m + 3 * (j - 1), m + 3 * (j - 2), 3, 3).setIdentity();
  Phi(dim - 1, dim - 1) = Scalar(1);
  Phi(dim - 1, 0) = Scalar(1);
}

}  // namespace detail

// LQ servo with integral action, realized in the form x' = A x + B dy, u = C x + D dy.
template <typename Scalar>
ControllerMatrices<Scalar> synthesize(const ArxModel<Scalar>& model,
                                      const Eigen::Matrix<Scalar, 3, 1>& weights,
                                      Scalar deviation_bound, const SynthesisOptions& opt = {}) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (!is_stable(model)) throw Error("unstable_model", "cannot synthesize for an unstable model");
  if ((weights.array() <= 0).any()) throw Error("invalid_weights", "input weights must be positive");
  if (!(deviation_bound > 0)) throw Error("invalid_bound", "deviation_bound must be positive");

  Matrix Phi, Gamma;
  detail::design_model(model, Phi, Gamma);
  const Eigen::Index m = model.m(), n = model.n(), dim = Phi.rows();

  Matrix Q = Matrix::Zero(dim, dim);
  const Scalar qe = Scalar(1) / std::pow(deviation_bound * Scalar(opt.output_scale_w), 2);
  Q(0, 0) = qe;
  Q(dim - 1, dim - 1) = Scalar(opt.integral_ratio) * qe;
  Matrix R = Matrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i) {
    const Scalar span = Scalar(opt.command_max(i) - opt.command_min(i));
    R(i, i) = Scalar(opt.effort_penalty) * weights(i) / (span * span);
  }

  const Matrix P = solve_dare<Scalar>(Phi, Gamma, Q, R);
  const Matrix K = (R + Gamma.transpose() * P * Gamma).ldlt().solve(Gamma.transpose() * P * Phi);

  ControllerMatrices<Scalar> c;
  const Eigen::Index k = dim - 1;
  c.D = -K.col(0);
  c.C = -K.rightCols(k);
  c.A.setZero(k, k);
  c.B.setZero(k, 1);
  // Past errors: x[0] <- e_k, x[i] <- x[i-1].
  if (m > 1) {
    c.B(0, 0) = Scalar(1);
    for (Eigen::Index i = 1; i < m - 1; ++i) c.A(i, i - 1) = Scalar(1);
  }
  const Eigen::Index reg = m - 1;
  if (n > 1) {
    c.A.block(reg, 0, 3, k) = c.C;
    c.B.block(reg, 0, 3, 1) = c.D;
    for (Eigen::Index j = 1; j < n - 1; ++j)
      c.A.block(reg + 3 * j, reg + 3 * (j - 1), 3, 3).setIdentity();
  }
  c.A(k - 1, k - 1) = Scalar(1);
  c.B(k - 1, 0) = Scalar(1);
  c.integrator_index = k - 1;
  c.command_register = n > 1 ? reg : -1;
  c.operating_point = opt.operating_point.template cast<Scalar>();
  c.command_min = opt.command_min.template cast<Scalar>();
  c.command_max = opt.command_max.template cast<Scalar>();
  if (!c.A.allFinite() || !c.C.allFinite() || !c.D.allFinite())
    throw Error("synthesis_failed", "controller gains are not finite");
  return c;
}

template <typename Scalar>
struct LinearStep {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Eigen::Matrix<Scalar, 3, 1> u;
};

// The bare state-space update: u = C x + D dy, x' = A x + B dy.
template <typename Scalar>
LinearStep<Scalar> linear_step(const ControllerMatrices<Scalar>& c,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, Scalar dy) {
  LinearStep<Scalar> out;
  out.u = c.C * x + c.D.col(0) * dy;
  out.x = c.A * x + c.B.col(0) * dy;
  return out;
}

template <typename Scalar>
struct StepResult {
  ControllerState<Scalar> state;
  Eigen::Matrix<Scalar, 3, 1> command;  // absolute, continuous
  Eigen::Matrix<Scalar, 3, 1> delta;    // offset from the operating point
};

// One control period with anti-windup: the stored command register is clipped to the actuator
// range, and the integrator holds when every axis it would push is already saturated that way.
template <typename Scalar>
StepResult<Scalar> control_step(const ControllerMatrices<Scalar>& c,
                                const ControllerState<Scalar>& state, Scalar target,
                                Scalar measured) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  if (!std::isfinite(double(target)) || !std::isfinite(double(measured)))
    throw Error("nonfinite_input", "target and measured power must be finite");
  const Scalar dy = target - measured;
  LinearStep<Scalar> s = linear_step(c, state.x, dy);
  const Vec3 command = c.operating_point + s.u;

  if (c.integrator_index >= 0) {
    const Vec3 push = c.C.col(c.integrator_index) * dy;
    bool blocked = true;
    for (int i = 0; i < 3; ++i) {
      const bool high = command(i) >= c.command_max(i) && push(i) > 0;
      const bool low = command(i) <= c.command_min(i) && push(i) < 0;
      const bool idle = std::abs(double(push(i))) <= 1e-15;
      blocked = blocked && (high || low || idle);
    }
    if (blocked) s.x(c.integrator_index) = state.x(c.integrator_index);
  }
  if (c.command_register >= 0)
    s.x.segment(c.command_register, 3) =
        s.u.cwiseMax(c.command_min - c.operating_point).cwiseMin(c.command_max - c.operating_point);

  if (!s.x.allFinite() || !command.allFinite())
    throw Error("nonfinite_state", "controller state overflowed; reset the state to zero");
  return {{std::move(s.x), command}, command, s.u};
}

// Interconnection of the controller with an ARX plant (bias dropped), driven by e = -y.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> closed_loop_matrix(
    const ControllerMatrices<Scalar>& c, const ArxModel<Scalar>& model) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index m = model.m(), n = model.n();
  const Eigen::Index ps = m + 3 * (n - 1), k = c.state_dim();
  // Plant state [y_{k-1}..y_{k-m}, u_{k-1}..u_{k-n+1}]; measured output is y_{k-1}.
  Matrix F = Matrix::Zero(ps, ps), G = Matrix::Zero(ps, 3), H = Matrix::Zero(1, ps);
  F.row(0).head(m) = model.a.transpose();
  for (Eigen::Index j = 1; j < n; ++j) F.block(0, m + 3 * (j - 1), 1, 3) = model.b.col(j).transpose();
  G.row(0) = model.b.col(0).transpose();
  for (Eigen::Index i = 1; i < m; ++i) F(i, i - 1) = Scalar(1);
  if (n > 1) G.block(m, 0, 3, 3).setIdentity();
  for (Eigen::Index j = 2; j < n; ++j) F.block(m + 3 * (j - 1), m + 3 * (j - 2), 3, 3).setIdentity();
  H(0, 0) = Scalar(1);

  Matrix M(ps + k, ps + k);
  M.topLeftCorner(ps, ps) = F - G * c.D * H;
  M.topRightCorner(ps, k) = G * c.C;
  M.bottomLeftCorner(k, ps) = -c.B * H;
  M.bottomRightCorner(k, k) = c.A;
  return M;
}

template <typename Scalar>
Scalar closed_loop_spectral_radius(const ControllerMatrices<Scalar>& c, const ArxModel<Scalar>& model) {
  return closed_loop_matrix(c, model).eigenvalues().cwiseAbs().maxCoeff();
}

template <typename Scalar>
struct LinearLoopTrace {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y;
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> u;  // absolute commands
};

// Unsaturated loop against the ARX model. History starts at y = y0 with inputs at the
// operating point; the controller sees y_{k-1} when choosing u_k.
template <typename Scalar>
LinearLoopTrace<Scalar> simulate_linear_loop(const ControllerMatrices<Scalar>& c,
                                             const ArxModel<Scalar>& model,
                                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& targets,
                                             Scalar y0 = Scalar(0)) {
  const Eigen::Index m = model.m(), n = model.n(), len = targets.size();
  LinearLoopTrace<Scalar> out;
  out.y.resize(len);
  out.u.resize(3, len);
  auto y_at = [&](Eigen::Index t) { return t >= 0 ? out.y(t) : y0; };
  auto u_at = [&](Eigen::Index t) -> Eigen::Matrix<Scalar, 3, 1> {
    return t >= 0 ? Eigen::Matrix<Scalar, 3, 1>(out.u.col(t)) : c.operating_point;
  };
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(c.state_dim());
  for (Eigen::Index t = 0; t < len; ++t) {
    const auto s = linear_step(c, x, targets(t) - y_at(t - 1));
    x = s.x;
    out.u.col(t) = c.operating_point + s.u;
    Scalar v = model.bias;
    for (Eigen::Index i = 0; i < m; ++i) v += model.a(i) * y_at(t - 1 - i);
    for (Eigen::Index j = 0; j < n; ++j) v += model.b.col(j).dot(u_at(t - j));
    out.y(t) = v;
  }
  return out;
}

template <typename Scalar>
struct CornerResult {
  std::array<int, 3> signs{};
  Scalar spectral_radius{0};
  bool stable = false;
  Scalar steady_state_deviation{0};  // fraction of target
};

template <typename Scalar>
struct RobustnessReport {
  Scalar perturbation{0};
  Scalar target_w{0};
  Scalar nominal_deviation{0};
  Scalar max_deviation{0};
  bool all_stable = true;
  std::vector<CornerResult<Scalar>> corners;
};

template <typename Scalar>
Scalar steady_state_deviation(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y, Scalar target) {
  const Eigen::Index tail = std::max<Eigen::Index>(1, y.size() / 5);
  const Scalar mean = y.tail(tail).mean();
  if (!std::isfinite(double(mean))) return std::numeric_limits<Scalar>::infinity();
  return std::abs(mean - target) / std::abs(target);
}

// Scale each input channel's gains by (1 +/- perturbation) over all 8 sign corners and
// re-simulate a constant-target loop from y = 0.
template <typename Scalar>
RobustnessReport<Scalar> robustness_check(const ControllerMatrices<Scalar>& c,
                                          const ArxModel<Scalar>& model, Scalar perturbation,
                                          Scalar target_w = Scalar(30), Eigen::Index steps = 400) {
  if (!(perturbation >= 0 && perturbation < 1))
    throw Error("invalid_perturbation", "perturbation must lie in [0, 1)");
  RobustnessReport<Scalar> report;
  report.perturbation = perturbation;
  report.target_w = target_w;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> targets =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(steps, target_w);
  report.nominal_deviation = steady_state_deviation(simulate_linear_loop(c, model, targets).y, target_w);
  for (int corner = 0; corner < 8; ++corner) {
    CornerResult<Scalar> r;
    ArxModel<Scalar> p = model;
    for (int i = 0; i < 3; ++i) {
      r.signs[i] = (corner >> i) & 1 ? 1 : -1;
      p.b.row(i) *= Scalar(1) + Scalar(r.signs[i]) * perturbation;
    }
    r.spectral_radius = closed_loop_spectral_radius(c, p);
    r.stable = r.spectral_radius < Scalar(1);
    r.steady_state_deviation = r.stable
                                   ? steady_state_deviation(simulate_linear_loop(c, p, targets).y, target_w)
                                   : std::numeric_limits<Scalar>::infinity();
    report.all_stable = report.all_stable && r.stable;
    report.max_deviation = std::max(report.max_deviation, r.steady_state_deviation);
    report.corners.push_back(r);
  }
  return report;
}

}  // namespace maya
