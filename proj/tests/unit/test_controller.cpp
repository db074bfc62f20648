#include "doctest.h"

#include <set>

#include "maya/controller.hpp"
#include "maya/riccati.hpp"
#include "maya/sysid.hpp"

using namespace maya;
using Eigen::MatrixXd;

namespace {

ArxModelD toy_model() {
  ArxModelD m;
  m.a = Eigen::Vector4d(0.45, 0.1, -0.05, 0.02);
  m.b.resize(3, 4);
  m.b << 9.0, 3.0, 1.0, 0.5,
         -0.12, -0.05, -0.02, 0.0,
         0.15, 0.06, 0.02, 0.01;
  m.bias = -5.0;
  return m;
}

const Eigen::Vector3d kWeights(1.0, 1.0, 1.0);

// Plain value iteration of the Riccati recursion, used to cross-check the doubling solver.
MatrixXd riccati_iterate(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
  MatrixXd P = Q;
  for (int i = 0; i < 200000; ++i) {
    const MatrixXd S = R + B.transpose() * P * B;
    const MatrixXd next = A.transpose() * P * A - A.transpose() * P * B * S.inverse() * B.transpose() * P * A + Q;
    if ((next - P).norm() < 1e-13 * P.norm()) return next;
    P = next;
  }
  return P;
}

}  // namespace

TEST_CASE("DARE solution satisfies the Riccati equation and matches value iteration") {
  MatrixXd A(2, 2), B(2, 1), Q = MatrixXd::Identity(2, 2), R = MatrixXd::Identity(1, 1);
  A << 1.1, 0.3, 0.0, 0.95;
  B << 0.0, 1.0;
  const MatrixXd P = solve_dare<double>(A, B, Q, R);
  const MatrixXd S = R + B.transpose() * P * B;
  const MatrixXd residual = A.transpose() * P * A - A.transpose() * P * B * S.inverse() * B.transpose() * P * A + Q - P;
  CHECK(residual.norm() < 1e-9 * P.norm());
  CHECK((P - riccati_iterate(A, B, Q, R)).norm() < 1e-7 * P.norm());
  const MatrixXd K = S.inverse() * B.transpose() * P * A;
  CHECK((A - B * K).eigenvalues().cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("DARE on the augmented plant matches value iteration") {
  MatrixXd Phi, Gamma;
  detail::design_model(toy_model(), Phi, Gamma);
  CHECK(Phi.rows() == 4 + 9 + 1);
  MatrixXd Q = MatrixXd::Zero(Phi.rows(), Phi.rows());
  Q(0, 0) = 1.0;
  Q(Phi.rows() - 1, Phi.rows() - 1) = 0.01;
  const MatrixXd R = MatrixXd::Identity(3, 3) * 0.1;
  const MatrixXd P = solve_dare<double>(Phi, Gamma, Q, R);
  CHECK((P - riccati_iterate(Phi, Gamma, Q, R)).norm() < 1e-6 * P.norm());
}

TEST_CASE("uncontrollable unstable mode fails synthesis") {
  MatrixXd A(2, 2), B(2, 1), Q = MatrixXd::Identity(2, 2), R = MatrixXd::Identity(1, 1);
  A << 1.2, 0.0, 0.0, 0.5;
  B << 0.0, 1.0;
  CHECK_THROWS_AS(solve_dare<double>(A, B, Q, R), Error);
}

TEST_CASE("synthesized controller has the state-space shape and stabilizes the loop") {
  const auto model = toy_model();
  const auto c = synthesize(model, kWeights, 0.1);
  CHECK(c.state_dim() == 4 + 9);
  CHECK(c.A.rows() == 13);
  CHECK(c.B.cols() == 1);
  CHECK(c.C.rows() == 3);
  CHECK(c.D.rows() == 3);
  CHECK_NOTHROW(c.validate());
  CHECK(closed_loop_spectral_radius(c, model) < 1.0);
}

TEST_CASE("integral action removes steady-state error on the nominal model") {
  const auto model = toy_model();
  const auto c = synthesize(model, kWeights, 0.1);
  const Eigen::VectorXd targets = Eigen::VectorXd::Constant(600, 25.0);
  const auto tr = simulate_linear_loop(c, model, targets);
  CHECK(tr.y(599) == doctest::Approx(25.0).epsilon(1e-6));
  CHECK(steady_state_deviation<double>(tr.y, 25.0) < 1e-6);
}

TEST_CASE("linear_step is the bare state update") {
  const auto c = synthesize(toy_model(), kWeights, 0.1);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(c.state_dim(), -1.0, 1.0);
  const auto s = linear_step(c, x, 2.5);
  CHECK((s.u - (c.C * x + c.D * 2.5)).norm() < 1e-12);
  CHECK((s.x - (c.A * x + c.B * 2.5)).norm() < 1e-12);
}

TEST_CASE("control_step clips the command register and freezes a blocked integrator") {
  const auto c = synthesize(toy_model(), kWeights, 0.1);
  auto st = ControllerState<double>::zero(c);
  // A huge persistent positive error drives every input to its upper limit.
  for (int i = 0; i < 50; ++i) st = control_step(c, st, 1000.0, 0.0).state;
  const Eigen::Vector3d reg = st.x.segment(c.command_register, 3);
  CHECK(((c.operating_point + reg).array() <= c.command_max.array() + 1e-12).all());
  CHECK(((c.operating_point + reg).array() >= c.command_min.array() - 1e-12).all());
  const double held = st.x(c.integrator_index);
  const auto next = control_step(c, st, 1000.0, 0.0);
  CHECK(next.state.x(c.integrator_index) == held);
}

TEST_CASE("control_step rejects non-finite inputs") {
  const auto c = synthesize(toy_model(), kWeights, 0.1);
  const auto st = ControllerState<double>::zero(c);
  CHECK_THROWS_AS(control_step(c, st, std::nan(""), 1.0), Error);
  CHECK_THROWS_AS(control_step(c, st, 1.0, std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("heavier input weight means less use of that input") {
  const auto model = toy_model();
  const auto light = synthesize(model, kWeights, 0.1);
  const auto heavy = synthesize(model, Eigen::Vector3d(100.0, 1.0, 1.0), 0.1);
  CHECK(std::abs(heavy.D(0)) < std::abs(light.D(0)));
}

TEST_CASE("synthesis argument errors") {
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return std::string("none");
  };
  auto unstable = toy_model();
  unstable.a(0) = 1.5;
  CHECK(code([&] { synthesize(unstable, kWeights, 0.1); }) == "unstable_model");
  CHECK(code([&] { synthesize(toy_model(), Eigen::Vector3d(1, 0, 1), 0.1); }) == "invalid_weights");
  CHECK(code([&] { synthesize(toy_model(), kWeights, 0.0); }) == "invalid_bound");
  const auto c = synthesize(toy_model(), kWeights, 0.1);
  CHECK(code([&] { robustness_check(c, toy_model(), 1.5); }) == "invalid_perturbation");
}

TEST_CASE("robustness corners cover all sign patterns") {
  const auto model = toy_model();
  const auto c = synthesize(model, kWeights, 0.1);
  const auto r = robustness_check(c, model, 0.2);
  REQUIRE(r.corners.size() == 8);
  std::set<std::array<int, 3>> seen;
  for (const auto& k : r.corners) seen.insert(k.signs);
  CHECK(seen.size() == 8);
  CHECK(r.all_stable);
  CHECK(r.max_deviation < 0.01);
}

TEST_CASE("float instantiation compiles and agrees") {
  const auto md = toy_model();
  ArxModel<float> mf{md.a.cast<float>(), md.b.cast<float>(), float(md.bias), 0.0f};
  const auto cd = synthesize(md, kWeights, 0.1);
  const auto cf = synthesize(mf, Eigen::Vector3f(1, 1, 1), 0.1f);
  CHECK((cf.D.cast<double>() - cd.D).norm() < 1e-2 * cd.D.norm());
}
