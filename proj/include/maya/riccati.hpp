#pragma once

#include <Eigen/Dense>

#include "maya/common.hpp"

namespace maya {

// Stabilizing solution of X = A'XA - A'XB (R + B'XB)^-1 B'XA + Q by the structured doubling
// algorithm. Converges quadratically for stabilizable (A, B) and detectable (A, Q).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> solve_dare(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& B,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Q,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& R, int max_iterations = 100,
    Scalar tolerance = Scalar(1e-12)) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix Ak = A;
  Matrix Gk = B * R.ldlt().solve(B.transpose());
  Matrix Hk = Q;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::PartialPivLU<Matrix> W(I + Gk * Hk);
    const Matrix WA = W.solve(Ak);
    const Matrix WG = W.solve(Gk);
    const Matrix H_next = Hk + Ak.transpose() * Hk * WA;
    Gk = Gk + Ak * WG * Ak.transpose();
    Ak = Ak * WA;
    const Scalar change = (H_next - Hk).norm();
    Hk = H_next;
    if (!Hk.allFinite()) break;
    if (change <= tolerance * std::max(Scalar(1), Hk.norm())) {
      Hk = (Hk + Hk.transpose()) / Scalar(2);
      const Matrix K = (R + B.transpose() * Hk * B).ldlt().solve(B.transpose() * Hk * A);
      if ((A - B * K).eigenvalues().cwiseAbs().maxCoeff() >= Scalar(1)) break;
      return Hk;
    }
  }
  throw Error("synthesis_failed",
              "no stabilizing Riccati solution; check stabilizability of the augmented model");
}

}  // namespace maya
