#include "pacbound/linalg.hpp"

#include <cmath>
#include <string>

#include "pacbound/errors.hpp"

namespace pacbound {

namespace {

// largest eigenvalue of a symmetric 2x2 [[a,b],[b,c]]
double sym2x2_max_eig(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return mean + disc;
}

}  // namespace

double op_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  const Eigen::Index r = M.rows(), c = M.cols();
  if (r == 1 || c == 1) return M.norm();
  if (r == 2 || c == 2) {
    Eigen::Matrix2d G;
    if (r <= c)
      G = (M * M.transpose()).eval();
    else
      G = (M.transpose() * M).eval();
    const double lam = sym2x2_max_eig(G(0, 0), G(0, 1), G(1, 1));
    return std::sqrt(std::max(lam, 0.0));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

double spectral_radius(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols())
    throw DimensionError("spectral_radius: matrix is " + std::to_string(A.rows()) + "x" +
                         std::to_string(A.cols()) + ", expected square");
  const Eigen::Index n = A.rows();
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(A(0, 0));
  if (n == 2) {
    const double tr = A(0, 0) + A(1, 1);
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const double disc = 0.25 * tr * tr - det;
    if (disc < 0.0) return std::sqrt(det);  // conjugate pair, |lambda|^2 = det
    const double s = std::sqrt(disc);
    return std::max(std::abs(0.5 * tr + s), std::abs(0.5 * tr - s));
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                                        double rel_tol) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw DimensionError("solve_discrete_lyapunov: A and Q must be square of equal size");
  const double rho = spectral_radius(A);
  if (rho >= 1.0)
    throw StabilityError("solve_discrete_lyapunov: spectral radius " + std::to_string(rho) +
                         " >= 1");
  const double q_norm = Q.norm();
  if (q_norm == 0.0) return Eigen::MatrixXd::Zero(n, n);

  // (I - A (x) A) vec(P) = vec(Q)
  Eigen::MatrixXd kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      kron.block(i * n, j * n, n, n) = -A(i, j) * A;
  kron += Eigen::MatrixXd::Identity(n * n, n * n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kron);

  Eigen::Map<const Eigen::VectorXd> q_vec(Q.data(), n * n);
  Eigen::VectorXd p_vec = lu.solve(q_vec);
  Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(p_vec.data(), n, n);
  P = 0.5 * (P + P.transpose()).eval();

  for (int iter = 0; iter < 60; ++iter) {
    Eigen::MatrixXd R = Q + A * P * A.transpose() - P;
    if (R.norm() <= rel_tol * q_norm) return P;
    Eigen::Map<const Eigen::VectorXd> r_vec(R.data(), n * n);
    Eigen::VectorXd d_vec = lu.solve(r_vec);
    P += Eigen::Map<Eigen::MatrixXd>(d_vec.data(), n, n);
    P = 0.5 * (P + P.transpose()).eval();
  }
  Eigen::MatrixXd R = Q + A * P * A.transpose() - P;
  if (R.norm() <= rel_tol * q_norm) return P;
  throw NumericError("solve_discrete_lyapunov: refinement stalled at relative residual " +
                     std::to_string(R.norm() / q_norm));
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw DimensionError("psd_sqrt: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& S, double rel_tol) {
  if (S.rows() != S.cols()) throw DimensionError("psd_pinv: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd& d = es.eigenvalues();
  const double cutoff = d.cwiseAbs().maxCoeff() * rel_tol;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d(i) > cutoff) inv(i) = 1.0 / d(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace pacbound
