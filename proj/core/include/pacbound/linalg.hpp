#pragma once

#include <Eigen/Dense>

namespace pacbound {

// Induced matrix 2-norm (largest singular value). Closed form for matrices
// with a side of length <= 2, SVD otherwise.
double op_norm(const Eigen::MatrixXd& M);

// Largest eigenvalue modulus. Throws DimensionError for non-square input.
double spectral_radius(const Eigen::MatrixXd& A);

// Solves P = A P A^T + Q for symmetric P via the vectorized linear system,
// then polishes with iterative refinement until the Frobenius residual is
// below rel_tol * ||Q||_F. Throws StabilityError if spectral_radius(A) >= 1,
// NumericError if refinement stalls above the tolerance.
Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& Q,
                                        double rel_tol = 1e-12);

// Symmetric PSD square root; eigenvalues below zero are clipped.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S);

// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues below
// rel_tol * max eigenvalue are treated as zero.
Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& S, double rel_tol = 1e-12);

}  // namespace pacbound
