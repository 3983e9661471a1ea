#pragma once

#include "pacbound/system.hpp"

namespace pacbound {

// The bundled two-state demo generator with scalar output and scalar input,
// innovation gain K and identity feedthrough.
inline Generator reference_generator() {
  Generator gen;
  gen.sys.A.resize(2, 2);
  gen.sys.A << 0.16, -0.3, 0.0, -0.05;
  gen.sys.B.resize(2, 2);
  gen.sys.B << 0.33, -0.75, 0.0, -0.09;
  gen.sys.C.resize(2, 2);
  gen.sys.C << 1.0, 1.0, 0.0, 1.0;
  gen.sys.D = Eigen::MatrixXd::Identity(2, 2);
  gen.n_y = 1;
  gen.n_u = 1;
  return gen;
}

inline Eigen::MatrixXd reference_Q_e() {
  Eigen::MatrixXd Q(2, 2);
  Q << 0.054, 0.018, 0.018, 0.248;
  return Q;
}

inline NoiseSpec reference_noise_gaussian() {
  NoiseSpec spec;
  spec.kind = NoiseKind::gaussian;
  spec.Q_e = reference_Q_e();
  return spec;
}

// Componentwise truncation at 1; Q_e is the pre-truncation covariance by
// default, so the achieved second moment is close to but below Q_e.
inline NoiseSpec reference_noise_bounded() {
  NoiseSpec spec;
  spec.kind = NoiseKind::truncated_gaussian;
  spec.Q_e = reference_Q_e();
  spec.c_e = 1.0;
  return spec;
}

}  // namespace pacbound
