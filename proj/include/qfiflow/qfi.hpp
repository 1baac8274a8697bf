#pragma once

// Quantum Fisher information for phase estimation with a fixed generator:
// the general spectral formula, the single-qubit Bloch shortcut, the
// analytic per-channel expressions of the dephasing model, and the
// two-qubit collective-generator QFI with its entanglement witness.

#include "qfiflow/linalg.hpp"
#include "qfiflow/nv_model.hpp"

#include <cmath>

namespace qfiflow {

// Eigenvalue pairs with lambda_i + lambda_j below this are skipped in the
// spectral sum (their subspace carries no information).
inline constexpr double qfi_pair_tol = 1e-12;

struct Generator {
  cmatrix matrix;

  explicit Generator(cmatrix m) : matrix(std::move(m)) {
    if (matrix.rows() != matrix.cols()) throw std::invalid_argument("Generator: matrix not square");
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    if (!is_hermitian(matrix, 1e-9 * scale)) throw std::invalid_argument("Generator: matrix not Hermitian");
  }

  // sigma_z / 2: the single-qubit phase generator.
  static Generator half_sigma_z() { return Generator((pauli_z() / 2.0).eval()); }

  // (sigma_z x 1 + 1 x sigma_z) / 2: the collective two-qubit generator.
  static Generator collective_half_sigma_z() {
    const cmatrix id = cmatrix::Identity(2, 2);
    return Generator(((kron(pauli_z(), id) + kron(id, pauli_z())) / 2.0).eval());
  }
};

struct BlochVector {
  double sx = 0.0, sy = 0.0, sz = 0.0;
  double r2() const { return sx * sx + sy * sy + sz * sz; }
};

// Q = 2 sum_{ij} (l_i - l_j)^2 / (l_i + l_j) |<i|G|j>|^2 over eigenpairs of
// rho with l_i + l_j >= qfi_pair_tol.
inline double qfi_general(const DensityMatrix& rho, const Generator& gen) {
  if (gen.matrix.rows() != rho.dim()) throw std::invalid_argument("qfi_general: generator dimension mismatch");
  const EighResult es = eigh(rho.matrix());
  const cmatrix g = es.eigenvectors.adjoint() * gen.matrix * es.eigenvectors;
  double q = 0.0;
  for (Eigen::Index i = 0; i < rho.dim(); ++i)
    for (Eigen::Index j = i + 1; j < rho.dim(); ++j) {
      const double sum = es.eigenvalues(i) + es.eigenvalues(j);
      if (sum < qfi_pair_tol) continue;
      const double diff = es.eigenvalues(i) - es.eigenvalues(j);
      q += 4.0 * diff * diff / sum * std::norm(g(i, j));
    }
  return q;
}

inline BlochVector bloch_vector(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw std::invalid_argument("bloch_vector: state is not a qubit");
  const cmatrix& m = rho.matrix();
  return {2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag(), (m(0, 0) - m(1, 1)).real()};
}

// (1 + s.sigma)/2; r may not exceed 1 beyond roundoff.
inline DensityMatrix state_from_bloch(const BlochVector& b) {
  cmatrix m(2, 2);
  m << (1.0 + b.sz) / 2.0, complexd(b.sx, -b.sy) / 2.0, complexd(b.sx, b.sy) / 2.0, (1.0 - b.sz) / 2.0;
  return DensityMatrix(std::move(m));
}

// Single-qubit QFI for generator sigma_z/2: Q = r^2 - s_z^2.  Equals the
// spectral formula exactly for any qubit state.
inline double qfi_bloch(const BlochVector& b) {
  if (b.r2() > 1.0 + 1e-9) throw std::invalid_argument("qfi_bloch: Bloch vector outside the ball");
  return b.r2() - b.sz * b.sz;
}

// Channel QFI of the dephasing model:
// Q_i(t) = 1 - sin^2(phi) sin^2(pi A 1e-3 t + varphi/2).
inline double qfi_channel_analytic(double t_ns, double phi, double varphi, double a_mhz) {
  const double s_phi = std::sin(phi);
  const double s_arg = std::sin(pi * a_mhz * 1e-3 * t_ns + varphi / 2.0);
  return 1.0 - s_phi * s_phi * s_arg * s_arg;
}

// Q(t) = Q_n Q_c Q_R: exact for this commuting model.
inline double qfi_factorized(double t_ns, const SystemConfig& cfg, const BathConfig& bath) {
  return qfi_channel_analytic(t_ns, cfg.phi1, cfg.varphi1, cfg.a_n_mhz) *
         qfi_channel_analytic(t_ns, cfg.phi2, cfg.varphi2, cfg.a_c_mhz) * bath_envelope(t_ns, bath);
}

struct TwoQubitQfi {
  double value = 0.0;
  bool useful_entanglement = false;  // Q' > 2 witnesses metrologically useful entanglement
};

inline TwoQubitQfi qfi_two_qubit(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw std::invalid_argument("qfi_two_qubit: state is not two qubits");
  const double q = qfi_general(rho, Generator::collective_half_sigma_z());
  return {q, q > 2.0};
}

}  // namespace qfiflow
