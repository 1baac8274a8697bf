#pragma once

// Photon-count state reconstruction.  Single-qubit readout follows the
// pulsed scheme: per basis the population is mapped onto the bright
// (m_s = 0) level and the count rate interpolates between the L_1 (dark)
// and L_0 (bright) references,
//   s_x = -(2 L_x - L_0 - L_1)/(L_0 - L_1),
//   s_y = +(2 L_y - L_0 - L_1)/(L_0 - L_1),
//   s_z = +(2 L_z - L_0 - L_1)/(L_0 - L_1),
// i.e. the x readout pulse maps p0 = (1 - s_x)/2 and the y/z pulses map
// p0 = (1 + s)/2.  Two-qubit states use the 15 Pauli expectations with the
// same count model, linear inversion and a maximum-likelihood projection.

#include "qfiflow/linalg.hpp"
#include "qfiflow/qfi.hpp"
#include "qfiflow/rng.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace qfiflow {

struct PhotonCounts {
  double l_x = 0.0, l_y = 0.0, l_z = 0.0;
  double l_0 = 0.0, l_1 = 0.0;  // bright / dark references
};

struct MeasurementModel {
  long long shots = 400000;
  double bright_rate = 0.15;  // mean photons per shot, m_s = 0
  double dark_rate = 0.105;   // mean photons per shot, m_s = -1
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (shots < 1) throw std::invalid_argument("MeasurementModel: shots must be >= 1");
    if (!(bright_rate > dark_rate) || dark_rate < 0.0)
      throw std::invalid_argument("MeasurementModel: need bright_rate > dark_rate >= 0");
  }

  double expected(double p0) const {
    return static_cast<double>(shots) * (dark_rate + (bright_rate - dark_rate) * p0);
  }
};

inline PhotonCounts expected_counts(const DensityMatrix& rho, const MeasurementModel& model) {
  model.validate();
  const BlochVector b = bloch_vector(rho);
  PhotonCounts counts;
  counts.l_x = model.expected((1.0 - b.sx) / 2.0);
  counts.l_y = model.expected((1.0 + b.sy) / 2.0);
  counts.l_z = model.expected((1.0 + b.sz) / 2.0);
  counts.l_0 = model.expected(1.0);
  counts.l_1 = model.expected(0.0);
  return counts;
}

// Poisson shot noise on every record; draw order is fixed (x, y, z, 0, 1)
// so a seed pins the dataset.
inline PhotonCounts simulate_counts(const DensityMatrix& rho, const MeasurementModel& model) {
  const PhotonCounts mean = expected_counts(rho, model);
  Rng rng(model.rng_seed);
  PhotonCounts counts;
  counts.l_x = static_cast<double>(rng.poisson(mean.l_x));
  counts.l_y = static_cast<double>(rng.poisson(mean.l_y));
  counts.l_z = static_cast<double>(rng.poisson(mean.l_z));
  counts.l_0 = static_cast<double>(rng.poisson(mean.l_0));
  counts.l_1 = static_cast<double>(rng.poisson(mean.l_1));
  return counts;
}

inline BlochVector bloch_from_counts(const PhotonCounts& counts) {
  const double span = counts.l_0 - counts.l_1;
  if (!(span > 0.0)) throw std::invalid_argument("bloch_from_counts: degenerate contrast (l_0 <= l_1)");
  return {-(2.0 * counts.l_x - counts.l_0 - counts.l_1) / span,
          (2.0 * counts.l_y - counts.l_0 - counts.l_1) / span,
          (2.0 * counts.l_z - counts.l_0 - counts.l_1) / span};
}

// Maximum-likelihood projection onto physical states: zero out negative
// eigenvalues and spread the trace deficit uniformly over the strictly
// positive ones, repeating until the spectrum is nonnegative.
inline DensityMatrix mle_project(const cmatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("mle_project: matrix not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (!is_hermitian(m, 1e-9 * scale)) throw std::invalid_argument("mle_project: matrix not Hermitian");
  if (std::abs(m.trace().real() - 1.0) > 1e-9)
    throw std::invalid_argument("mle_project: matrix is not trace-normalized");

  EighResult es = eigh(m);
  rvector& lam = es.eigenvalues;
  for (Eigen::Index pass = 0; pass <= lam.size(); ++pass) {
    bool negative = false;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam(i) < 0.0) {
        lam(i) = 0.0;
        negative = true;
      }
    if (!negative && pass > 0) break;
    double sum = 0.0;
    Eigen::Index npos = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam(i) > 0.0) {
        sum += lam(i);
        ++npos;
      }
    if (npos == 0) throw std::runtime_error("mle_project: spectrum collapsed");
    const double shift = (1.0 - sum) / static_cast<double>(npos);
    bool pushed_negative = false;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam(i) > 0.0) {
        lam(i) += shift;
        pushed_negative = pushed_negative || lam(i) < 0.0;
      }
    if (!pushed_negative) break;
  }
  cmatrix out = es.eigenvectors * lam.asDiagonal() * es.eigenvectors.adjoint();
  return DensityMatrix(((out + out.adjoint()) / 2.0).eval());
}

// Counts -> Bloch -> nearest physical state.  Shot noise can push the raw
// Bloch vector outside the ball, so the projection, not the raw inversion,
// is what downstream QFI sees.
inline DensityMatrix reconstruct_qubit(const PhotonCounts& counts) {
  const BlochVector b = bloch_from_counts(counts);
  cmatrix m(2, 2);
  m << (1.0 + b.sz) / 2.0, complexd(b.sx, -b.sy) / 2.0, complexd(b.sx, b.sy) / 2.0, (1.0 - b.sz) / 2.0;
  return mle_project(m);
}

namespace detail {

inline const std::array<cmatrix, 4>& pauli_basis() {
  static const std::array<cmatrix, 4> basis = {cmatrix::Identity(2, 2), pauli_x(), pauli_y(), pauli_z()};
  return basis;
}

}  // namespace detail

// Full two-qubit tomography: references L_0/L_1 drawn once, then one
// Poisson count record per Pauli observable (IX, IY, IZ, XI, ..., ZZ in
// that order), linear inversion rho = (1 + sum <P> P)/4, MLE projection.
inline DensityMatrix two_qubit_tomography(const DensityMatrix& rho, const MeasurementModel& model) {
  if (rho.dim() != 4) throw std::invalid_argument("two_qubit_tomography: state is not two qubits");
  model.validate();
  Rng rng(model.rng_seed);
  const double l0 = static_cast<double>(rng.poisson(model.expected(1.0)));
  const double l1 = static_cast<double>(rng.poisson(model.expected(0.0)));
  const double span = l0 - l1;
  if (!(span > 0.0)) throw std::invalid_argument("two_qubit_tomography: degenerate contrast (l_0 <= l_1)");

  const auto& basis = detail::pauli_basis();
  cmatrix est = cmatrix::Identity(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      if (a == 0 && b == 0) continue;
      const cmatrix p = kron(basis[static_cast<std::size_t>(a)], basis[static_cast<std::size_t>(b)]);
      const double mean_p = (rho.matrix() * p).trace().real();
      const double counts = static_cast<double>(rng.poisson(model.expected((1.0 + mean_p) / 2.0)));
      const double est_p = (2.0 * counts - l0 - l1) / span;
      est += est_p * p;
    }
  est /= 4.0;
  return mle_project(est);
}

}  // namespace qfiflow
