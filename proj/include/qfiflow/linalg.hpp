#pragma once

// Dense complex linear algebra for few-qubit states: pure states, density
// matrices with enforced physicality, tensor products, partial trace, and
// the eigendecompositions everything downstream leans on.  Dimensions stay
// tiny (<= 16), so everything is dense Eigen with no cleverness.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfiflow {

using complexd = std::complex<double>;
using cmatrix = Eigen::MatrixXcd;
using cvector = Eigen::VectorXcd;
using rvector = Eigen::VectorXd;

inline constexpr double herm_tol = 1e-12;    // |M - M^dag| per entry
inline constexpr double trace_tol = 1e-10;   // |tr(rho) - 1|
inline constexpr double psd_tol = 1e-10;     // eigenvalues >= -psd_tol
inline constexpr double norm_tol = 1e-12;    // | ||psi||^2 - 1 |

inline bool is_hermitian(const cmatrix& m, double tol = herm_tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline cmatrix pauli_x() {
  cmatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline cmatrix pauli_y() {
  cmatrix m(2, 2);
  m << 0, complexd(0, -1), complexd(0, 1), 0;
  return m;
}

inline cmatrix pauli_z() {
  cmatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

// Normalized ket.  The squared norm must be 1 within norm_tol; this is an
// invariant, not a convenience renormalization.
struct PureState {
  cvector amplitudes;

  explicit PureState(cvector amps) : amplitudes(std::move(amps)) {
    if (amplitudes.size() < 1) throw std::invalid_argument("PureState: empty amplitude vector");
    const double n2 = amplitudes.squaredNorm();
    if (std::abs(n2 - 1.0) > norm_tol)
      throw std::invalid_argument("PureState: squared norm deviates from 1 by " + std::to_string(n2 - 1.0));
  }

  Eigen::Index dim() const { return amplitudes.size(); }
};

struct EighResult {
  rvector eigenvalues;   // ascending
  cmatrix eigenvectors;  // columns, same order
};

// Hermitian eigendecomposition; input must be Hermitian within tol (scaled
// by the matrix magnitude).  The matrix is symmetrized before solving so
// roundoff asymmetry never leaks into the solver.
inline EighResult eigh(const cmatrix& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigh: matrix not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (!is_hermitian(m, tol * scale)) throw std::invalid_argument("eigh: matrix not Hermitian");
  Eigen::SelfAdjointEigenSolver<cmatrix> solver(((m + m.adjoint()) / 2.0).eval());
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigh: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// Physical density matrix: Hermitian (herm_tol), unit trace (trace_tol),
// positive semidefinite (eigenvalues >= -psd_tol).  Construction validates;
// the pure-state path skips the eigensolve since the outer product is PSD
// by construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(cmatrix m) : m_(std::move(m)) {
    validate_basic();
    const rvector evals = eigh(m_).eigenvalues;
    if (evals.minCoeff() < -psd_tol)
      throw std::invalid_argument("DensityMatrix: negative eigenvalue " + std::to_string(evals.minCoeff()));
  }

  static DensityMatrix from_pure(const PureState& psi) {
    return DensityMatrix((psi.amplitudes * psi.amplitudes.adjoint()).eval(), pure_tag{});
  }

  const cmatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double purity() const { return (m_ * m_).trace().real(); }

 private:
  struct pure_tag {};
  DensityMatrix(cmatrix m, pure_tag) : m_(std::move(m)) { validate_basic(); }

  void validate_basic() const {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("DensityMatrix: matrix not square");
    if (!is_hermitian(m_, herm_tol)) throw std::invalid_argument("DensityMatrix: matrix not Hermitian");
    const double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > trace_tol)
      throw std::invalid_argument("DensityMatrix: trace deviates from 1 by " + std::to_string(tr - 1.0));
  }

  cmatrix m_;
};

inline cmatrix kron(const cmatrix& a, const cmatrix& b) {
  cmatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline cvector kron(const cvector& a, const cvector& b) {
  cvector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// Partial trace over the complement of `keep`.  `dims` lists the subsystem
// dimensions in tensor order (row index = mixed-radix digits, first factor
// most significant); `keep` holds the subsystem indices to retain, in
// ascending order.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<Eigen::Index>& dims,
                                   const std::vector<std::size_t>& keep) {
  Eigen::Index total = 1;
  for (Eigen::Index d : dims) {
    if (d < 1) throw std::invalid_argument("partial_trace: subsystem dimension < 1");
    total *= d;
  }
  if (total != rho.dim()) throw std::invalid_argument("partial_trace: dims do not factor the state dimension");
  if (keep.empty()) throw std::invalid_argument("partial_trace: nothing kept");
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] >= dims.size()) throw std::invalid_argument("partial_trace: keep index out of range");
    if (k > 0 && keep[k] <= keep[k - 1]) throw std::invalid_argument("partial_trace: keep indices not ascending");
  }

  std::vector<std::size_t> traced;
  for (std::size_t s = 0; s < dims.size(); ++s)
    if (std::find(keep.begin(), keep.end(), s) == keep.end()) traced.push_back(s);

  // Strides of each subsystem in the flattened index.
  std::vector<Eigen::Index> stride(dims.size(), 1);
  for (std::size_t s = dims.size(); s-- > 1;) stride[s - 1] = stride[s] * dims[s];

  Eigen::Index kept_dim = 1, traced_dim = 1;
  for (std::size_t s : keep) kept_dim *= dims[s];
  for (std::size_t s : traced) traced_dim *= dims[s];

  // Offsets of every kept / traced digit combination into the full index.
  auto offsets = [&](const std::vector<std::size_t>& subs, Eigen::Index count) {
    std::vector<Eigen::Index> off(static_cast<std::size_t>(count), 0);
    for (Eigen::Index x = 0; x < count; ++x) {
      Eigen::Index rem = x;
      for (std::size_t s = subs.size(); s-- > 0;) {
        off[static_cast<std::size_t>(x)] += (rem % dims[subs[s]]) * stride[subs[s]];
        rem /= dims[subs[s]];
      }
    }
    return off;
  };
  const std::vector<Eigen::Index> kept_off = offsets(keep, kept_dim);
  const std::vector<Eigen::Index> traced_off = offsets(traced, traced_dim);

  cmatrix out = cmatrix::Zero(kept_dim, kept_dim);
  const cmatrix& m = rho.matrix();
  for (Eigen::Index r = 0; r < kept_dim; ++r)
    for (Eigen::Index c = 0; c < kept_dim; ++c)
      for (Eigen::Index t = 0; t < traced_dim; ++t)
        out(r, c) += m(kept_off[static_cast<std::size_t>(r)] + traced_off[static_cast<std::size_t>(t)],
                       kept_off[static_cast<std::size_t>(c)] + traced_off[static_cast<std::size_t>(t)]);
  return DensityMatrix(std::move(out));
}

// exp(-i * phase_k) applied per basis amplitude: evolution under a diagonal
// Hamiltonian, phases = diag(H) * t.
inline PureState evolve_diagonal(const PureState& psi, const rvector& phases) {
  if (phases.size() != psi.dim()) throw std::invalid_argument("evolve_diagonal: phase count != dimension");
  cvector out(psi.dim());
  for (Eigen::Index k = 0; k < psi.dim(); ++k)
    out(k) = psi.amplitudes(k) * std::exp(complexd(0.0, -phases(k)));
  return PureState(std::move(out));
}

}  // namespace qfiflow
