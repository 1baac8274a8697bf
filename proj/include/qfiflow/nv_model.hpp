#pragma once

// NV-centre model: one electron qubit (m_s = 0, -1) coupled to a 14N and a
// 13C nuclear spin-1/2 through secular hyperfine terms, plus a fitted bath
// envelope acting on the electron coherence.  The Hamiltonian is diagonal
// in the product basis, so time evolution is a per-amplitude phase.
//
// Basis index is 4e + 2n + c with digit 0 = spin up (i = +1/2) and
// digit 1 = spin down (i = -1/2); electron digit 0 -> m_s = 0 (s_e = 0),
// digit 1 -> m_s = -1 (s_e = -1).  Couplings are entered in MHz, times in
// ns; the ordinary-frequency convention gives the conversion 2*pi*1e-3.

#include "qfiflow/linalg.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace qfiflow {

inline constexpr double pi = std::numbers::pi;
inline constexpr double mhz_to_rad_per_ns = 2.0 * pi * 1e-3;

struct SystemConfig {
  double a_n_mhz = -2.16;  // 14N parallel hyperfine
  double a_c_mhz = 12.8;   // 13C parallel hyperfine
  double phi1 = 0.0;       // 14N preparation polar angle
  double phi2 = 0.0;       // 13C preparation polar angle
  double varphi1 = 0.0;    // 14N preparation conditional phase
  double varphi2 = 0.0;    // 13C preparation conditional phase

  void validate() const {
    if (!std::isfinite(a_n_mhz) || !std::isfinite(a_c_mhz))
      throw std::invalid_argument("SystemConfig: couplings must be finite");
    if (!std::isfinite(phi1) || !std::isfinite(phi2) || !std::isfinite(varphi1) || !std::isfinite(varphi2))
      throw std::invalid_argument("SystemConfig: angles must be finite");
  }
};

struct BathConfig {
  bool enabled = true;
  double t2_star_ns = 1026.0;  // stretched-exponential time constant
  double alpha = 0.89;         // stretch exponent
  double phi0 = 0.37 * pi;     // residual-oscillation amplitude angle
  double a_c0_mhz = 0.4;       // residual-oscillation coupling
  double varphi0 = 0.21 * pi;  // residual-oscillation phase offset

  void validate() const {
    if (!(t2_star_ns > 0.0)) throw std::invalid_argument("BathConfig: t2_star_ns must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("BathConfig: alpha must be positive");
    if (!std::isfinite(phi0) || !std::isfinite(a_c0_mhz) || !std::isfinite(varphi0))
      throw std::invalid_argument("BathConfig: parameters must be finite");
  }
};

// Uniform inclusive grid t_k = start + k*dt; the span must be an integer
// number of steps (within 1e-9 relative) so two runs never disagree about
// the point count.
struct TimeGrid {
  double start_ns = 0.0;
  double end_ns = 600.0;
  double dt_ns = 0.1;

  std::size_t size() const {
    if (!(dt_ns > 0.0)) throw std::invalid_argument("TimeGrid: dt_ns must be positive");
    if (!(end_ns > start_ns)) throw std::invalid_argument("TimeGrid: end_ns must exceed start_ns");
    const double steps = (end_ns - start_ns) / dt_ns;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps))
      throw std::invalid_argument("TimeGrid: span is not an integer number of steps");
    return static_cast<std::size_t>(rounded) + 1;
  }

  std::vector<double> times() const {
    const std::size_t n = size();
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = start_ns + static_cast<double>(k) * dt_ns;
    return t;
  }
};

// H = A_n S_z^e I_z^n + A_c S_z^e I_z^c in the m_s = {0,-1} manifold:
// diagonal, entries in rad/ns.
inline cmatrix build_hamiltonian(const SystemConfig& cfg) {
  cfg.validate();
  cmatrix h = cmatrix::Zero(8, 8);
  for (int e = 0; e < 2; ++e)
    for (int n = 0; n < 2; ++n)
      for (int c = 0; c < 2; ++c) {
        const double s_e = (e == 0) ? 0.0 : -1.0;
        const double i_n = (n == 0) ? 0.5 : -0.5;
        const double i_c = (c == 0) ? 0.5 : -0.5;
        h(4 * e + 2 * n + c, 4 * e + 2 * n + c) =
            mhz_to_rad_per_ns * s_e * (cfg.a_n_mhz * i_n + cfg.a_c_mhz * i_c);
      }
  return h;
}

namespace detail {

inline cvector qubit_ket(double phi) {
  cvector v(2);
  v << std::cos(phi / 2.0), std::sin(phi / 2.0);
  return v;
}

// The m_s = -1 branch picks up exp(i*(varphi1*i_n + varphi2*i_c)); this is
// the preparation-pulse phase that shifts each channel's oscillation
// argument by varphi/2.
inline void dress_branch(cvector& amps, double varphi1, double varphi2) {
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 2; ++c) {
      const double i_n = (n == 0) ? 0.5 : -0.5;
      const double i_c = (c == 0) ? 0.5 : -0.5;
      amps(4 + 2 * n + c) *= std::exp(complexd(0.0, varphi1 * i_n + varphi2 * i_c));
    }
}

}  // namespace detail

// |+>_e x |psi(phi1)>_n x |psi(phi2)>_c with the conditional preparation
// phases on the m_s = -1 branch.
inline PureState prepare_experiment1(const SystemConfig& cfg) {
  cfg.validate();
  cvector e(2);
  e << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  cvector amps = kron(kron(e, detail::qubit_ket(cfg.phi1)), detail::qubit_ket(cfg.phi2));
  detail::dress_branch(amps, cfg.varphi1, cfg.varphi2);
  return PureState(std::move(amps));
}

// Electron-carbon Bell pair (|0 up> + |1 down>)/sqrt(2) in computational
// labels, tensored with |psi(phi1)>_n; only the nitrogen channel stays open.
inline PureState prepare_experiment2(const SystemConfig& cfg) {
  cfg.validate();
  cvector amps = cvector::Zero(8);
  const cvector n = detail::qubit_ket(cfg.phi1);
  const double w = 1.0 / std::sqrt(2.0);
  for (int nn = 0; nn < 2; ++nn) {
    amps(4 * 0 + 2 * nn + 0) = w * n(nn);  // |0>_e |0>_c
    amps(4 * 1 + 2 * nn + 1) = w * n(nn);  // |1>_e |1>_c
  }
  detail::dress_branch(amps, cfg.varphi1, 0.0);
  return PureState(std::move(amps));
}

// Fitted bath factor on the electron-coherence QFI:
// exp(-(t/T2*)^alpha) * (1 - sin^2(phi0) sin^2(pi A_c0 1e-3 t + varphi0/2)).
inline double bath_envelope(double t_ns, const BathConfig& bath) {
  if (t_ns < 0.0) throw std::invalid_argument("bath_envelope: negative time");
  if (!bath.enabled) return 1.0;
  bath.validate();
  const double s = std::sin(pi * bath.a_c0_mhz * 1e-3 * t_ns + bath.varphi0 / 2.0);
  const double osc = 1.0 - std::sin(bath.phi0) * std::sin(bath.phi0) * s * s;
  return std::exp(-std::pow(t_ns / bath.t2_star_ns, bath.alpha)) * osc;
}

namespace detail {

// Trace out the spectator nuclei and damp electron-off-diagonal entries by
// sqrt(Q_R); the Hadamard mask [[1, f], [f, 1]] (x identity) is PSD, so
// positivity survives by the Schur product theorem.
inline DensityMatrix reduce_and_damp(const PureState& psi_t, double q_r, int experiment) {
  const std::vector<std::size_t> keep =
      (experiment == 1) ? std::vector<std::size_t>{0} : std::vector<std::size_t>{0, 2};
  DensityMatrix red = partial_trace(DensityMatrix::from_pure(psi_t), {2, 2, 2}, keep);
  const double f = std::sqrt(q_r);
  cmatrix m = red.matrix();
  const Eigen::Index half = m.rows() / 2;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (r / half != c / half) m(r, c) *= f;
  return DensityMatrix(std::move(m));
}

}  // namespace detail

// Reduced system state at time t: exact trace-out of the diagonal model,
// then the bath envelope on the electron coherence.  Experiment 1 keeps the
// electron (2x2), experiment 2 keeps electron + carbon (4x4).
inline DensityMatrix reduced_state(const SystemConfig& cfg, const BathConfig& bath, double t_ns,
                                   int experiment = 1) {
  if (experiment != 1 && experiment != 2) throw std::invalid_argument("reduced_state: experiment must be 1 or 2");
  const PureState psi0 = (experiment == 1) ? prepare_experiment1(cfg) : prepare_experiment2(cfg);
  const rvector diag = build_hamiltonian(cfg).diagonal().real();
  const PureState psi_t = evolve_diagonal(psi0, (diag * t_ns).eval());
  return detail::reduce_and_damp(psi_t, bath_envelope(t_ns, bath), experiment);
}

inline std::vector<DensityMatrix> reduced_system_trace(const SystemConfig& cfg, const BathConfig& bath,
                                                       const TimeGrid& grid, int experiment = 1) {
  if (experiment != 1 && experiment != 2)
    throw std::invalid_argument("reduced_system_trace: experiment must be 1 or 2");
  const PureState psi0 = (experiment == 1) ? prepare_experiment1(cfg) : prepare_experiment2(cfg);
  const rvector diag = build_hamiltonian(cfg).diagonal().real();
  std::vector<DensityMatrix> out;
  const std::vector<double> ts = grid.times();
  out.reserve(ts.size());
  for (double t : ts) {
    const PureState psi_t = evolve_diagonal(psi0, (diag * t).eval());
    out.push_back(detail::reduce_and_damp(psi_t, bath_envelope(t, bath), experiment));
  }
  return out;
}

}  // namespace qfiflow
