#pragma once

// QFI flows and the flow-resolved non-Markovianity measure.  Subflows are
// built from three measured traces (both channels closed, one channel
// open each); the measure integrates positive flow parts with a plain
// trapezoid rule on max(I_i, 0), no sub-grid zero-crossing refinement.
// Channel dephasing rates come from log-derivatives of the same traces and
// feed a time-local Lindblad propagator used as a consistency oracle.

#include "qfiflow/linalg.hpp"
#include "qfiflow/nv_model.hpp"
#include "qfiflow/qfi.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace qfiflow {

// Channel factors closer to zero than this are masked in rate extraction.
inline constexpr double rate_mask_tol = 1e-9;

namespace detail {

inline void check_uniform_grid(const std::vector<double>& t, const char* who) {
  if (t.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least two points");
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw std::invalid_argument(std::string(who) + ": times must increase");
  for (std::size_t k = 1; k < t.size(); ++k)
    if (std::abs((t[k] - t[k - 1]) - dt) > 1e-9 * dt)
      throw std::invalid_argument(std::string(who) + ": grid not uniform");
}

// Second-order differences: central in the interior, 3-point one-sided at
// the ends.
inline std::vector<double> diff(const std::vector<double>& f, double dt) {
  const std::size_t n = f.size();
  if (n < 3) throw std::invalid_argument("differentiate: need at least three points");
  std::vector<double> d(n);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
  return d;
}

}  // namespace detail

// A sampled QFI-vs-time record on a uniform, strictly increasing grid.
struct QfiTrace {
  std::vector<double> times;
  std::vector<double> values;
  std::string label;

  QfiTrace(std::vector<double> t, std::vector<double> v, std::string lbl = "")
      : times(std::move(t)), values(std::move(v)), label(std::move(lbl)) {
    if (times.size() != values.size()) throw std::invalid_argument("QfiTrace: times/values size mismatch");
    detail::check_uniform_grid(times, "QfiTrace");
    for (double x : values)
      if (!std::isfinite(x)) throw std::invalid_argument("QfiTrace: non-finite value");
  }

  std::size_t size() const { return times.size(); }
  double dt() const { return times[1] - times[0]; }
};

inline std::vector<double> differentiate(const QfiTrace& trace) {
  return detail::diff(trace.values, trace.dt());
}

// Adjacent averaging with a symmetric window that shrinks near the ends
// (half-width min(w/2, i, n-1-i)); window must be odd.
inline std::vector<double> smooth(const std::vector<double>& values, int window = 5) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("smooth: window must be odd and >= 1");
  const std::size_t n = values.size();
  std::vector<double> out(n);
  const std::size_t half = static_cast<std::size_t>(window / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = std::min({half, i, n - 1 - i});
    double acc = 0.0;
    for (std::size_t j = i - h; j <= i + h; ++j) acc += values[j];
    out[i] = acc / static_cast<double>(2 * h + 1);
  }
  return out;
}

// Total flow plus its three-channel decomposition.  The declared tolerance
// bounds |total - (sub_n + sub_c + sub_r)| relative to the flow scale: the
// central-difference product-rule mismatch is O(dt^2).
struct FlowSet {
  std::vector<double> times;
  std::vector<double> total;
  std::vector<double> sub_n;
  std::vector<double> sub_c;
  std::vector<double> sub_r;
  double consistency_tol = 1e-3;

  FlowSet(std::vector<double> t, std::vector<double> tot, std::vector<double> n, std::vector<double> c,
          std::vector<double> r, double tol)
      : times(std::move(t)),
        total(std::move(tot)),
        sub_n(std::move(n)),
        sub_c(std::move(c)),
        sub_r(std::move(r)),
        consistency_tol(tol) {
    detail::check_uniform_grid(times, "FlowSet");
    const std::size_t sz = times.size();
    if (total.size() != sz || sub_n.size() != sz || sub_c.size() != sz || sub_r.size() != sz)
      throw std::invalid_argument("FlowSet: series size mismatch");
    double scale = 1e-12, worst = 0.0;
    for (std::size_t k = 0; k < sz; ++k) {
      if (!std::isfinite(total[k]) || !std::isfinite(sub_n[k]) || !std::isfinite(sub_c[k]) ||
          !std::isfinite(sub_r[k]))
        throw std::invalid_argument("FlowSet: non-finite flow");
      scale = std::max(scale, std::abs(total[k]));
    }
    for (std::size_t k = 0; k < sz; ++k)
      worst = std::max(worst, std::abs(total[k] - (sub_n[k] + sub_c[k] + sub_r[k])));
    if (worst > consistency_tol * scale)
      throw std::invalid_argument("FlowSet: subflows do not sum to the total flow (mismatch " +
                                  std::to_string(worst / scale) + " of scale)");
  }

  std::size_t size() const { return times.size(); }
  double dt() const { return times[1] - times[0]; }
};

namespace detail {

inline void check_aligned(const QfiTrace& a, const QfiTrace& b, const char* who) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": trace lengths differ");
  const double tol = 1e-9 * a.dt();
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a.times[k] - b.times[k]) > tol)
      throw std::invalid_argument(std::string(who) + ": trace grids differ");
}

}  // namespace detail

// Subflow decomposition from the closed trace Q_R = Q(t; 0, 0) and the
// single-channel traces Q_nR = Q(t; phi1, 0), Q_cR = Q(t; 0, phi2):
//   I_n = (dQ_nR - Q_nR dQ_R / Q_R) Q_cR / Q_R
//   I_c = (dQ_cR - Q_cR dQ_R / Q_R) Q_nR / Q_R
//   I_R = Q_nR Q_cR dQ_R / Q_R^2
// and the total flow is the derivative of the reconstructed product
// Q = Q_nR Q_cR / Q_R.  Q_R must stay strictly positive.  Everything is
// evaluated in product-rule form (no logarithms), finite through channel
// zeros.  consistency_tol = 0 selects the discretization default
// max(1e-3, 0.01 dt^2); callers feeding shot-noisy traces declare a wider
// bound, since for them the total/sum mismatch is set by noise, not dt.
inline FlowSet subflows(const QfiTrace& q_r, const QfiTrace& q_nr, const QfiTrace& q_cr,
                        double consistency_tol = 0.0) {
  detail::check_aligned(q_r, q_nr, "subflows");
  detail::check_aligned(q_r, q_cr, "subflows");
  const std::size_t n = q_r.size();
  for (std::size_t k = 0; k < n; ++k)
    if (!(q_r.values[k] > 0.0)) throw std::invalid_argument("subflows: closed-channel trace must stay positive");

  const double dt = q_r.dt();
  std::vector<double> full(n);
  for (std::size_t k = 0; k < n; ++k) full[k] = q_nr.values[k] * q_cr.values[k] / q_r.values[k];

  const std::vector<double> d_r = detail::diff(q_r.values, dt);
  const std::vector<double> d_nr = detail::diff(q_nr.values, dt);
  const std::vector<double> d_cr = detail::diff(q_cr.values, dt);
  std::vector<double> total = detail::diff(full, dt);

  std::vector<double> sn(n), sc(n), sr(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double qr = q_r.values[k], qnr = q_nr.values[k], qcr = q_cr.values[k];
    sn[k] = (d_nr[k] - qnr * d_r[k] / qr) * qcr / qr;
    sc[k] = (d_cr[k] - qcr * d_r[k] / qr) * qnr / qr;
    sr[k] = qnr * qcr * d_r[k] / (qr * qr);
  }
  const double tol = consistency_tol > 0.0 ? consistency_tol : std::max(1e-3, 0.01 * dt * dt);
  return FlowSet(q_r.times, std::move(total), std::move(sn), std::move(sc), std::move(sr), tol);
}

// Cumulative trapezoid of max(flow, 0) at every grid point.
inline std::vector<double> cumulative_positive_integral(const std::vector<double>& times,
                                                        const std::vector<double>& flow) {
  detail::check_uniform_grid(times, "cumulative_positive_integral");
  if (times.size() != flow.size())
    throw std::invalid_argument("cumulative_positive_integral: size mismatch");
  const double dt = times[1] - times[0];
  std::vector<double> acc(times.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double a = std::max(flow[k - 1], 0.0), b = std::max(flow[k], 0.0);
    acc[k] = acc[k - 1] + 0.5 * dt * (a + b);
  }
  return acc;
}

namespace detail {

inline double interp_cumulative(const std::vector<double>& times, const std::vector<double>& integrand,
                                const std::vector<double>& acc, double t) {
  const double dt = times[1] - times[0];
  if (t < times.front() - 1e-9 * dt || t > times.back() + 1e-9 * dt)
    throw std::invalid_argument("measure: time outside the trace window");
  const double pos = std::min(std::max((t - times.front()) / dt, 0.0), double(times.size() - 1));
  const std::size_t k = std::min(static_cast<std::size_t>(pos), times.size() - 2);
  const double f = pos - static_cast<double>(k);
  const double pa = std::max(integrand[k], 0.0), pb = std::max(integrand[k + 1], 0.0);
  // trapezoid over the partial cell with linearly interpolated integrand
  return acc[k] + f * dt * 0.5 * (pa + (pa + (pb - pa) * f));
}

}  // namespace detail

// N(t) = sum_i integral_0^t max(I_i, 0) dtau over the three subflows.
inline double measure_n(const FlowSet& flows, double t_ns) {
  std::vector<double> p(flows.size());
  for (std::size_t k = 0; k < flows.size(); ++k)
    p[k] = std::max(flows.sub_n[k], 0.0) + std::max(flows.sub_c[k], 0.0) + std::max(flows.sub_r[k], 0.0);
  const std::vector<double> acc = cumulative_positive_integral(flows.times, p);
  return detail::interp_cumulative(flows.times, p, acc, t_ns);
}

// Companion measure built from the positive part of the total flow alone.
inline double measure_total(const FlowSet& flows, double t_ns) {
  const std::vector<double> acc = cumulative_positive_integral(flows.times, flows.total);
  return detail::interp_cumulative(flows.times, flows.total, acc, t_ns);
}

// N(t -> infinity) for a configuration, from analytic traces on a dt = 0.1
// grid.  Default horizon is 8 T2*, by which the bath envelope has decayed
// below 1e-3; the bath must be enabled or the oscillatory channels never
// stop contributing and no limit exists.
inline double long_time_measure(const SystemConfig& cfg, const BathConfig& bath, double horizon_ns = 0.0) {
  if (!bath.enabled)
    throw std::invalid_argument("long_time_measure: bath must be enabled for the measure to converge");
  if (horizon_ns <= 0.0) horizon_ns = 8.0 * bath.t2_star_ns;
  TimeGrid grid;
  grid.start_ns = 0.0;
  grid.dt_ns = 0.1;
  grid.end_ns = grid.dt_ns * std::ceil(horizon_ns / grid.dt_ns);

  SystemConfig closed = cfg, n_open = cfg, c_open = cfg;
  closed.phi1 = 0.0;
  closed.phi2 = 0.0;
  n_open.phi2 = 0.0;
  c_open.phi1 = 0.0;

  const std::vector<double> ts = grid.times();
  std::vector<double> vr(ts.size()), vn(ts.size()), vc(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    vr[k] = qfi_factorized(ts[k], closed, bath);
    vn[k] = qfi_factorized(ts[k], n_open, bath);
    vc[k] = qfi_factorized(ts[k], c_open, bath);
  }
  const FlowSet flows = subflows(QfiTrace(ts, std::move(vr), "Q_R"), QfiTrace(ts, std::move(vn), "Q_nR"),
                                 QfiTrace(ts, std::move(vc), "Q_cR"));
  return measure_n(flows, std::min(horizon_ns, grid.end_ns));
}

// Per-channel dephasing rates gamma_i = -1/2 d/dt ln(Q_i); entries whose
// stencil touches a channel factor within rate_mask_tol of zero are NaN.
struct RateSet {
  std::vector<double> times;
  std::vector<double> gamma_n;
  std::vector<double> gamma_c;
  std::vector<double> gamma_r;

  std::size_t size() const { return times.size(); }
};

namespace detail {

inline std::vector<double> masked_log_rate(const std::vector<double>& factor, double dt) {
  const std::size_t n = factor.size();
  std::vector<double> ln(n), gamma(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> ok(n);
  bool any = false;
  for (std::size_t k = 0; k < n; ++k) {
    ok[k] = std::isfinite(factor[k]) && factor[k] > rate_mask_tol;
    ln[k] = ok[k] ? std::log(factor[k]) : 0.0;
    any = any || ok[k];
  }
  if (!any) throw std::invalid_argument("extract_rates: channel trace is zero everywhere");
  if (n < 3) throw std::invalid_argument("extract_rates: need at least three points");
  if (ok[0] && ok[1] && ok[2]) gamma[0] = -0.5 * (-3.0 * ln[0] + 4.0 * ln[1] - ln[2]) / (2.0 * dt);
  for (std::size_t k = 1; k + 1 < n; ++k)
    if (ok[k - 1] && ok[k] && ok[k + 1]) gamma[k] = -0.5 * (ln[k + 1] - ln[k - 1]) / (2.0 * dt);
  if (ok[n - 1] && ok[n - 2] && ok[n - 3])
    gamma[n - 1] = -0.5 * (3.0 * ln[n - 1] - 4.0 * ln[n - 2] + ln[n - 3]) / (2.0 * dt);
  return gamma;
}

}  // namespace detail

inline RateSet extract_rates(const QfiTrace& q_r, const QfiTrace& q_nr, const QfiTrace& q_cr) {
  detail::check_aligned(q_r, q_nr, "extract_rates");
  detail::check_aligned(q_r, q_cr, "extract_rates");
  const std::size_t n = q_r.size();
  for (std::size_t k = 0; k < n; ++k)
    if (!(q_r.values[k] > 0.0))
      throw std::invalid_argument("extract_rates: closed-channel trace must stay positive");
  const double dt = q_r.dt();
  std::vector<double> fn(n), fc(n);
  for (std::size_t k = 0; k < n; ++k) {
    fn[k] = q_nr.values[k] / q_r.values[k];
    fc[k] = q_cr.values[k] / q_r.values[k];
  }
  RateSet rates;
  rates.times = q_r.times;
  rates.gamma_n = detail::masked_log_rate(fn, dt);
  rates.gamma_c = detail::masked_log_rate(fc, dt);
  rates.gamma_r = detail::masked_log_rate(q_r.values, dt);
  return rates;
}

namespace detail {

inline double interp_rate(const std::vector<double>& times, const std::vector<double>& g, double t) {
  const double dt = times[1] - times[0];
  const double pos = std::min(std::max((t - times.front()) / dt, 0.0), double(times.size() - 1));
  const std::size_t k = std::min(static_cast<std::size_t>(pos), times.size() - 2);
  const double f = pos - static_cast<double>(k);
  const double v = g[k] + (g[k + 1] - g[k]) * f;
  if (!std::isfinite(v)) throw std::invalid_argument("lindblad_propagate: masked rate inside the window");
  return v;
}

}  // namespace detail

// Time-local pure-dephasing master equation in the interaction picture
// (H = 0): drho/dt = Gamma(t)/2 (Z rho Z - rho) with Z = sigma_z on the
// electron and Gamma = gamma_n + gamma_c + gamma_r, i.e. jump operator
// sigma_z/sqrt(2) per channel so the coherence decays as
// exp(-integral Gamma).  Classic RK4 with linearly interpolated rates; the
// step must satisfy max|Gamma| dt <= 1.
inline std::vector<DensityMatrix> lindblad_propagate(const RateSet& rates, const DensityMatrix& rho0,
                                                     const TimeGrid& grid) {
  if (rho0.dim() != 2 && rho0.dim() != 4)
    throw std::invalid_argument("lindblad_propagate: state must be 2x2 or 4x4");
  if (rates.size() < 2) throw std::invalid_argument("lindblad_propagate: need at least two rate samples");
  detail::check_uniform_grid(rates.times, "lindblad_propagate");
  const std::vector<double> ts = grid.times();
  const double slack = 1e-9 * grid.dt_ns;
  if (rates.times.front() > ts.front() + slack || rates.times.back() < ts.back() - slack)
    throw std::invalid_argument("lindblad_propagate: rate window does not cover the grid");

  auto total_rate = [&](double t) {
    return detail::interp_rate(rates.times, rates.gamma_n, t) +
           detail::interp_rate(rates.times, rates.gamma_c, t) +
           detail::interp_rate(rates.times, rates.gamma_r, t);
  };

  double gmax = 0.0;
  for (double t : ts) gmax = std::max(gmax, std::abs(total_rate(t)));
  if (gmax * grid.dt_ns > 1.0)
    throw std::invalid_argument("lindblad_propagate: step too large for the peak rate");

  const Eigen::Index half = rho0.dim() / 2;
  cmatrix z = cmatrix::Identity(rho0.dim(), rho0.dim());
  z.block(half, half, half, half) *= -1.0;

  auto deriv = [&](double t, const cmatrix& m) {
    return (0.5 * total_rate(t) * (z * m * z - m)).eval();
  };

  std::vector<DensityMatrix> out;
  out.reserve(ts.size());
  out.push_back(rho0);
  cmatrix m = rho0.matrix();
  const double dt = grid.dt_ns;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double t = ts[k];
    const cmatrix k1 = deriv(t, m);
    const cmatrix k2 = deriv(t + dt / 2.0, m + (dt / 2.0) * k1);
    const cmatrix k3 = deriv(t + dt / 2.0, m + (dt / 2.0) * k2);
    const cmatrix k4 = deriv(t + dt, m + dt * k3);
    m += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    m = ((m + m.adjoint()) / 2.0).eval();  // shed roundoff asymmetry
    out.push_back(DensityMatrix(m));
  }
  return out;
}

}  // namespace qfiflow
