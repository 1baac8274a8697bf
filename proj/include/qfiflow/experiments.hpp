#pragma once

// Experiment pipeline: a single spec drives state simulation, optional
// photon-count reconstruction, smoothing, flows, measures and rates, so
// the CLI subcommands and the figure catalogue share one code path.

#include "qfiflow/nonmarkov.hpp"
#include "qfiflow/nv_model.hpp"
#include "qfiflow/qfi.hpp"
#include "qfiflow/rng.hpp"
#include "qfiflow/tomography.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qfiflow {

inline const std::vector<std::string>& known_outputs() {
  static const std::vector<std::string> v{"qfi", "flows", "measure", "rates", "states"};
  return v;
}

struct ExperimentSpec {
  int experiment = 1;  // 1: electron channel probe, 2: electron-carbon Bell probe
  SystemConfig sys;
  BathConfig bath;
  TimeGrid grid;
  bool noise = false;
  MeasurementModel model;
  int smoothing_window = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs{"qfi"};

  bool wants(const std::string& what) const {
    return std::find(outputs.begin(), outputs.end(), what) != outputs.end();
  }

  void validate() const {
    if (experiment != 1 && experiment != 2)
      throw std::invalid_argument("ExperimentSpec: experiment must be 1 or 2");
    sys.validate();
    bath.validate();
    grid.size();
    if (noise) model.validate();
    if (smoothing_window < 1 || smoothing_window % 2 == 0)
      throw std::invalid_argument("ExperimentSpec: smoothing window must be odd and >= 1");
    for (const auto& o : outputs)
      if (std::find(known_outputs().begin(), known_outputs().end(), o) == known_outputs().end())
        throw std::invalid_argument("ExperimentSpec: unknown output '" + o + "'");
  }
};

struct SweepSpec {
  std::string parameter = "phi2";  // "phi1" or "phi2"
  std::vector<double> values;
  double horizon_ns = 0.0;  // 0 -> long_time_measure default
  ExperimentSpec base;
};

struct RunResult {
  std::vector<double> times;
  std::vector<double> qfi_raw;        // before smoothing
  std::vector<double> qfi;            // after smoothing (== raw for window 1)
  std::vector<double> flow_total;     // d(qfi)/dt
  std::vector<double> measure_total;  // cumulative integral of max(flow_total, 0)
  std::optional<FlowSet> flows;       // experiment-1 channel decomposition
  std::optional<RateSet> rates;
  std::vector<double> measure_sub;     // cumulative subflow measure
  std::vector<double> recon_product;   // Q_nR Q_cR / Q_R from the auxiliary runs
  std::vector<DensityMatrix> states;   // kept only when requested
};

namespace detail {

// Seed streams: the main run and each auxiliary single-channel run draw
// from disjoint per-point seed sequences derived from the spec seed.
inline constexpr std::uint64_t stream_main = 0, stream_closed = 1, stream_n_open = 2, stream_c_open = 3;

inline std::vector<double> qfi_series(const ExperimentSpec& spec, std::uint64_t purpose,
                                      std::vector<DensityMatrix>* keep_states) {
  std::vector<DensityMatrix> states = reduced_system_trace(spec.sys, spec.bath, spec.grid, spec.experiment);
  std::vector<double> q(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!spec.noise) {
      q[k] = (spec.experiment == 1) ? qfi_bloch(bloch_vector(states[k])) : qfi_two_qubit(states[k]).value;
    } else {
      MeasurementModel m = spec.model;
      m.rng_seed = mix_seed(spec.seed, (purpose << 32) | static_cast<std::uint64_t>(k));
      q[k] = (spec.experiment == 1)
                 ? qfi_bloch(bloch_vector(reconstruct_qubit(simulate_counts(states[k], m))))
                 : qfi_two_qubit(two_qubit_tomography(states[k], m)).value;
    }
  }
  if (keep_states) *keep_states = std::move(states);
  return q;
}

}  // namespace detail

inline RunResult run(const ExperimentSpec& spec) {
  spec.validate();
  RunResult res;
  res.times = spec.grid.times();
  res.qfi_raw = detail::qfi_series(spec, detail::stream_main, spec.wants("states") ? &res.states : nullptr);
  res.qfi = smooth(res.qfi_raw, spec.smoothing_window);
  if (res.times.size() >= 3) {
    res.flow_total = detail::diff(res.qfi, spec.grid.dt_ns);
    res.measure_total = cumulative_positive_integral(res.times, res.flow_total);
  }

  const bool decompose =
      spec.experiment == 1 && (spec.wants("flows") || spec.wants("measure") || spec.wants("rates"));
  if (decompose && res.times.size() >= 3) {
    ExperimentSpec closed = spec, n_open = spec, c_open = spec;
    closed.sys.phi1 = 0.0;
    closed.sys.phi2 = 0.0;
    n_open.sys.phi2 = 0.0;
    c_open.sys.phi1 = 0.0;
    const QfiTrace q_r(res.times, smooth(detail::qfi_series(closed, detail::stream_closed, nullptr),
                                         spec.smoothing_window), "Q_R");
    const QfiTrace q_nr(res.times, smooth(detail::qfi_series(n_open, detail::stream_n_open, nullptr),
                                          spec.smoothing_window), "Q_nR");
    const QfiTrace q_cr(res.times, smooth(detail::qfi_series(c_open, detail::stream_c_open, nullptr),
                                          spec.smoothing_window), "Q_cR");
    res.recon_product.resize(res.times.size());
    for (std::size_t k = 0; k < res.times.size(); ++k)
      res.recon_product[k] = q_nr.values[k] * q_cr.values[k] / q_r.values[k];
    res.flows = subflows(q_r, q_nr, q_cr, spec.noise ? 0.5 : 0.0);
    std::vector<double> p(res.times.size());
    for (std::size_t k = 0; k < p.size(); ++k)
      p[k] = std::max(res.flows->sub_n[k], 0.0) + std::max(res.flows->sub_c[k], 0.0) +
             std::max(res.flows->sub_r[k], 0.0);
    res.measure_sub = cumulative_positive_integral(res.times, p);
    if (spec.wants("rates")) res.rates = extract_rates(q_r, q_nr, q_cr);
  }
  return res;
}

// One long_time_measure evaluation per sweep value; analytic traces, no
// shot noise.
inline std::vector<std::pair<double, double>> sweep(const SweepSpec& sw) {
  if (sw.values.empty()) throw std::invalid_argument("sweep: no values");
  if (sw.parameter != "phi1" && sw.parameter != "phi2")
    throw std::invalid_argument("sweep: parameter must be phi1 or phi2");
  std::vector<std::pair<double, double>> out;
  out.reserve(sw.values.size());
  for (double v : sw.values) {
    SystemConfig sys = sw.base.sys;
    (sw.parameter == "phi1" ? sys.phi1 : sys.phi2) = v;
    out.emplace_back(v, long_time_measure(sys, sw.base.bath, sw.horizon_ns));
  }
  return out;
}

}  // namespace qfiflow
