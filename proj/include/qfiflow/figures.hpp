#pragma once

// Figure catalogue: canned experiment configurations that regenerate the
// datasets behind the publication figures (3a-3k, 4a-4c).  Every dataset
// is written as CSV plus a JSON manifest with enough detail to re-run it;
// emitted columns are checked against the module invariants first.

#include "qfiflow/config.hpp"
#include "qfiflow/experiments.hpp"
#include "qfiflow/io.hpp"
#include "qfiflow/version.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace qfiflow {

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"3a", "3b", "3c", "3d", "3e", "3f", "3g",
                                            "3h", "3i", "3j", "3k", "4a", "4b", "4c"};
  return ids;
}

namespace detail {

using column_list = std::vector<std::pair<std::string, std::vector<double>>>;

inline void check_dataset(const std::string& figure, const column_list& cols) {
  for (const auto& [name, values] : cols) {
    for (double v : values)
      if (!std::isfinite(v))
        throw std::runtime_error("dataset " + figure + ": non-finite value in column " + name);
    if (name.rfind("qfi", 0) == 0) {
      for (double v : values)
        if (v < -1e-6 || v > 4.0 + 1e-6)
          throw std::runtime_error("dataset " + figure + ": QFI bound violated in column " + name);
    }
    if (name.rfind("n_", 0) == 0) {
      for (std::size_t k = 1; k < values.size(); ++k)
        if (values[k] < values[k - 1] - 1e-12)
          throw std::runtime_error("dataset " + figure + ": measure not monotone in column " + name);
    }
  }
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k)
    v[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return v;
}

}  // namespace detail

// Emits fig<id>.csv and fig<id>.manifest.json into out_dir; returns the
// written paths (CSV first).
inline std::vector<std::filesystem::path> reproduce(const std::string& figure, std::uint64_t seed,
                                                    const std::filesystem::path& out_dir, bool noise) {
  const auto& ids = figure_ids();
  if (std::find(ids.begin(), ids.end(), figure) == ids.end()) {
    std::string known;
    for (const auto& id : ids) known += (known.empty() ? "" : ", ") + id;
    throw std::invalid_argument("unknown figure '" + figure + "' (known: " + known + ")");
  }

  ExperimentSpec base;
  base.grid = TimeGrid{0.0, 600.0, 2.0};
  base.noise = noise;
  base.smoothing_window = noise ? 5 : 1;
  base.seed = seed;

  auto spec_for = [&](double p1, double p2, int experiment, std::vector<std::string> outs,
                      std::size_t idx) {
    ExperimentSpec s = base;
    s.sys.phi1 = p1;
    s.sys.phi2 = p2;
    s.experiment = experiment;
    s.outputs = std::move(outs);
    s.seed = mix_seed(seed, 4096 + idx);
    return s;
  };

  detail::column_list cols;
  std::string axis_name = "t_ns";
  std::vector<double> axis;
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  ExperimentSpec primary;  // spec recorded in the manifest

  auto add_series = [&](const std::string& column, const ExperimentSpec& s) {
    series.push_back({{"column", column},
                      {"experiment", s.experiment},
                      {"phi1", s.sys.phi1},
                      {"phi2", s.sys.phi2}});
  };

  auto qfi_triple = [&](int experiment, bool vary_phi1, const std::vector<double>& angles,
                        const std::vector<std::string>& names) {
    for (std::size_t k = 0; k < angles.size(); ++k) {
      const double p1 = vary_phi1 ? angles[k] : 0.0;
      const double p2 = vary_phi1 ? 0.0 : angles[k];
      const ExperimentSpec s = spec_for(p1, p2, experiment, {"qfi"}, k);
      if (k == 0) primary = s;
      RunResult r = run(s);
      if (axis.empty()) axis = r.times;
      cols.emplace_back(names[k], std::move(r.qfi));
      add_series(names[k], s);
    }
  };

  if (figure == "3a") {
    qfi_triple(1, true, {0.0, pi / 4.0, pi / 2.0}, {"qfi_closed", "qfi_phi1_pi4", "qfi_phi1_pi2"});
  } else if (figure == "3b") {
    qfi_triple(1, false, {0.0, pi / 4.0, pi / 2.0}, {"qfi_closed", "qfi_phi2_pi4", "qfi_phi2_pi2"});
  } else if (figure == "3c") {
    const ExperimentSpec s = spec_for(pi / 2.0, pi / 2.0, 1, {"qfi", "flows"}, 0);
    primary = s;
    RunResult r = run(s);
    axis = r.times;
    cols.emplace_back("qfi", std::move(r.qfi));
    cols.emplace_back("qfi_reconstructed", std::move(r.recon_product));
    add_series("qfi", s);
    add_series("qfi_reconstructed", s);
  } else if (figure == "3d" || figure == "3e" || figure == "3f" || figure == "3g" || figure == "3h") {
    const double p1 = (figure == "3e") ? pi / 4.0 : (figure == "3f") ? pi / 2.0 : 0.0;
    const double p2 = (figure == "3g") ? pi / 4.0 : (figure == "3h") ? pi / 2.0 : 0.0;
    const ExperimentSpec s = spec_for(p1, p2, 1, {"qfi"}, 0);
    primary = s;
    RunResult r = run(s);
    axis = r.times;
    cols.emplace_back("flow", std::move(r.flow_total));
    add_series("flow", s);
  } else if (figure == "3i") {
    const ExperimentSpec s = spec_for(pi / 2.0, pi / 2.0, 1, {"qfi", "flows"}, 0);
    primary = s;
    RunResult r = run(s);
    axis = r.times;
    std::vector<double> sum(r.times.size());
    for (std::size_t k = 0; k < sum.size(); ++k)
      sum[k] = r.flows->sub_n[k] + r.flows->sub_c[k] + r.flows->sub_r[k];
    cols.emplace_back("flow", std::move(r.flow_total));
    cols.emplace_back("flow_subflow_sum", std::move(sum));
    add_series("flow", s);
    add_series("flow_subflow_sum", s);
  } else if (figure == "3j") {
    const ExperimentSpec s = spec_for(pi / 2.0, pi / 2.0, 1, {"qfi", "flows", "measure"}, 0);
    primary = s;
    RunResult r = run(s);
    axis = r.times;
    cols.emplace_back("n_subflows", std::move(r.measure_sub));
    cols.emplace_back("n_total_flow", std::move(r.measure_total));
    add_series("n_subflows", s);
    add_series("n_total_flow", s);
  } else if (figure == "3k") {
    primary = spec_for(0.0, 0.0, 1, {"measure"}, 0);
    SweepSpec sw;
    sw.parameter = "phi2";
    sw.values = detail::linspace(0.0, pi / 2.0, 15);
    sw.horizon_ns = 600.0;  // the experimental window; see the manifest
    sw.base = primary;
    axis_name = "phi2_rad";
    std::vector<double> measures;
    for (const auto& [value, measure] : sweep(sw)) {
      axis.push_back(value);
      measures.push_back(measure);
    }
    cols.emplace_back("n_measure", std::move(measures));
    series.push_back({{"column", "n_measure"},
                      {"sweep_parameter", sw.parameter},
                      {"horizon_ns", sw.horizon_ns},
                      {"experiment", 1},
                      {"phi1", 0.0}});
  } else if (figure == "4a") {
    for (std::size_t k = 0; k < 2; ++k) {
      const double p1 = (k == 0) ? 0.0 : pi / 2.0;
      const ExperimentSpec s = spec_for(p1, 0.0, 2, {"qfi"}, k);
      if (k == 0) primary = s;
      RunResult r = run(s);
      if (axis.empty()) axis = r.times;
      const std::string name = (k == 0) ? "qfi_phi1_0" : "qfi_phi1_pi2";
      cols.emplace_back(name, std::move(r.qfi));
      add_series(name, s);
    }
  } else if (figure == "4b" || figure == "4c") {
    const double p1 = (figure == "4b") ? 0.0 : pi / 2.0;
    const ExperimentSpec s = spec_for(p1, 0.0, 2, {"qfi"}, 0);
    primary = s;
    RunResult r = run(s);
    axis = r.times;
    cols.emplace_back("flow", std::move(r.flow_total));
    add_series("flow", s);
  }

  detail::check_dataset(figure, cols);

  const std::filesystem::path csv_path = out_dir / ("fig" + figure + ".csv");
  const std::filesystem::path manifest_path = out_dir / ("fig" + figure + ".manifest.json");

  std::vector<std::string> header{axis_name};
  std::vector<std::vector<double>> data;
  for (auto& [name, values] : cols) {
    header.push_back(name);
    data.push_back(std::move(values));
  }
  write_csv(csv_path, header, axis, data);

  nlohmann::ordered_json manifest;
  manifest["tool"] = "qfiflow";
  manifest["version"] = version;
  manifest["kind"] = "figure";
  manifest["figure"] = figure;
  manifest["seed"] = seed;
  manifest["noise"] = noise;
  manifest["config"] = spec_to_json(primary);
  manifest["series"] = series;
  manifest["columns"] = header;
  manifest["files"] = {csv_path.filename().string()};
  write_text_atomic(manifest_path, manifest.dump(2) + "\n");

  return {csv_path, manifest_path};
}

// Re-runs the figure recorded in a manifest; the dataset must come out
// byte-identical for the same seed.
inline std::vector<std::filesystem::path> reproduce_from_manifest(const std::filesystem::path& manifest_path,
                                                                  const std::filesystem::path& out_dir) {
  std::ifstream in(manifest_path);
  if (!in) throw std::invalid_argument("cannot open manifest " + manifest_path.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::invalid_argument(manifest_path.string() + ": " + err.what());
  }
  if (!m.contains("figure")) throw std::invalid_argument(manifest_path.string() + ": not a figure manifest");
  return reproduce(m["figure"].get<std::string>(), m.value("seed", std::uint64_t{0}), out_dir,
                   m.value("noise", false));
}

}  // namespace qfiflow
