// qfiflow command-line tool: simulate reduced dynamics, decompose QFI
// flows, evaluate the non-Markovianity measure, sweep preparation angles,
// emulate photon-count tomography and regenerate the figure datasets.

#include "qfiflow/config.hpp"
#include "qfiflow/experiments.hpp"
#include "qfiflow/figures.hpp"
#include "qfiflow/io.hpp"
#include "qfiflow/version.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool noise = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* noise_opt = nullptr;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "configuration file (key = value or JSON)");
  args.seed_opt = sub->add_option("--seed", args.seed, "RNG seed (overrides the config)");
  sub->add_option("--out", args.out_dir, "output directory")->capture_default_str();
  args.noise_opt = sub->add_flag("--noise", args.noise, "enable photon shot noise");
}

qfiflow::LoadedConfig load(const CommonArgs& args) {
  qfiflow::LoadedConfig cfg;
  if (!args.config_path.empty()) cfg = qfiflow::load_config(args.config_path);
  if (args.seed_opt->count() > 0) cfg.spec.seed = args.seed;
  if (args.noise_opt->count() > 0) cfg.spec.noise = true;
  cfg.sweep.base = cfg.spec;
  return cfg;
}

void ensure_output(qfiflow::ExperimentSpec& spec, const std::string& what) {
  if (!spec.wants(what)) spec.outputs.push_back(what);
}

void write_manifest(const std::filesystem::path& path, const std::string& kind,
                    const qfiflow::ExperimentSpec& spec, const std::vector<std::string>& columns,
                    const std::vector<std::string>& files,
                    const nlohmann::ordered_json& extra = nlohmann::ordered_json()) {
  nlohmann::ordered_json m;
  m["tool"] = "qfiflow";
  m["version"] = qfiflow::version;
  m["kind"] = kind;
  m["config"] = qfiflow::spec_to_json(spec);
  if (!extra.is_null()) m["sweep"] = extra;
  m["columns"] = columns;
  m["files"] = files;
  qfiflow::write_text_atomic(path, m.dump(2) + "\n");
}

void report(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << f.string() << "\n";
}

int cmd_simulate(const CommonArgs& args) {
  qfiflow::LoadedConfig cfg = load(args);
  ensure_output(cfg.spec, "qfi");
  const qfiflow::RunResult res = qfiflow::run(cfg.spec);
  const std::filesystem::path dir(args.out_dir);

  std::vector<std::string> header{"t_ns", "qfi"};
  std::vector<std::vector<double>> data{res.qfi};
  if (cfg.spec.smoothing_window > 1) {
    header.push_back("qfi_raw");
    data.push_back(res.qfi_raw);
  }
  std::vector<std::filesystem::path> files{dir / "qfi.csv"};
  qfiflow::write_csv(files[0], header, res.times, data);

  if (cfg.spec.wants("states")) {
    const Eigen::Index d = res.states.front().dim();
    std::vector<std::string> sheader{"t_ns"};
    std::vector<std::vector<double>> sdata;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i; j < d; ++j) {
        sheader.push_back("rho_" + std::to_string(i) + std::to_string(j) + "_re");
        if (j > i) sheader.push_back("rho_" + std::to_string(i) + std::to_string(j) + "_im");
      }
    sdata.resize(sheader.size() - 1, std::vector<double>(res.times.size()));
    for (std::size_t k = 0; k < res.times.size(); ++k) {
      std::size_t col = 0;
      const qfiflow::cmatrix& m = res.states[k].matrix();
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) {
          sdata[col++][k] = m(i, j).real();
          if (j > i) sdata[col++][k] = m(i, j).imag();
        }
    }
    files.push_back(dir / "states.csv");
    qfiflow::write_csv(files.back(), sheader, res.times, sdata);
  }

  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.filename().string());
  names.push_back("manifest.json");
  files.push_back(dir / "manifest.json");
  write_manifest(files.back(), "simulate", cfg.spec, header, names);
  report(files);
  return 0;
}

int cmd_flows(const CommonArgs& args) {
  qfiflow::LoadedConfig cfg = load(args);
  ensure_output(cfg.spec, "flows");
  if (cfg.spec.grid.size() < 3) throw std::invalid_argument("flows: need at least three grid points");
  const qfiflow::RunResult res = qfiflow::run(cfg.spec);
  const std::filesystem::path dir(args.out_dir);

  std::vector<std::string> header{"t_ns", "total"};
  std::vector<std::vector<double>> data{res.flow_total};
  if (cfg.spec.experiment == 1) {
    header.insert(header.end(), {"sub_n", "sub_c", "sub_r"});
    data.push_back(res.flows->sub_n);
    data.push_back(res.flows->sub_c);
    data.push_back(res.flows->sub_r);
  }
  std::vector<std::filesystem::path> files{dir / "flows.csv", dir / "manifest.json"};
  qfiflow::write_csv(files[0], header, res.times, data);
  write_manifest(files[1], "flows", cfg.spec, header, {"flows.csv", "manifest.json"});
  report(files);
  return 0;
}

int cmd_measure(const CommonArgs& args) {
  qfiflow::LoadedConfig cfg = load(args);
  ensure_output(cfg.spec, "measure");
  if (cfg.spec.grid.size() < 3) throw std::invalid_argument("measure: need at least three grid points");
  const qfiflow::RunResult res = qfiflow::run(cfg.spec);
  const std::filesystem::path dir(args.out_dir);

  std::vector<std::string> header{"t_ns"};
  std::vector<std::vector<double>> data;
  if (cfg.spec.experiment == 1) {
    header.push_back("n_subflows");
    data.push_back(res.measure_sub);
  }
  header.push_back("n_total_flow");
  data.push_back(res.measure_total);
  std::vector<std::filesystem::path> files{dir / "measure.csv", dir / "manifest.json"};
  qfiflow::write_csv(files[0], header, res.times, data);
  write_manifest(files[1], "measure", cfg.spec, header, {"measure.csv", "manifest.json"});
  report(files);
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  qfiflow::LoadedConfig cfg = load(args);
  qfiflow::SweepSpec sw = cfg.sweep;
  sw.base = cfg.spec;
  if (sw.values.empty()) {  // default: 15 points across [0, pi/2]
    sw.values.resize(15);
    for (std::size_t k = 0; k < sw.values.size(); ++k)
      sw.values[k] = qfiflow::pi / 2.0 * static_cast<double>(k) / 14.0;
  }
  const auto points = qfiflow::sweep(sw);

  std::vector<double> axis, measures;
  for (const auto& [v, n] : points) {
    axis.push_back(v);
    measures.push_back(n);
  }
  const std::filesystem::path dir(args.out_dir);
  const std::vector<std::string> header{sw.parameter + "_rad", "n_measure"};
  std::vector<std::filesystem::path> files{dir / "sweep.csv", dir / "manifest.json"};
  qfiflow::write_csv(files[0], header, axis, {measures});
  nlohmann::ordered_json extra;
  extra["parameter"] = sw.parameter;
  extra["values"] = sw.values;
  extra["horizon_ns"] = sw.horizon_ns;
  write_manifest(files[1], "sweep", cfg.spec, header, {"sweep.csv", "manifest.json"}, extra);
  report(files);
  return 0;
}

int cmd_tomo(const CommonArgs& args) {
  qfiflow::LoadedConfig cfg = load(args);
  qfiflow::ExperimentSpec& spec = cfg.spec;
  spec.validate();
  spec.model.validate();
  const std::vector<double> times = spec.grid.times();
  const auto states = qfiflow::reduced_system_trace(spec.sys, spec.bath, spec.grid, spec.experiment);
  const std::filesystem::path dir(args.out_dir);
  std::vector<std::filesystem::path> files;
  std::vector<std::string> header;

  if (spec.experiment == 1) {
    std::vector<std::vector<double>> counts(5, std::vector<double>(times.size()));
    std::vector<std::vector<double>> bloch(4, std::vector<double>(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k) {
      qfiflow::MeasurementModel m = spec.model;
      m.rng_seed = qfiflow::mix_seed(spec.seed, static_cast<std::uint64_t>(k));
      const qfiflow::PhotonCounts c = spec.noise ? qfiflow::simulate_counts(states[k], m)
                                                 : qfiflow::expected_counts(states[k], m);
      counts[0][k] = c.l_x;
      counts[1][k] = c.l_y;
      counts[2][k] = c.l_z;
      counts[3][k] = c.l_0;
      counts[4][k] = c.l_1;
      const qfiflow::BlochVector b = qfiflow::bloch_from_counts(c);
      const qfiflow::DensityMatrix rec = qfiflow::reconstruct_qubit(c);
      bloch[0][k] = b.sx;
      bloch[1][k] = b.sy;
      bloch[2][k] = b.sz;
      bloch[3][k] = qfiflow::qfi_bloch(qfiflow::bloch_vector(rec));
    }
    files = {dir / "counts.csv", dir / "bloch.csv", dir / "manifest.json"};
    qfiflow::write_csv(files[0], {"t_ns", "l_x", "l_y", "l_z", "l_0", "l_1"}, times, counts);
    qfiflow::write_csv(files[1], {"t_ns", "s_x", "s_y", "s_z", "qfi"}, times, bloch);
    header = {"t_ns", "s_x", "s_y", "s_z", "qfi"};
    write_manifest(files[2], "tomo", spec, header, {"counts.csv", "bloch.csv", "manifest.json"});
  } else {
    std::vector<std::vector<double>> out(2, std::vector<double>(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k) {
      qfiflow::MeasurementModel m = spec.model;
      m.rng_seed = qfiflow::mix_seed(spec.seed, static_cast<std::uint64_t>(k));
      if (!spec.noise) {
        const qfiflow::TwoQubitQfi q = qfiflow::qfi_two_qubit(states[k]);
        out[0][k] = q.value;
        out[1][k] = q.useful_entanglement ? 1.0 : 0.0;
      } else {
        const qfiflow::TwoQubitQfi q = qfiflow::qfi_two_qubit(qfiflow::two_qubit_tomography(states[k], m));
        out[0][k] = q.value;
        out[1][k] = q.useful_entanglement ? 1.0 : 0.0;
      }
    }
    files = {dir / "tomo.csv", dir / "manifest.json"};
    header = {"t_ns", "qfi_recon", "entangled"};
    qfiflow::write_csv(files[0], header, times, out);
    write_manifest(files[1], "tomo", spec, header, {"tomo.csv", "manifest.json"});
  }
  report(files);
  return 0;
}

int cmd_reproduce(const CommonArgs& args, const std::string& figure, const std::string& manifest) {
  std::vector<std::filesystem::path> files;
  if (!manifest.empty()) {
    files = qfiflow::reproduce_from_manifest(manifest, args.out_dir);
  } else if (!figure.empty()) {
    files = qfiflow::reproduce(figure, args.seed, args.out_dir, args.noise);
  } else {
    throw std::invalid_argument("reproduce: give a figure id or --from-manifest");
  }
  report(files);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QFI flow toolkit for an NV electron qubit with nuclear-spin dephasing channels"};
  app.set_version_flag("--version", std::string("qfiflow ") + qfiflow::version);
  app.require_subcommand(1);

  CommonArgs sim_args, flow_args, meas_args, sweep_args, tomo_args, rep_args;
  std::string figure, manifest;

  CLI::App* sim = app.add_subcommand("simulate", "reduced dynamics and QFI trace");
  add_common(sim, sim_args);
  CLI::App* flows = app.add_subcommand("flows", "QFI flow and its channel decomposition");
  add_common(flows, flow_args);
  CLI::App* measure = app.add_subcommand("measure", "cumulative non-Markovianity measure");
  add_common(measure, meas_args);
  CLI::App* sweep = app.add_subcommand("sweep", "long-time measure vs preparation angle");
  add_common(sweep, sweep_args);
  CLI::App* tomo = app.add_subcommand("tomo", "photon-count tomography emulation");
  add_common(tomo, tomo_args);
  CLI::App* reproduce = app.add_subcommand("reproduce", "regenerate a figure dataset");
  add_common(reproduce, rep_args);
  reproduce->add_option("figure", figure, "figure id (3a..3k, 4a..4c)");
  reproduce->add_option("--from-manifest", manifest, "re-run from a figure manifest");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (flows->parsed()) return cmd_flows(flow_args);
    if (measure->parsed()) return cmd_measure(meas_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    if (tomo->parsed()) return cmd_tomo(tomo_args);
    if (reproduce->parsed()) return cmd_reproduce(rep_args, figure, manifest);
  } catch (const std::exception& err) {
    std::cerr << "qfiflow: error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
