#include "qfiflow/experiments.hpp"

#include "qfiflow/config.hpp"
#include "qfiflow/figures.hpp"
#include "qfiflow/io.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace qfiflow;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("qfiflow_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  Table t;
  std::string line;
  REQUIRE(std::getline(in, line));
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
    REQUIRE(row.size() == t.header.size());
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

}  // namespace

TEST_CASE("run: noiseless pipeline reproduces the analytic factorization") {
  ExperimentSpec spec;
  spec.sys.phi1 = pi / 2.0;
  spec.sys.phi2 = pi / 2.0;
  spec.grid = TimeGrid{0.0, 600.0, 0.1};
  spec.outputs = {"qfi", "flows", "measure"};
  const RunResult res = run(spec);

  REQUIRE(res.times.size() == 6001);
  REQUIRE(res.qfi == res.qfi_raw);  // window 1
  for (std::size_t k = 0; k < res.times.size(); k += 250) {
    REQUIRE(res.qfi[k] ==
            Catch::Approx(qfi_factorized(res.times[k], spec.sys, spec.bath)).margin(1e-10));
    REQUIRE(res.recon_product[k] == Catch::Approx(res.qfi[k]).margin(1e-10));
  }

  REQUIRE(res.flows.has_value());
  REQUIRE(res.measure_sub.back() == Catch::Approx(1.9773049692583724).margin(1e-6));
  REQUIRE(res.measure_total.back() == Catch::Approx(1.6373825266048678).margin(1e-6));
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    REQUIRE(res.measure_sub[k] >= res.measure_total[k] - 1e-12);
    if (k > 0) {
      REQUIRE(res.measure_sub[k] >= res.measure_sub[k - 1]);
      REQUIRE(res.measure_total[k] >= res.measure_total[k - 1]);
    }
  }
  REQUIRE_FALSE(res.rates.has_value());  // not requested
}

TEST_CASE("run: rates arrive only when requested") {
  ExperimentSpec spec;
  spec.sys.phi1 = pi / 4.0;
  spec.grid = TimeGrid{0.0, 100.0, 0.1};
  spec.outputs = {"qfi", "rates"};
  const RunResult res = run(spec);
  REQUIRE(res.rates.has_value());
  REQUIRE(res.flows.has_value());  // decomposition is shared
  REQUIRE(res.rates->size() == res.times.size());
  for (double g : res.rates->gamma_n) REQUIRE(std::isfinite(g));
}

TEST_CASE("run: shot-noise pipeline is seed-reproducible") {
  ExperimentSpec spec;
  spec.sys.phi1 = pi / 2.0;
  spec.sys.phi2 = pi / 2.0;
  spec.grid = TimeGrid{0.0, 100.0, 2.0};
  spec.noise = true;
  spec.seed = 12345;
  const RunResult a = run(spec);
  const RunResult b = run(spec);
  REQUIRE(a.qfi_raw == b.qfi_raw);

  ExperimentSpec other = spec;
  other.seed = 54321;
  const RunResult c = run(other);
  REQUIRE(a.qfi_raw != c.qfi_raw);

  double dev = 0.0;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    REQUIRE(a.qfi_raw[k] >= 0.0);
    REQUIRE(a.qfi_raw[k] <= 1.0 + 1e-12);
    dev += std::abs(a.qfi_raw[k] - qfi_factorized(a.times[k], spec.sys, spec.bath));
  }
  REQUIRE(dev / static_cast<double>(a.times.size()) < 0.1);  // noise, not garbage
}

TEST_CASE("run: noisy two-qubit estimates respect the QFI bound") {
  ExperimentSpec spec;
  spec.experiment = 2;
  spec.grid = TimeGrid{0.0, 100.0, 2.0};
  spec.noise = true;
  spec.seed = 7;
  const RunResult res = run(spec);
  for (double q : res.qfi_raw) {
    REQUIRE(q >= 0.0);
    REQUIRE(q <= 4.0 + 1e-9);
  }
}

TEST_CASE("run: smoothing applies the declared window") {
  ExperimentSpec spec;
  spec.sys.phi2 = pi / 2.0;
  spec.grid = TimeGrid{0.0, 50.0, 0.5};
  spec.smoothing_window = 5;
  const RunResult res = run(spec);
  REQUIRE(res.qfi == smooth(res.qfi_raw, 5));
  REQUIRE(res.qfi != res.qfi_raw);  // curvature makes the average differ
}

TEST_CASE("run: experiment 2 has no channel decomposition") {
  ExperimentSpec spec;
  spec.experiment = 2;
  spec.grid = TimeGrid{0.0, 100.0, 1.0};
  spec.outputs = {"qfi", "flows", "measure"};
  const RunResult res = run(spec);
  REQUIRE_FALSE(res.flows.has_value());
  REQUIRE(res.measure_sub.empty());
  REQUIRE(res.recon_product.empty());
  REQUIRE(res.flow_total.size() == res.times.size());
  REQUIRE(res.measure_total.size() == res.times.size());
  // analytic anchor: Q'(0) = 4 Q_R(0) for the closed nitrogen channel
  REQUIRE(res.qfi[0] == Catch::Approx(3.646506233403828).margin(1e-9));
}

TEST_CASE("run: states are kept only when requested, tiny grids degrade cleanly") {
  ExperimentSpec spec;
  spec.grid = TimeGrid{0.0, 10.0, 1.0};
  spec.outputs = {"qfi", "states"};
  const RunResult with_states = run(spec);
  REQUIRE(with_states.states.size() == with_states.times.size());

  spec.outputs = {"qfi"};
  REQUIRE(run(spec).states.empty());

  spec.grid = TimeGrid{0.0, 1.0, 1.0};  // two points: no derivative possible
  spec.outputs = {"qfi", "flows"};
  const RunResult tiny = run(spec);
  REQUIRE(tiny.qfi.size() == 2);
  REQUIRE(tiny.flow_total.empty());
  REQUIRE_FALSE(tiny.flows.has_value());

  spec.outputs = {"qfi", "bogus"};
  REQUIRE_THROWS_AS(run(spec), std::invalid_argument);
  spec.outputs = {"qfi"};
  spec.smoothing_window = 4;
  REQUIRE_THROWS_AS(run(spec), std::invalid_argument);
}

TEST_CASE("sweep: the long-time measure grows with the opening angle") {
  SweepSpec sw;
  sw.parameter = "phi2";
  sw.horizon_ns = 600.0;
  for (int k = 0; k < 15; ++k) sw.values.push_back(pi / 2.0 * static_cast<double>(k) / 14.0);
  const auto points = sweep(sw);
  REQUIRE(points.size() == 15);
  REQUIRE(points.front().second <= 1e-2);
  REQUIRE(points.back().second == Catch::Approx(3.4987195741496526).margin(1e-6));
  for (std::size_t k = 1; k < points.size(); ++k)
    REQUIRE(points[k].second >= points[k - 1].second - 1e-9);

  SweepSpec bad;
  REQUIRE_THROWS_AS(sweep(bad), std::invalid_argument);  // no values
  bad.values = {0.0};
  bad.parameter = "phi3";
  REQUIRE_THROWS_AS(sweep(bad), std::invalid_argument);
}

TEST_CASE("config: key = value files cover every setting") {
  const auto dir = temp_dir("config");
  const auto path = dir / "full.conf";
  write_file(path,
             "# full configuration\n"
             "experiment = 1\n"
             "system.a_n_mhz = -2.16\n"
             "system.a_c_mhz = 12.8\n"
             "system.phi1 = 0.5pi   # half pi\n"
             "system.phi2 = 0.25pi\n"
             "system.varphi1 = 0.1\n"
             "system.varphi2 = -0.2\n"
             "bath.enabled = true\n"
             "bath.t2_star_ns = 1026\n"
             "bath.alpha = 0.89\n"
             "bath.phi0 = 0.37pi\n"
             "bath.a_c0_mhz = 0.4\n"
             "bath.varphi0 = 0.21pi\n"
             "grid.start_ns = 0\n"
             "grid.end_ns = 500\n"
             "grid.dt_ns = 0.5\n"
             "noise.enabled = on\n"
             "noise.shots = 250000\n"
             "noise.bright_rate = 0.16\n"
             "noise.dark_rate = 0.1\n"
             "smoothing.window = 5\n"
             "seed = 42\n"
             "outputs = qfi, flows, measure\n"
             "sweep.parameter = phi1\n"
             "sweep.values = 0, 0.25pi, 0.5pi\n"
             "sweep.horizon_ns = 600\n");
  const LoadedConfig cfg = load_config(path);
  REQUIRE(cfg.spec.experiment == 1);
  REQUIRE(cfg.spec.sys.phi1 == Catch::Approx(pi / 2.0));
  REQUIRE(cfg.spec.sys.phi2 == Catch::Approx(pi / 4.0));
  REQUIRE(cfg.spec.sys.varphi2 == Catch::Approx(-0.2));
  REQUIRE(cfg.spec.bath.enabled);
  REQUIRE(cfg.spec.bath.phi0 == Catch::Approx(0.37 * pi));
  REQUIRE(cfg.spec.grid.end_ns == Catch::Approx(500.0));
  REQUIRE(cfg.spec.grid.dt_ns == Catch::Approx(0.5));
  REQUIRE(cfg.spec.noise);
  REQUIRE(cfg.spec.model.shots == 250000);
  REQUIRE(cfg.spec.model.bright_rate == Catch::Approx(0.16));
  REQUIRE(cfg.spec.smoothing_window == 5);
  REQUIRE(cfg.spec.seed == 42);
  REQUIRE(cfg.spec.outputs == std::vector<std::string>{"qfi", "flows", "measure"});
  REQUIRE(cfg.has_sweep);
  REQUIRE(cfg.sweep.parameter == "phi1");
  REQUIRE(cfg.sweep.values.size() == 3);
  REQUIRE(cfg.sweep.values[1] == Catch::Approx(pi / 4.0));
  REQUIRE(cfg.sweep.horizon_ns == Catch::Approx(600.0));
  REQUIRE(cfg.sweep.base.sys.phi1 == Catch::Approx(pi / 2.0));  // base mirrors the spec
  std::filesystem::remove_all(dir);
}

TEST_CASE("config: errors carry file and line") {
  const auto dir = temp_dir("config_err");
  const auto path = dir / "bad.conf";

  write_file(path, "phi1 = 0\nbogus_key = 3\n");
  try {
    load_config(path);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& err) {
    const std::string what = err.what();
    REQUIRE(what.find(":2") != std::string::npos);
    REQUIRE(what.find("bogus_key") != std::string::npos);
  }

  write_file(path, "system.phi1 = banana\n");
  try {
    load_config(path);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& err) {
    REQUIRE(std::string(err.what()).find(":1") != std::string::npos);
  }

  write_file(path, "just a line without equals\n");
  REQUIRE_THROWS_WITH(load_config(path), Catch::Matchers::ContainsSubstring("key = value"));

  write_file(path, "seed = -3\n");
  REQUIRE_THROWS_AS(load_config(path), std::invalid_argument);

  REQUIRE_THROWS_AS(load_config(dir / "missing.conf"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config: pi-suffixed literals") {
  REQUIRE(detail::parse_number("pi") == Catch::Approx(pi));
  REQUIRE(detail::parse_number("-pi") == Catch::Approx(-pi));
  REQUIRE(detail::parse_number("2pi") == Catch::Approx(2.0 * pi));
  REQUIRE(detail::parse_number("0.5pi") == Catch::Approx(pi / 2.0));
  REQUIRE(detail::parse_number(" 0.37 pi ") == Catch::Approx(0.37 * pi));
  REQUIRE(detail::parse_number("1.5e2") == Catch::Approx(150.0));
  REQUIRE_THROWS_AS(detail::parse_number("x"), std::invalid_argument);
  REQUIRE_THROWS_AS(detail::parse_number(""), std::invalid_argument);
  REQUIRE_THROWS_AS(detail::parse_bool("maybe"), std::invalid_argument);
  REQUIRE(detail::parse_bool("off") == false);
}

TEST_CASE("config: JSON round trip through the manifest form") {
  ExperimentSpec orig;
  orig.experiment = 2;
  orig.sys.phi1 = 0.3;
  orig.sys.varphi1 = -0.7;
  orig.bath.alpha = 1.2;
  orig.grid = TimeGrid{10.0, 110.0, 0.25};
  orig.noise = true;
  orig.model.shots = 123456;
  orig.model.dark_rate = 0.09;
  orig.smoothing_window = 3;
  orig.seed = 987654321;
  orig.outputs = {"qfi", "states"};

  const auto dir = temp_dir("config_json");
  const auto bare = dir / "bare.json";
  write_file(bare, spec_to_json(orig).dump(2));
  nlohmann::ordered_json manifest;
  manifest["tool"] = "qfiflow";
  manifest["config"] = spec_to_json(orig);
  const auto wrapped = dir / "manifest.json";
  write_file(wrapped, manifest.dump(2));

  for (const auto& path : {bare, wrapped}) {
    const LoadedConfig cfg = load_config(path);
    REQUIRE(cfg.spec.experiment == orig.experiment);
    REQUIRE(cfg.spec.sys.phi1 == Catch::Approx(orig.sys.phi1));
    REQUIRE(cfg.spec.sys.varphi1 == Catch::Approx(orig.sys.varphi1));
    REQUIRE(cfg.spec.bath.alpha == Catch::Approx(orig.bath.alpha));
    REQUIRE(cfg.spec.grid.start_ns == Catch::Approx(orig.grid.start_ns));
    REQUIRE(cfg.spec.grid.dt_ns == Catch::Approx(orig.grid.dt_ns));
    REQUIRE(cfg.spec.noise == orig.noise);
    REQUIRE(cfg.spec.model.shots == orig.model.shots);
    REQUIRE(cfg.spec.model.dark_rate == Catch::Approx(orig.model.dark_rate));
    REQUIRE(cfg.spec.smoothing_window == orig.smoothing_window);
    REQUIRE(cfg.spec.seed == orig.seed);
    REQUIRE(cfg.spec.outputs == orig.outputs);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("io: nine significant digits") {
  REQUIRE(format_sig9(1.0 / 3.0) == "0.333333333");
  REQUIRE(format_sig9(0.0) == "0");
  REQUIRE(format_sig9(78.125) == "78.125");
  REQUIRE(format_sig9(1234567891.0) == "1.23456789e+09");
  REQUIRE(format_sig9(-2.5e-7) == "-2.5e-07");
}

TEST_CASE("io: csv output") {
  const auto dir = temp_dir("io");
  const auto path = dir / "t.csv";
  write_csv(path, {"t_ns", "a", "b"}, {0.0, 1.0}, {{1.5, 2.25}, {-1.0, 0.5}});
  REQUIRE(slurp(path) == "t_ns,a,b\n0,1.5,-1\n1,2.25,0.5\n");

  REQUIRE_THROWS_AS(write_csv(path, {"t_ns", "a"}, {0.0}, {{1.0}, {2.0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(write_csv(path, {"t_ns", "a"}, {0.0, 1.0}, {{1.0}}), std::invalid_argument);

  bool tmp_left = false;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    tmp_left = tmp_left || e.path().extension() == ".tmp";
  REQUIRE_FALSE(tmp_left);
  std::filesystem::remove_all(dir);
}

TEST_CASE("figures: 3c dataset is internally consistent and replayable") {
  const auto dir = temp_dir("fig3c");
  const auto files = reproduce("3c", 7, dir, false);
  REQUIRE(files.size() == 2);
  REQUIRE(files[0].filename() == "fig3c.csv");
  REQUIRE(files[1].filename() == "fig3c.manifest.json");

  const Table t = read_table(files[0]);
  REQUIRE(t.header == std::vector<std::string>{"t_ns", "qfi", "qfi_reconstructed"});
  REQUIRE(t.rows.size() == 301);
  REQUIRE(t.rows.front()[0] == 0.0);
  REQUIRE(t.rows.back()[0] == 600.0);
  for (const auto& row : t.rows) REQUIRE(row[1] == Catch::Approx(row[2]).margin(1e-7));

  nlohmann::json m = nlohmann::json::parse(slurp(files[1]));
  REQUIRE(m["figure"] == "3c");
  REQUIRE(m["seed"] == 7);
  REQUIRE(m["noise"] == false);
  REQUIRE(m["config"]["system"]["phi1"].get<double>() == Catch::Approx(pi / 2.0));
  REQUIRE(m["columns"] == nlohmann::json({"t_ns", "qfi", "qfi_reconstructed"}));

  const auto dir2 = temp_dir("fig3c_replay");
  const auto replay = reproduce_from_manifest(files[1], dir2);
  REQUIRE(slurp(replay[0]) == slurp(files[0]));
  REQUIRE(slurp(replay[1]) == slurp(files[1]));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("figures: 3k sweep dataset") {
  const auto dir = temp_dir("fig3k");
  const auto files = reproduce("3k", 0, dir, false);
  const Table t = read_table(files[0]);
  REQUIRE(t.header == std::vector<std::string>{"phi2_rad", "n_measure"});
  REQUIRE(t.rows.size() == 15);
  REQUIRE(t.rows.front()[0] == 0.0);
  REQUIRE(t.rows.back()[0] == Catch::Approx(pi / 2.0));
  REQUIRE(t.rows.front()[1] <= 1e-2);
  REQUIRE(t.rows.back()[1] == Catch::Approx(3.4987195741496526).margin(1e-6));
  for (std::size_t k = 1; k < t.rows.size(); ++k) REQUIRE(t.rows[k][1] >= t.rows[k - 1][1] - 1e-9);
  std::filesystem::remove_all(dir);
}

TEST_CASE("figures: noisy datasets still pass the module invariants") {
  const auto dir = temp_dir("fig_noise");
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const auto files = reproduce("3j", seed, dir, true);
    const Table t = read_table(files[0]);
    REQUIRE(t.header == std::vector<std::string>{"t_ns", "n_subflows", "n_total_flow"});
    for (std::size_t k = 1; k < t.rows.size(); ++k) {
      REQUIRE(t.rows[k][1] >= t.rows[k - 1][1] - 1e-12);
      REQUIRE(t.rows[k][2] >= t.rows[k - 1][2] - 1e-12);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("figures: unknown ids and foreign manifests are rejected") {
  const auto dir = temp_dir("fig_bad");
  REQUIRE_THROWS_WITH(reproduce("9z", 0, dir, false), Catch::Matchers::ContainsSubstring("3a"));
  const auto not_manifest = dir / "plain.json";
  write_file(not_manifest, "{\"tool\": \"qfiflow\"}");
  REQUIRE_THROWS_AS(reproduce_from_manifest(not_manifest, dir), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
