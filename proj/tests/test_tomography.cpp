#include "qfiflow/tomography.hpp"

#include "qfiflow/nv_model.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace qfiflow;

TEST_CASE("noiseless counts invert exactly") {
  const BlochVector truth{0.3, -0.5, 0.4};
  const DensityMatrix rho = state_from_bloch(truth);
  MeasurementModel model;
  const PhotonCounts counts = expected_counts(rho, model);
  const BlochVector back = bloch_from_counts(counts);
  REQUIRE(back.sx == Catch::Approx(truth.sx).margin(1e-12));
  REQUIRE(back.sy == Catch::Approx(truth.sy).margin(1e-12));
  REQUIRE(back.sz == Catch::Approx(truth.sz).margin(1e-12));

  // references bracket every record
  REQUIRE(counts.l_1 < counts.l_x);
  REQUIRE(counts.l_x < counts.l_0);
  REQUIRE(counts.l_0 == Catch::Approx(model.expected(1.0)));
  REQUIRE(counts.l_1 == Catch::Approx(model.expected(0.0)));
}

TEST_CASE("maximally mixed state sits midway between the references") {
  const DensityMatrix rho(cmatrix::Identity(2, 2) / 2.0);
  const PhotonCounts counts = expected_counts(rho, MeasurementModel{});
  const double mid = (counts.l_0 + counts.l_1) / 2.0;
  REQUIRE(counts.l_x == Catch::Approx(mid));
  REQUIRE(counts.l_y == Catch::Approx(mid));
  REQUIRE(counts.l_z == Catch::Approx(mid));
  const BlochVector b = bloch_from_counts(counts);
  REQUIRE(std::abs(b.sx) < 1e-12);
  REQUIRE(std::abs(b.sy) < 1e-12);
  REQUIRE(std::abs(b.sz) < 1e-12);
}

TEST_CASE("degenerate contrast and bad models are rejected") {
  PhotonCounts flat;
  flat.l_0 = 100.0;
  flat.l_1 = 100.0;
  REQUIRE_THROWS_AS(bloch_from_counts(flat), std::invalid_argument);

  MeasurementModel bad;
  bad.bright_rate = 0.1;
  bad.dark_rate = 0.1;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.bright_rate = 0.15;
  bad.dark_rate = -0.01;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  MeasurementModel zero_shots;
  zero_shots.shots = 0;
  REQUIRE_THROWS_AS(zero_shots.validate(), std::invalid_argument);
}

TEST_CASE("poisson sampler has the right moments") {
  SECTION("large mean (rejection branch)") {
    Rng rng(2024);
    const double mean = 60000.0;
    const int n = 200;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(rng.poisson(mean));
      sum += x;
      sumsq += x * x;
    }
    const double avg = sum / n;
    const double var = sumsq / n - avg * avg;
    REQUIRE(std::abs(avg - mean) < 100.0);           // SE of the mean is ~17
    REQUIRE(var > 0.7 * mean);                       // Poisson: variance == mean
    REQUIRE(var < 1.3 * mean);
  }

  SECTION("small mean (inversion branch)") {
    Rng rng(7);
    const double mean = 3.0;
    const int n = 2000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::int64_t x = rng.poisson(mean);
      REQUIRE(x >= 0);
      sum += static_cast<double>(x);
    }
    REQUIRE(sum / n == Catch::Approx(mean).margin(0.2));
  }

  SECTION("edge cases") {
    Rng rng(1);
    REQUIRE(rng.poisson(0.0) == 0);
    REQUIRE_THROWS_AS(rng.poisson(-1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(rng.poisson(std::nan("")), std::invalid_argument);
    for (int i = 0; i < 100; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
    }
  }

  SECTION("determinism") {
    Rng a(99), b(99), c(100);
    bool any_diff = false;
    for (int i = 0; i < 20; ++i) {
      const std::int64_t xa = a.poisson(5000.0);
      REQUIRE(xa == b.poisson(5000.0));
      any_diff = any_diff || (xa != c.poisson(5000.0));
    }
    REQUIRE(any_diff);
  }
}

TEST_CASE("simulated counts are seed-reproducible") {
  const DensityMatrix rho = state_from_bloch({0.2, 0.1, -0.6});
  MeasurementModel model;
  model.rng_seed = 31337;
  const PhotonCounts a = simulate_counts(rho, model);
  const PhotonCounts b = simulate_counts(rho, model);
  REQUIRE(a.l_x == b.l_x);
  REQUIRE(a.l_y == b.l_y);
  REQUIRE(a.l_z == b.l_z);
  REQUIRE(a.l_0 == b.l_0);
  REQUIRE(a.l_1 == b.l_1);
  model.rng_seed = 31338;
  const PhotonCounts c = simulate_counts(rho, model);
  REQUIRE((a.l_x != c.l_x || a.l_y != c.l_y || a.l_0 != c.l_0));
}

TEST_CASE("shot-noise errors match the propagated poisson variance") {
  // delta method on f = (2 L_P - L_0 - L_1)/(L_0 - L_1):
  //   var(f) = [4 L_P + (1+f)^2 L_0 + (1-f)^2 L_1] / (L_0 - L_1)^2
  const BlochVector truth{0.3, -0.5, 0.4};
  const DensityMatrix rho = state_from_bloch(truth);
  MeasurementModel model;
  const PhotonCounts mean = expected_counts(rho, model);
  const double span = mean.l_0 - mean.l_1;
  const auto sigma = [&](double l_p, double f) {
    return std::sqrt(4.0 * l_p + (1.0 + f) * (1.0 + f) * mean.l_0 +
                     (1.0 - f) * (1.0 - f) * mean.l_1) /
           span;
  };
  const double sig_x = sigma(mean.l_x, -truth.sx);
  const double sig_y = sigma(mean.l_y, truth.sy);
  const double sig_z = sigma(mean.l_z, truth.sz);

  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    model.rng_seed = seed;
    const BlochVector est = bloch_from_counts(simulate_counts(rho, model));
    const bool ok = std::abs(est.sx - truth.sx) <= 3.0 * sig_x &&
                    std::abs(est.sy - truth.sy) <= 3.0 * sig_y &&
                    std::abs(est.sz - truth.sz) <= 3.0 * sig_z;
    inside += ok ? 1 : 0;
  }
  REQUIRE(inside >= 97);  // 3 sigma, 3 components: expect ~99 of 100
}

TEST_CASE("mle_project truncates and renormalizes the spectrum") {
  SECTION("single negative eigenvalue") {
    cmatrix m = cmatrix::Zero(2, 2);
    m(0, 0) = 1.2;
    m(1, 1) = -0.2;
    const DensityMatrix out = mle_project(m);
    REQUIRE(out.matrix()(0, 0).real() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(out.matrix()(1, 1).real() == Catch::Approx(0.0).margin(1e-12));
  }

  SECTION("uniform deficit redistribution") {
    cmatrix m = cmatrix::Zero(4, 4);
    m(0, 0) = 0.7;
    m(1, 1) = 0.5;
    m(2, 2) = -0.1;
    m(3, 3) = -0.1;
    const DensityMatrix out = mle_project(m);
    REQUIRE(out.matrix()(0, 0).real() == Catch::Approx(0.6).margin(1e-12));
    REQUIRE(out.matrix()(1, 1).real() == Catch::Approx(0.4).margin(1e-12));
    REQUIRE(out.matrix()(2, 2).real() == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(out.matrix()(3, 3).real() == Catch::Approx(0.0).margin(1e-12));
  }

  SECTION("redistribution that re-creates a negative eigenvalue iterates") {
    cmatrix m = cmatrix::Zero(3, 3);
    m(0, 0) = 1.5;
    m(1, 1) = 0.02;
    m(2, 2) = -0.52;
    const DensityMatrix out = mle_project(m);
    REQUIRE(out.matrix()(0, 0).real() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(out.matrix()(1, 1).real() == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(out.matrix()(2, 2).real() == Catch::Approx(0.0).margin(1e-12));
  }

  SECTION("physical states pass through unchanged") {
    const DensityMatrix rho = state_from_bloch({0.1, 0.2, -0.3});
    const DensityMatrix out = mle_project(rho.matrix());
    REQUIRE((out.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("invalid inputs are rejected") {
    cmatrix bad(2, 2);
    bad << 0.5, complexd(0.1, 0.1), complexd(0.1, 0.2), 0.5;  // not Hermitian
    REQUIRE_THROWS_AS(mle_project(bad), std::invalid_argument);
    REQUIRE_THROWS_AS(mle_project(cmatrix::Identity(2, 2)), std::invalid_argument);  // trace 2
    REQUIRE_THROWS_AS(mle_project(cmatrix::Zero(2, 3)), std::invalid_argument);
  }
}

TEST_CASE("reconstruct_qubit projects an unphysical bloch vector onto the ball") {
  // span 18000; l_x chosen so the raw inversion gives s_x = +1.1
  PhotonCounts counts;
  counts.l_0 = 60000.0;
  counts.l_1 = 42000.0;
  counts.l_x = 41100.0;
  counts.l_y = 51000.0;
  counts.l_z = 51000.0;
  const BlochVector raw = bloch_from_counts(counts);
  REQUIRE(raw.sx == Catch::Approx(1.1).margin(1e-12));
  REQUIRE(std::sqrt(raw.r2()) > 1.0);

  const DensityMatrix rho = reconstruct_qubit(counts);
  const BlochVector b = bloch_vector(rho);
  REQUIRE(std::sqrt(b.r2()) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(b.sx == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(rho.purity() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("two-qubit tomography converges to the true state") {
  // X state: the shape the probe pair actually takes under dephasing
  cmatrix m = cmatrix::Zero(4, 4);
  m(0, 0) = 0.5;
  m(3, 3) = 0.5;
  m(0, 3) = 0.45;
  m(3, 0) = 0.45;
  const DensityMatrix rho(m);

  MeasurementModel model;
  model.shots = 1000000000LL;  // drives shot noise below 5e-4 per Pauli
  model.rng_seed = 5;
  const DensityMatrix est = two_qubit_tomography(rho, model);
  REQUIRE((est.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("two-qubit tomography on the bell probe keeps QFI physical") {
  cvector bell(4);
  bell << 1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0);
  const DensityMatrix rho = DensityMatrix::from_pure(PureState(bell));

  MeasurementModel model;  // experimental defaults: 4e5 shots, 30% contrast
  model.rng_seed = 1;
  const TwoQubitQfi q = qfi_two_qubit(two_qubit_tomography(rho, model));
  REQUIRE(q.value > 3.5);
  REQUIRE(q.value <= 4.0 + 1e-9);
  REQUIRE(q.useful_entanglement);

  // the estimate never exceeds the physical bound, whatever the seed
  for (std::uint64_t seed = 2; seed < 7; ++seed) {
    model.rng_seed = seed;
    const TwoQubitQfi qs = qfi_two_qubit(two_qubit_tomography(rho, model));
    REQUIRE(qs.value <= 4.0 + 1e-9);
  }
}

TEST_CASE("two-qubit tomography of the maximally mixed state finds no information") {
  const DensityMatrix rho(cmatrix::Identity(4, 4) / 4.0);
  MeasurementModel model;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    model.rng_seed = seed;
    const TwoQubitQfi q = qfi_two_qubit(two_qubit_tomography(rho, model));
    REQUIRE(q.value < 0.1);
    REQUIRE_FALSE(q.useful_entanglement);
  }
}

TEST_CASE("two-qubit tomography is deterministic per seed") {
  const DensityMatrix rho = reduced_state(SystemConfig{}, BathConfig{}, 218.0, 2);
  MeasurementModel model;
  model.rng_seed = 77;
  const DensityMatrix a = two_qubit_tomography(rho, model);
  const DensityMatrix b = two_qubit_tomography(rho, model);
  REQUIRE((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() == 0.0);

  const DensityMatrix single = state_from_bloch({0.0, 0.0, 0.5});
  REQUIRE_THROWS_AS(two_qubit_tomography(single, model), std::invalid_argument);
}
