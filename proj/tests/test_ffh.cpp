#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "bwstab/dispersion.hpp"
#include "bwstab/ffh.hpp"
#include "bwstab/model.hpp"
#include "bwstab/perturbation.hpp"
#include "bwstab/stokes.hpp"

using namespace bwstab;

namespace {

double nearest(const std::vector<std::complex<double>>& set,
               std::complex<double> z) {
  double best = 1e300;
  for (const auto& w : set) best = std::min(best, std::abs(w - z));
  return best;
}

} // namespace

TEST_SUITE("ffh") {

TEST_CASE("assembly validates the truncation and sizes the matrix") {
  const StokesSeries ser = stokes_coefficients(ModelSetup::make(1.0));
  CHECK_THROWS_AS(assemble(ser, 1e-3, 0.1, 4), std::invalid_argument);

  const OperatorAssembly op = assemble(ser, 1e-3, 0.1, 16);
  CHECK(op.modes == 16);
  CHECK(op.mu == 0.1);
  CHECK(op.eps == 1e-3);
  CHECK(op.matrix.rows() == 2 * (2 * 16 + 1));
  CHECK(op.matrix.cols() == op.matrix.rows());
}

TEST_CASE("flat water reproduces the dispersion relation exactly") {
  const int N = 32;
  for (double alpha : {0.5, 1.0, 2.0}) {
    const ModelSetup s = ModelSetup::make(alpha);
    const StokesSeries ser = stokes_coefficients(s);
    for (double mu : {0.0, 0.25, -0.5}) {
      const SpectrumSlice sl = eigenvalues(assemble(ser, 0.0, mu, N));
      CHECK(sl.lambdas.size() == size_t(2 * (2 * N + 1)));
      std::vector<std::complex<double>> theory;
      for (int j = -N; j <= N; ++j)
        for (int sg : {1, -1})
          theory.emplace_back(0.0, -big_omega(s, sg, mu + j));
      double worst = 0;
      for (const auto& z : sl.lambdas)
        worst = std::max(worst, nearest(theory, z));
      CHECK(worst < 1e-13);
    }
  }
}

TEST_CASE("spectra carry the quadrafold symmetry") {
  const StokesSeries ser = stokes_coefficients(ModelSetup::make(1.0));
  const double mu = 0.25;
  const SpectrumSlice sp = eigenvalues(assemble(ser, 1e-3, mu, 32));
  const SpectrumSlice sm = eigenvalues(assemble(ser, 1e-3, -mu, 32));
  double worst = 0;
  for (const auto& z : sp.lambdas) {
    worst = std::max(worst, nearest(sp.lambdas, -std::conj(z)));
    worst = std::max(worst, nearest(sm.lambdas, std::conj(z)));
    worst = std::max(worst, nearest(sm.lambdas, -z));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("eigenvalues near the collision are truncation-robust") {
  const ModelSetup s = ModelSetup::make(1.0);
  const StokesSeries ser = stokes_coefficients(s);
  const CollisionPoint cp = solve_collision(s, 2);

  auto closest = [&](int N) {
    const SpectrumSlice sl = eigenvalues(assemble(ser, 1e-3, cp.mu0, N));
    std::complex<double> best = sl.lambdas.front();
    for (const auto& z : sl.lambdas)
      if (std::abs(z - cp.lambda0) < std::abs(best - cp.lambda0)) best = z;
    return best;
  };
  CHECK(std::abs(closest(24) - closest(40)) < 1e-12);
}

TEST_CASE("scan is deterministic across thread counts") {
  const StokesSeries ser = stokes_coefficients(ModelSetup::make(1.0));
  const std::vector<double> grid = {-0.3, -0.1, 0.05, 0.2, 0.45};
  const auto one = scan(ser, 1e-3, grid, 16, 1);
  const auto four = scan(ser, 1e-3, grid, 16, 4);
  REQUIRE(one.size() == four.size());
  for (size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].mu == four[i].mu);
    REQUIRE(one[i].lambdas.size() == four[i].lambdas.size());
    for (size_t j = 0; j < one[i].lambdas.size(); ++j)
      CHECK(one[i].lambdas[j] == four[i].lambdas[j]);
  }
}

TEST_CASE("isola extraction: p=2 reference cell") {
  const ModelSetup s = ModelSetup::make(1.0);
  const StokesSeries ser = stokes_coefficients(s);
  const IsolaAsymptotics a = p2_asymptotics(ser, solve_collision(s, 2));
  const AsymptoticIsola ai = evaluate_isola(a, 1e-3, 4);

  const IsolaMeasurement m = extract_isola(ser, 1e-3, 2, ai.floquet_lo,
                                           ai.floquet_hi, ai.lambda_star, {});
  REQUIRE(m.present);
  CHECK(m.p == 2);
  CHECK(m.eps == 1e-3);

  // frozen from a converged run; bisection at 1e-13 reproduces ~1e-11
  CHECK(m.floquet_lo_comp == doctest::Approx(-0.26090913182520).epsilon(2e-10));
  CHECK(m.floquet_hi_comp == doctest::Approx(-0.26090891794116).epsilon(2e-10));
  CHECK(m.mu_star == doctest::Approx(-0.260909024887066).epsilon(1e-9));
  CHECK(m.growth_max == doctest::Approx(7.103177e-08).epsilon(1e-5));
  CHECK(m.lambda_star.imag() == doctest::Approx(-0.48570451986).epsilon(1e-9));

  // the compensated interval contains the raw threshold crossings
  CHECK(m.floquet_lo_comp <= m.floquet_lo);
  CHECK(m.floquet_hi_comp >= m.floquet_hi);
  CHECK(m.floquet_lo < m.floquet_hi);

  // interior samples were recorded inside the interval
  REQUIRE(!m.mus.empty());
  CHECK(m.mus.size() == m.lambdas.size());
  for (double mu : m.mus) {
    CHECK(mu >= m.floquet_lo_comp - 1e-12);
    CHECK(mu <= m.floquet_hi_comp + 1e-12);
  }
  // the interior grid's best sample sits just below the line-search peak
  // (the grid straddles the maximum), never above it
  double peak = 0;
  for (const auto& z : m.lambdas) peak = std::max(peak, z.real());
  CHECK(peak <= m.growth_max * (1.0 + 1e-12));
  CHECK(peak >= m.growth_max * (1.0 - 1e-3));
}

TEST_CASE("isola extraction reports absence below threshold") {
  // at eps = 1e-5 the p=3 isola's growth ~ 3e-17 is far below the 1e-12
  // instability threshold, so nothing may be reported
  const ModelSetup s = ModelSetup::make(1.0);
  const StokesSeries ser = stokes_coefficients(s);
  const IsolaAsymptotics a = p3_asymptotics(ser, solve_collision(s, 3));
  const AsymptoticIsola ai = evaluate_isola(a, 1e-5, 4);
  const IsolaMeasurement m = extract_isola(ser, 1e-5, 3, ai.floquet_lo,
                                           ai.floquet_hi, ai.lambda_star, {});
  CHECK(!m.present);
}

} // TEST_SUITE
