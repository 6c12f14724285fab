#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "bwstab/dispersion.hpp"
#include "bwstab/model.hpp"
#include "bwstab/perturbation.hpp"
#include "bwstab/stokes.hpp"

using namespace bwstab;

namespace {

IsolaAsymptotics build(double alpha, int p) {
  const ModelSetup s = ModelSetup::make(alpha);
  const StokesSeries ser = stokes_coefficients(s);
  const CollisionPoint cp = solve_collision(s, p);
  return std::abs(p) == 2 ? p2_asymptotics(ser, cp) : p3_asymptotics(ser, cp);
}

} // namespace

TEST_SUITE("perturbation") {

TEST_CASE("internal consistency diagnostics vanish") {
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (int p : {2, 3}) {
      CAPTURE(alpha);
      CAPTURE(p);
      const IsolaAsymptotics a = build(alpha, p);
      CHECK(a.lambda1_abs < 1e-13);
      CHECK(a.mu1_abs < 1e-13);
      CHECK(a.roundtrip_rel < 1e-12);
      if (p == 3) {
        CHECK(a.T3_rel < 1e-12);
        CHECK(a.T4_rel < 1e-12);
        CHECK(a.re_lambda2_rel < 1e-12);
        CHECK(a.re_lambda4_rel < 1e-12);
        CHECK(a.mu3_independence < 1e-12);
        CHECK(a.gamma1_determined);
      }
      CHECK_FALSE(a.degenerate);
    }
  }
}

TEST_CASE("second-order coefficients: p=2, alpha=1") {
  const IsolaAsymptotics a = build(1.0, 2);
  CHECK(a.p == 2);
  CHECK(a.mu2 == doctest::Approx(-0.32375155773148295).epsilon(1e-12));
  CHECK(a.S == doctest::Approx(0.08800539077921145).epsilon(1e-12));
  CHECK(a.interval_halfwidth ==
        doctest::Approx(0.10694122700886877).epsilon(1e-12));
  CHECK(a.growth_coeff == doctest::Approx(0.07103130956322289).epsilon(1e-12));
  CHECK(a.lambda2.real() ==
        doctest::Approx(0.07103130956322289).epsilon(1e-12));
  CHECK(a.lambda2.imag() ==
        doctest::Approx(-0.2651029901573434).epsilon(1e-12));
  CHECK(a.omega_n == doctest::Approx(-1.4873763461458687).epsilon(1e-13));
  CHECK(a.omega_m == doctest::Approx(-0.2580108956497905).epsilon(1e-13));
  CHECK(a.cg_n == doctest::Approx(-0.511423158444912).epsilon(1e-13));
  CHECK(a.cg_m == doctest::Approx(-1.8398408613263681).epsilon(1e-13));
  CHECK(a.P2_n == doctest::Approx(-0.09952894595084816).epsilon(1e-12));
  CHECK(a.P2_m == doctest::Approx(0.3305483546751016).epsilon(1e-12));
  // on-isola p=2 eigenvalues split along the real axis at second order
  CHECK(a.lambda2.real() > 0);
}

TEST_CASE("third/fourth-order coefficients: p=3, alpha=1") {
  const IsolaAsymptotics a = build(1.0, 3);
  CHECK(a.p == 3);
  CHECK(a.mu2 == doctest::Approx(-0.5840474199265095).epsilon(1e-12));
  CHECK(a.S == doctest::Approx(0.07324291846987507).epsilon(1e-12));
  CHECK(a.interval_halfwidth ==
        doctest::Approx(0.060753660245599445).epsilon(1e-12));
  CHECK(a.growth_coeff ==
        doctest::Approx(0.031831774932788846).epsilon(1e-12));
  // lambda2 purely imaginary for p=3 (instability enters at third order)
  CHECK(std::abs(a.lambda2.real()) < 1e-14);
  CHECK(a.lambda2.imag() ==
        doctest::Approx(-0.08211656629767256).epsilon(1e-12));
  CHECK(a.mu4 == doctest::Approx(-2.0994252596408205).epsilon(1e-11));
  CHECK(std::abs(a.lambda4.real()) < 1e-12);
  CHECK(a.lambda4.imag() == doctest::Approx(-8.211986484137654).epsilon(1e-11));
  CHECK(std::abs(a.gamma0.real()) < 1e-12);
  CHECK(a.gamma0.imag() ==
        doctest::Approx(0.33354660902152683).epsilon(1e-10));
}

TEST_CASE("p and -p isolas are conjugate mirrors") {
  for (int p : {2, 3}) {
    const IsolaAsymptotics ap = build(1.0, p);
    const IsolaAsymptotics am = build(1.0, -p);
    const AsymptoticIsola ip = evaluate_isola(ap, 1e-3, 4);
    const AsymptoticIsola im = evaluate_isola(am, 1e-3, 4);
    CHECK(std::abs(ip.floquet_lo + im.floquet_hi) < 1e-13);
    CHECK(std::abs(ip.floquet_hi + im.floquet_lo) < 1e-13);
    CHECK(std::abs(ip.growth_max - im.growth_max) < 1e-15);
    CHECK(std::abs(ip.mu_star + im.mu_star) < 1e-13);
    CHECK(std::abs(im.lambda_star - std::conj(ip.lambda_star)) < 1e-13);
  }
}

TEST_CASE("evaluated intervals scale at the predicted order") {
  const IsolaAsymptotics a2 = build(1.0, 2);
  const AsymptoticIsola w1 = evaluate_isola(a2, 1e-3, 4);
  const AsymptoticIsola w2 = evaluate_isola(a2, 2e-3, 4);
  const double width1 = w1.floquet_hi - w1.floquet_lo;
  const double width2 = w2.floquet_hi - w2.floquet_lo;
  // widths subtract O(0.26) endpoints to get an O(1e-7) difference, so the
  // ratio carries ~1e-9 cancellation noise; growth is computed multiplicatively
  CHECK(width2 / width1 == doctest::Approx(4.0).epsilon(1e-8)); // eps^2
  CHECK(w2.growth_max / w1.growth_max == doctest::Approx(4.0).epsilon(1e-12));

  const IsolaAsymptotics a3 = build(1.0, 3);
  const AsymptoticIsola v1 = evaluate_isola(a3, 1e-3, 4);
  const AsymptoticIsola v2 = evaluate_isola(a3, 2e-3, 4);
  CHECK((v2.floquet_hi - v2.floquet_lo) / (v1.floquet_hi - v1.floquet_lo) ==
        doctest::Approx(8.0).epsilon(1e-6)); // eps^3; widths are ~6e-11
  CHECK(v2.growth_max / v1.growth_max == doctest::Approx(8.0).epsilon(1e-12));

  // the fourth-order term moves the p=3 center but not the width
  const AsymptoticIsola o3 = evaluate_isola(a3, 1e-3, 3);
  CHECK(std::abs((v1.floquet_hi - v1.floquet_lo) -
                 (o3.floquet_hi - o3.floquet_lo)) < 1e-15);
  const double shift = a3.mu4 * 1e-12; // mu4 eps^4
  CHECK(std::abs((v1.floquet_lo - o3.floquet_lo) - shift) < 1e-15);
}

TEST_CASE("isola curves close up and attain the predicted growth") {
  for (int p : {2, 3}) {
    const IsolaAsymptotics a = build(1.0, p);
    const double eps = 1e-3;
    const auto curve = asymptotic_ellipse(a, eps, 257, 4);
    REQUIRE(curve.size() == 257);
    const AsymptoticIsola ai = evaluate_isola(a, eps, 4);

    // branches meet at the interval endpoints (lambda is O(1), so a few ulp)
    CHECK(std::abs(curve.front().lambda_plus - curve.front().lambda_minus) <
          1e-13);
    CHECK(std::abs(curve.back().lambda_plus - curve.back().lambda_minus) <
          1e-13);
    CHECK(curve.front().mu == doctest::Approx(ai.floquet_lo).epsilon(1e-14));
    CHECK(curve.back().mu == doctest::Approx(ai.floquet_hi).epsilon(1e-14));

    double peak = 0;
    for (const auto& pt : curve) {
      peak = std::max(peak, pt.lambda_plus.real());
      // the two branches are reflections through the imaginary axis up to
      // the fourth-order imaginary drift
      CHECK(pt.lambda_plus.real() ==
            doctest::Approx(-pt.lambda_minus.real()).epsilon(1e-12));
    }
    CHECK(std::abs(peak - ai.growth_max) <= 1e-6 * ai.growth_max + 1e-15);
  }
  CHECK_THROWS_AS(asymptotic_ellipse(build(1.0, 2), 1e-3, 1, 4),
                  std::invalid_argument);
}

TEST_CASE("S sweeps and the degenerate-isola root") {
  // p=2: no sign change over a coarse grid
  std::vector<double> alphas;
  for (int i = 0; i <= 30; ++i) alphas.push_back(0.05 + i * (4.95 / 30));
  for (const auto& pt : sweep_S(2, alphas)) CHECK(pt.S > 0);

  // p=3: S changes sign near alpha = 1.1862
  const double root = find_S3_root(1.0, 1.4, 100);
  CHECK(root == doctest::Approx(1.1862011337).epsilon(1e-8));
  CHECK_THROWS_AS(find_S3_root(0.3, 0.5, 50), std::runtime_error);

  // at the root the cubic coefficient vanishes and the isola degenerates
  const IsolaAsymptotics a = build(root, 3);
  CHECK(a.degenerate);
  CHECK(std::abs(a.S) < 1e-10);
  CHECK_FALSE(evaluate_isola(a, 1e-3, 4).present);
}

TEST_CASE("asymptotics reject mismatched collision input") {
  const ModelSetup s = ModelSetup::make(1.0);
  const StokesSeries ser = stokes_coefficients(s);
  CHECK_THROWS_AS(p2_asymptotics(ser, solve_collision(s, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(p3_asymptotics(ser, solve_collision(s, 2)),
                  std::invalid_argument);
}

} // TEST_SUITE
