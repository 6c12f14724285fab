#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "bwstab/dispersion.hpp"
#include "bwstab/model.hpp"
#include "bwstab/perturbation.hpp"
#include "bwstab/report.hpp"
#include "bwstab/stokes.hpp"
#include "bwstab/version.hpp"

using namespace bwstab;
using nlohmann::json;

namespace {

std::string render(auto&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

} // namespace

TEST_SUITE("report") {

TEST_CASE("log-log fits recover synthetic power laws") {
  std::vector<double> x, y;
  for (double v : {1e-3, 2e-3, 5e-3, 1e-2, 3e-2})
    x.push_back(v), y.push_back(3.25 * std::pow(v, 2.5));
  const PowerFit f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(f.slope_stderr < 1e-12);
  CHECK(f.max_residual < 1e-12);
  CHECK(f.n == 5);

  CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_loglog({1.0, 2.0, 3.0}, {1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_loglog({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_loglog({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}),
                  std::invalid_argument);
}

TEST_CASE("curve distance measures against segments, not vertices") {
  // unit circle as a two-branch curve
  std::vector<IsolaCurvePoint> curve;
  const int n = 257;
  for (int i = 0; i < n; ++i) {
    const double t = std::numbers::pi * i / (n - 1); // upper half angle
    IsolaCurvePoint pt;
    pt.mu = std::cos(t);
    pt.lambda_plus = {std::cos(t), std::sin(t)};
    pt.lambda_minus = {std::cos(t), -std::sin(t)};
    curve.push_back(pt);
  }
  // points exactly on the circle, between vertices: distance ~ sagitta only
  std::vector<std::complex<double>> eigs;
  for (double t : {0.004, 1.234, 2.345})
    eigs.push_back({std::cos(t), std::sin(t)});
  CHECK(curve_distance(curve, eigs) < 5e-5); // (pi/256)^2/8 ~ 1.9e-5
  // a point radially displaced measures its displacement
  eigs = {{1.05, 0.0}};
  CHECK(curve_distance(curve, eigs) == doctest::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("17-digit formatting round-trips doubles") {
  for (double v : {0.1, -1e-3, 3.141592653589793, 2.2250738585072014e-308,
                   -0.0, 123456789.12345678}) {
    const std::string s = fmt_g17(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(fmt_g17(1.0) == "1");
  CHECK(fmt_g17(0.5) == "0.5");
}

TEST_CASE("meta carries the artifact version first") {
  const MetaList m = make_meta({{"alpha", "1"}, {"p", "2"}});
  REQUIRE(m.size() == 3);
  CHECK(m[0].first == "artifact_version");
  CHECK(m[0].second == version_string);
  CHECK(m[1].first == "alpha");
  CHECK(m[2].first == "p");

  CHECK(parse_format("csv") == EmitFormat::csv);
  CHECK(parse_format("json") == EmitFormat::json);
  CHECK_THROWS_AS(parse_format("yaml"), std::invalid_argument);
}

TEST_CASE("emitters are deterministic and their JSON parses back") {
  const ModelSetup s = ModelSetup::make(1.0);
  const StokesSeries ser = stokes_coefficients(s);
  const CollisionPoint cp = solve_collision(s, 3);
  const MetaList meta = make_meta({{"alpha", "1"}});

  SUBCASE("collision") {
    auto once = [&](EmitFormat f) {
      return render([&](std::ostream& os) {
        emit_collision(cp, 1.0, meta, f, os);
      });
    };
    CHECK(once(EmitFormat::json) == once(EmitFormat::json));
    const json j = json::parse(once(EmitFormat::json));
    CHECK(j["alpha"] == 1.0);
    CHECK(j["p"] == 3);
    CHECK(j["n"] == -4);
    CHECK(j["m"] == -1);
    CHECK(j["k"].get<double>() ==
          doctest::Approx(-3.7428026947281601).epsilon(1e-15));
    CHECK(j["lambda0_im"].get<double>() ==
          doctest::Approx(-1.3327728160488754).epsilon(1e-15));
    CHECK(j["meta"]["artifact_version"] == version_string);

    const std::string csv = once(EmitFormat::csv);
    CHECK(csv.find("alpha,p,k,mu0,n,m,lambda0_im,residual,half_integer_tie\n") !=
          std::string::npos);
    CHECK(csv.find("# artifact_version=") == 0);
  }

  SUBCASE("collision ladder") {
    const auto ladder = collision_ladder(s, 3);
    const std::string out = render([&](std::ostream& os) {
      emit_collision(ladder, 1.0, meta, EmitFormat::json, os);
    });
    const json j = json::parse(out);
    REQUIRE(j["collisions"].size() == 4);
    // ladder covers -3,-2,2,3 in ascending order
    CHECK(j["collisions"][0]["p"] == -3);
    CHECK(j["collisions"][3]["p"] == 3);
  }

  SUBCASE("spectrum slices") {
    std::vector<SpectrumSlice> slices(2);
    slices[0].mu = 0.1;
    slices[0].lambdas = {{0.0, 1.5}, {2e-8, -0.25}};
    slices[1].mu = 0.2;
    slices[1].lambdas = {{-1e-8, 0.5}};
    auto out = [&](EmitFormat f) {
      return render([&](std::ostream& os) { emit(slices, meta, f, os); });
    };
    CHECK(out(EmitFormat::csv) == out(EmitFormat::csv));
    const std::string csv = out(EmitFormat::csv);
    CHECK(csv.find("mu,re_lambda,im_lambda\n") != std::string::npos);
    // one row per eigenvalue
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 3 + 1 + 2);
    const json j = json::parse(out(EmitFormat::json));
    REQUIRE(j["slices"].size() == 2);
    CHECK(j["slices"][0]["lambdas"].size() == 2);
    CHECK(j["slices"][0]["lambdas"][1][0].get<double>() == 2e-8);
  }

  SUBCASE("sweep") {
    const std::vector<SweepPoint> pts = {{0.5, 0.01}, {1.0, -0.02}};
    const std::string csv = render(
        [&](std::ostream& os) { emit(pts, meta, EmitFormat::csv, os); });
    CHECK(csv.find("alpha,S\n") != std::string::npos);
    CHECK(csv.find("1,-0.02\n") != std::string::npos);
    const json j = json::parse(render(
        [&](std::ostream& os) { emit(pts, meta, EmitFormat::json, os); }));
    CHECK(j["points"][1]["S"].get<double>() == -0.02);
  }

  SUBCASE("stokes") {
    const std::string csv = render([&](std::ostream& os) {
      emit_stokes_samples(ser, 1e-3, 8, meta, EmitFormat::csv, os);
    });
    CHECK(csv.find("x,eta,u\n") != std::string::npos);
    CHECK(csv.find("# c=") != std::string::npos); // speed in the meta block
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          3 /*meta incl. c*/ + 1 /*header*/ + 8);
    CHECK_THROWS_AS(render([&](std::ostream& os) {
                      emit_stokes_samples(ser, 1e-3, 1, meta, EmitFormat::csv,
                                          os);
                    }),
                    std::invalid_argument);

    const json j = json::parse(render([&](std::ostream& os) {
      emit_stokes_coeffs(ser, meta, os);
    }));
    CHECK(j["c0"].get<double>() ==
          doctest::Approx(0.87269362089782965).epsilon(1e-15));
    REQUIRE(j["eta"].size() == 4); // orders 1..4
    REQUIRE(j["eta"][0].size() == 5); // harmonics 0..4
    CHECK(j["eta"][0][1].get<double>() == 0.5);
  }

  SUBCASE("asymptotic isola") {
    const IsolaAsymptotics a = p3_asymptotics(ser, cp);
    const AsymptoticIsola ai = evaluate_isola(a, 1e-3, 4);
    const std::string out = render([&](std::ostream& os) {
      emit_isola_asymptotic(a, ai, meta, os);
    });
    CHECK(out == render([&](std::ostream& os) {
            emit_isola_asymptotic(a, ai, meta, os);
          }));
    const json j = json::parse(out);
    CHECK(j["p"] == 3);
    CHECK(j["mu2"].get<double>() ==
          doctest::Approx(-0.5840474199265095).epsilon(1e-14));
    CHECK(j["degenerate"] == false);
    CHECK(j["evaluated"]["present"] == true);
    CHECK(j["evaluated"]["growth_max"].get<double>() ==
          doctest::Approx(3.1831774932788847e-11).epsilon(1e-12));
    CHECK(j["diagnostics"]["roundtrip_rel"].get<double>() < 1e-12);
  }

  SUBCASE("empty table report still emits the frozen header") {
    Table1Report rep;
    rep.eps = 1e-3;
    rep.modes = 32;
    const std::string csv = render(
        [&](std::ostream& os) { emit(rep, EmitFormat::csv, os); });
    CHECK(csv.find("p,alpha,eps,modes,ref_lo,ref_hi,num_lo,num_hi,asym_lo,"
                   "asym_hi,num_mu_star,asym_mu_star,num_growth,asym_growth,"
                   "diff_endpoint_lo,diff_endpoint_hi,diff_mu_star,diff_growth,"
                   "diff_im_center,err_numeric,tol_numeric,pass_numeric,"
                   "err_asym,tol_asym,pass_asym,pass\n") != std::string::npos);
    const json j = json::parse(render(
        [&](std::ostream& os) { emit(rep, EmitFormat::json, os); }));
    CHECK(j["all_pass"] == false);
    CHECK(j["rows"].empty());
  }
}

TEST_CASE("file writing") {
  const std::string path = "bwstab_test_emit.csv";
  write_file(path, "a,b\n1,2\n");
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == "a,b\n1,2\n");
  std::remove(path.c_str());

  CHECK_THROWS_AS(write_file("no_such_dir/x.csv", "y"), std::runtime_error);
}

} // TEST_SUITE
