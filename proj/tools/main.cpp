// bwstab: Stokes waves of a bidirectional Whitham system, their stability
// spectra, and the p = 2, 3 instability-isola asymptotics.
//
// Every subcommand writes one deterministic dataset (CSV or JSON, 17
// significant digits, no timestamps) to --out, so repeated runs with the same
// flags are byte-identical.  Exit codes: 0 success, 1 regression failure
// (table1 only), 2 usage error.

#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bwstab/dispersion.hpp"
#include "bwstab/ffh.hpp"
#include "bwstab/model.hpp"
#include "bwstab/perturbation.hpp"
#include "bwstab/report.hpp"
#include "bwstab/stokes.hpp"
#include "bwstab/version.hpp"

namespace {

using namespace bwstab;

struct GlobalOpts {
  std::string out = "-";
  std::string format; // empty = subcommand default
  int modes = 32;
  int threads = 1;

  EmitFormat fmt(EmitFormat fallback) const {
    return format.empty() ? fallback : parse_format(format);
  }
  // Datasets that are JSON by structure (nested records) reject csv instead
  // of silently emitting something unusable.
  EmitFormat json_only(const char* what) const {
    if (!format.empty() && parse_format(format) != EmitFormat::json)
      throw CLI::ValidationError(std::string(what) +
                                 " emits JSON only; drop --format or pass "
                                 "--format json");
    return EmitFormat::json;
  }
};

std::string g17(double v) { return fmt_g17(v); }

IsolaAsymptotics make_asymptotics(const StokesSeries& ser,
                                  const CollisionPoint& cp) {
  return std::abs(cp.p) == 2 ? p2_asymptotics(ser, cp)
                             : p3_asymptotics(ser, cp);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Stokes-wave stability toolkit: high-frequency instability isolas of a "
      "fully dispersive Boussinesq-Whitham system"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version_string));

  GlobalOpts g;
  app.add_option("--out", g.out, "Output path ('-' writes to stdout)")
      ->capture_default_str();
  app.add_option("--format", g.format,
                 "Output format (default: csv for tabular data, json for "
                 "record data)")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--modes", g.modes,
                 "Fourier truncation N for eigenvalue computations")
      ->check(CLI::Range(8, 4096))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for scans")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();

  // --- collision ------------------------------------------------------
  double alpha = 1.0, eps = 1e-3;
  int p = 2, ladder_pmax = 0;
  auto* c_cmd = app.add_subcommand(
      "collision", "Solve the dispersion collision condition for one p, or "
                   "the whole ladder up to --ladder");
  c_cmd->add_option("--alpha", alpha, "Depth parameter alpha = kappa h0")
      ->required()
      ->check(CLI::PositiveNumber);
  auto* popt = c_cmd->add_option("--p", p, "Collision index (|p| >= 2)");
  c_cmd->add_option("--ladder", ladder_pmax,
                    "Solve all collisions with 2 <= |p| <= this value")
      ->check(CLI::Range(2, 64));
  c_cmd->fallthrough();

  // --- stokes ---------------------------------------------------------
  int samples = 256;
  bool coeffs = false;
  auto* s_cmd = app.add_subcommand(
      "stokes", "Evaluate the small-amplitude Stokes wave (profile samples "
                "or raw expansion coefficients)");
  s_cmd->add_option("--alpha", alpha, "Depth parameter")
      ->required()
      ->check(CLI::PositiveNumber);
  auto* s_eps = s_cmd->add_option("--epsilon", eps, "Amplitude parameter");
  s_cmd->add_option("--samples", samples, "Profile sample count over one period")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  s_cmd->add_flag("--coeffs", coeffs,
                  "Dump the expansion coefficients (JSON) instead of samples");
  s_cmd->fallthrough();

  // --- spectrum -------------------------------------------------------
  double mu_min = -0.5, mu_max = 0.5;
  int mu_steps = 101;
  auto* sp_cmd = app.add_subcommand(
      "spectrum", "Floquet-Fourier-Hill spectrum over a Floquet-parameter "
                  "grid (one row per eigenvalue)");
  sp_cmd->add_option("--alpha", alpha, "Depth parameter")
      ->required()
      ->check(CLI::PositiveNumber);
  sp_cmd->add_option("--epsilon", eps, "Amplitude parameter")->required();
  sp_cmd->add_option("--mu-min", mu_min, "Grid start")->required();
  sp_cmd->add_option("--mu-max", mu_max, "Grid end")->required();
  sp_cmd->add_option("--mu-steps", mu_steps, "Grid points (inclusive ends)")
      ->check(CLI::Range(1, 1 << 20))
      ->required();
  sp_cmd->fallthrough();

  // --- isola ----------------------------------------------------------
  std::string method = "both";
  int order = 4;
  auto* i_cmd = app.add_subcommand(
      "isola", "Measure one instability isola numerically, asymptotically, "
               "or side by side (JSON)");
  i_cmd->add_option("--method", method, "numeric | asymptotic | both")
      ->check(CLI::IsMember({"numeric", "asymptotic", "both"}))
      ->capture_default_str();
  i_cmd->add_option("--p", p, "Isola index (+-2 or +-3)")->required();
  i_cmd->add_option("--alpha", alpha, "Depth parameter")
      ->required()
      ->check(CLI::PositiveNumber);
  i_cmd->add_option("--epsilon", eps, "Amplitude parameter")->required();
  i_cmd->add_option("--order", order,
                    "Truncation order of the asymptotic evaluation")
      ->check(CLI::Range(2, 4))
      ->capture_default_str();
  i_cmd->fallthrough();

  // --- sweep-s3 -------------------------------------------------------
  double alpha_min = 0.05, alpha_max = 5.0;
  int grid = 400;
  int sweep_p = 3;
  auto* sw_cmd = app.add_subcommand(
      "sweep-s3", "Sweep the isola-width coefficient S over alpha and report "
                  "any sign-change root");
  sw_cmd->add_option("--alpha-min", alpha_min, "Sweep start")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sw_cmd->add_option("--alpha-max", alpha_max, "Sweep end")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sw_cmd->add_option("--grid", grid, "Grid points")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  sw_cmd->add_option("--p", sweep_p, "Isola index (2 or 3)")
      ->check(CLI::IsMember({2, 3}))
      ->capture_default_str();
  sw_cmd->fallthrough();

  // --- table1 ---------------------------------------------------------
  auto* t_cmd = app.add_subcommand(
      "table1", "Recompute the six reference isola intervals (p = 2, 3; "
                "alpha = 1/2, 1, 2) with both pipelines and judge them");
  t_cmd->fallthrough();

  // --- convergence ----------------------------------------------------
  std::vector<double> eps_list;
  auto* cv_cmd = app.add_subcommand(
      "convergence", "Numeric-vs-asymptotic convergence study over an "
                     "amplitude list");
  cv_cmd->add_option("--p", p, "Isola index (2 or 3)")
      ->check(CLI::IsMember({2, 3}))
      ->required();
  cv_cmd->add_option("--alpha", alpha, "Depth parameter")
      ->required()
      ->check(CLI::PositiveNumber);
  cv_cmd->add_option("--epsilons", eps_list,
                     "Comma-separated amplitude list (>= 3 values)")
      ->required()
      ->delimiter(',');
  cv_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2; // --help/--version exit 0; bad usage exits 2
  }

  try {
    std::ostringstream os;
    int exit_code = 0;

    if (*c_cmd) {
      if (!*popt && ladder_pmax == 0)
        throw CLI::RequiredError("collision: one of --p/--ladder");
      const ModelSetup s = ModelSetup::make(alpha);
      if (ladder_pmax != 0) {
        const auto pts = collision_ladder(s, ladder_pmax);
        emit_collision(pts, alpha,
                       make_meta({{"dataset", "collision_ladder"},
                                  {"alpha", g17(alpha)},
                                  {"pmax", std::to_string(ladder_pmax)}}),
                       g.fmt(EmitFormat::json), os);
      } else {
        const CollisionPoint cp = solve_collision(s, p);
        emit_collision(cp, alpha,
                       make_meta({{"dataset", "collision"},
                                  {"alpha", g17(alpha)},
                                  {"p", std::to_string(p)}}),
                       g.fmt(EmitFormat::json), os);
      }
    } else if (*s_cmd) {
      const StokesSeries ser = stokes_coefficients(ModelSetup::make(alpha));
      if (coeffs) {
        emit_stokes_coeffs(ser,
                           make_meta({{"dataset", "stokes_coeffs"},
                                      {"alpha", g17(alpha)}}),
                           os);
      } else {
        if (!*s_eps) throw CLI::RequiredError("stokes: --epsilon");
        emit_stokes_samples(ser, eps, samples,
                            make_meta({{"dataset", "stokes_samples"},
                                       {"alpha", g17(alpha)},
                                       {"eps", g17(eps)},
                                       {"samples", std::to_string(samples)}}),
                            g.fmt(EmitFormat::csv), os);
      }
    } else if (*sp_cmd) {
      const StokesSeries ser = stokes_coefficients(ModelSetup::make(alpha));
      std::vector<double> mus(mu_steps);
      for (int i = 0; i < mu_steps; ++i)
        mus[i] = mu_steps == 1 ? mu_min
                               : mu_min + (mu_max - mu_min) * i / (mu_steps - 1);
      const auto slices = scan(ser, eps, mus, g.modes, g.threads);
      emit(slices,
           make_meta({{"dataset", "spectrum"},
                      {"alpha", g17(alpha)},
                      {"eps", g17(eps)},
                      {"modes", std::to_string(g.modes)},
                      {"mu_min", g17(mu_min)},
                      {"mu_max", g17(mu_max)},
                      {"mu_steps", std::to_string(mu_steps)}}),
           g.fmt(EmitFormat::csv), os);
    } else if (*i_cmd) {
      g.json_only("isola");
      const MetaList meta = make_meta({{"dataset", "isola"},
                                       {"method", method},
                                       {"p", std::to_string(p)},
                                       {"alpha", g17(alpha)},
                                       {"eps", g17(eps)},
                                       {"modes", std::to_string(g.modes)},
                                       {"order", std::to_string(order)}});
      if (method == "both") {
        emit_isola_both(compare_isolas(p, alpha, eps, g.modes), meta, os);
      } else {
        const ModelSetup s = ModelSetup::make(alpha);
        const StokesSeries ser = stokes_coefficients(s);
        const IsolaAsymptotics a = make_asymptotics(ser, solve_collision(s, p));
        const AsymptoticIsola ai = evaluate_isola(a, eps, order);
        if (method == "asymptotic") {
          emit_isola_asymptotic(a, ai, meta, os);
        } else {
          IsolaScanConfig cfg;
          cfg.modes = g.modes;
          const IsolaMeasurement m =
              extract_isola(ser, eps, p, ai.floquet_lo, ai.floquet_hi,
                            ai.lambda_star, cfg);
          emit_isola_numeric(m, meta, os);
        }
      }
    } else if (*sw_cmd) {
      if (alpha_max <= alpha_min)
        throw CLI::ValidationError("sweep-s3: need --alpha-min < --alpha-max");
      std::vector<double> alphas(grid);
      for (int i = 0; i < grid; ++i)
        alphas[i] = alpha_min + (alpha_max - alpha_min) * i / (grid - 1);
      const auto pts = sweep_S(sweep_p, alphas);
      MetaList meta = make_meta({{"dataset", "sweep_s"},
                                 {"p", std::to_string(sweep_p)},
                                 {"alpha_min", g17(alpha_min)},
                                 {"alpha_max", g17(alpha_max)},
                                 {"grid", std::to_string(grid)}});
      bool flips = false;
      for (size_t i = 1; i < pts.size(); ++i)
        flips = flips || (pts[i - 1].S < 0) != (pts[i].S < 0);
      if (flips && sweep_p == 3)
        // find_S3_root wants at least 8 points for its refinement sweep;
        // the coarse --grid the user asked for need not satisfy that.
        meta.emplace_back("root", g17(find_S3_root(alpha_min, alpha_max,
                                                   std::max(grid, 8))));
      emit(pts, meta, g.fmt(EmitFormat::csv), os);
    } else if (*t_cmd) {
      const Table1Report rep = reproduce_table1(g.modes, g.threads);
      emit(rep, g.fmt(EmitFormat::csv), os);
      if (!rep.all_pass) exit_code = 1;
    } else if (*cv_cmd) {
      const ConvergenceStudy st =
          convergence_study(p, alpha, eps_list, g.modes);
      emit(st, g.fmt(EmitFormat::csv), os);
    }

    write_file(g.out, os.str());
    return exit_code;
  } catch (const CLI::ParseError& e) {
    std::cerr << "bwstab: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bwstab: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bwstab: " << e.what() << "\n";
    return 1;
  }
}
