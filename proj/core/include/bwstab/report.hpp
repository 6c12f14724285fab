#pragma once

#include <complex>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bwstab/ffh.hpp"
#include "bwstab/perturbation.hpp"

namespace bwstab {

// ---------------------------------------------------------------------------
// Fits

// Least-squares line through (log x, log y).  Throws std::invalid_argument on
// fewer than 3 points or non-positive data (a degenerate fit).
struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;     // in log space
  double slope_stderr = 0.0;  // least-squares uncertainty of the slope
  double max_residual = 0.0;  // worst |log y - fit| over the points
  int n = 0;
};
PowerFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Table-of-intervals regression

// Side-by-side measurement of one isola by both pipelines, with absolute
// differences and the pass/fail verdict against the reference interval.
struct ComparisonRecord {
  int p = 0;
  double alpha = 0.0;
  double eps = 0.0;
  int modes = 0;

  IsolaMeasurement numeric;  // direct eigenvalue measurement
  AsymptoticIsola asymptotic;

  // Reference interval (always stored as (min, max); sources that print
  // descending endpoints are normalized before comparison).  has_ref is false
  // for free-standing side-by-side runs, which carry no verdict.
  bool has_ref = false;
  double ref_lo = 0.0, ref_hi = 0.0;

  // Absolute differences between the two pipelines.
  double diff_endpoint_lo = 0.0, diff_endpoint_hi = 0.0;
  double diff_mu_star = 0.0;
  double diff_growth = 0.0;
  double diff_im_center = 0.0;

  // Deviation of each pipeline from the reference interval (worst endpoint).
  double err_numeric = 0.0, err_asym = 0.0;
  double tol_numeric = 0.0, tol_asym = 0.0;
  bool pass_numeric = false, pass_asym = false, pass = false;
};

struct Table1Report {
  double eps = 0.0;
  int modes = 0;
  std::vector<ComparisonRecord> rows; // alpha in {1/2, 1, 2} x p in {2, 3}
  bool all_pass = false;
};

// Measures one isola with both pipelines (asymptotics seed the eigenvalue
// search) and fills the cross-differences; no reference verdict.
ComparisonRecord compare_isolas(int p, double alpha, double eps,
                                int modes = 32);

// Recomputes the six reference intervals at eps = 1e-3 with both pipelines.
// Rows are independent and run on up to `threads` workers.
Table1Report reproduce_table1(int modes = 32, int threads = 1);

// ---------------------------------------------------------------------------
// Convergence-order study

struct ConvergencePoint {
  double eps = 0.0;
  bool present = false;     // numeric isola found at this amplitude
  double width_num = 0.0;   // compensated numeric interval width
  double width_asym = 0.0;  // 2 M_p eps^p
  double growth_num = 0.0;  // max Re lambda measured
  double growth_asym = 0.0;
  // Worst numeric-vs-asymptotic endpoint deviation, measured against the
  // order-p interval (the leading-order truncation), so the expected decay
  // is the first neglected correction ~ eps^{p+1}.
  double endpoint_gap = 0.0;
  bool gap_usable = false; // above the endpoint-measurement noise floor
  // Hausdorff-style one-sided distance of the measured isola eigenvalues to
  // the asymptotic curve: full truncation and (for p = 3) the order-3 curve.
  double curve_dist = 0.0;
  double curve_dist_trunc = 0.0;
};

struct ConvergenceStudy {
  int p = 0;
  double alpha = 0.0;
  int modes = 0;
  double threshold = 0.0;
  double bisect_width = 0.0;
  double gap_floor = 0.0;
  std::vector<ConvergencePoint> points; // in descending eps order
  PowerFit width_fit;  // expect slope = p
  PowerFit growth_fit; // expect slope = p
  PowerFit gap_fit;    // expect slope >= p + 1; fitted over usable points
};

// Runs both pipelines over the amplitude list (>= 3 values spanning a
// decade recommended) and fits the log-log slopes.  Throws if fewer than 3
// usable points support any fit.
ConvergenceStudy convergence_study(int p, double alpha,
                                   const std::vector<double>& eps_list,
                                   int modes = 32);

// Max-min distance from measured eigenvalues to a sampled asymptotic curve
// (both branches considered).
double curve_distance(const std::vector<IsolaCurvePoint>& curve,
                      const std::vector<std::complex<double>>& eigs);

// ---------------------------------------------------------------------------
// Deterministic serialization
//
// All numbers print with printf "%.17g" (shortest exact round-trip for
// doubles), newline-terminated, no timestamps; identical inputs give
// byte-identical files.  CSV embeds self-description as leading
// "# key=value" comment lines; JSON carries the same pairs in a "meta"
// object.  Every emitter receives the applicable alpha/eps/p/N/tolerances
// through `meta` in addition to its dataset.

std::string fmt_g17(double v);

using MetaList = std::vector<std::pair<std::string, std::string>>;

// Standard meta block: artifact version plus the supplied pairs, in order.
MetaList make_meta(std::initializer_list<std::pair<std::string, std::string>> kv);

enum class EmitFormat { csv, json };
EmitFormat parse_format(const std::string& name); // "csv" | "json"

void emit(const Table1Report& t, EmitFormat f, std::ostream& os);
void emit(const ConvergenceStudy& c, EmitFormat f, std::ostream& os);
void emit(const std::vector<SpectrumSlice>& slices, const MetaList& meta,
          EmitFormat f, std::ostream& os);
void emit(const std::vector<SweepPoint>& sweep, const MetaList& meta,
          EmitFormat f, std::ostream& os);

// Collision points: a bare object for a single point, {meta, collisions: []}
// for a ladder.  CSV uses one row per point either way.
void emit_collision(const CollisionPoint& cp, double alpha,
                    const MetaList& meta, EmitFormat f, std::ostream& os);
void emit_collision(const std::vector<CollisionPoint>& ladder, double alpha,
                    const MetaList& meta, EmitFormat f, std::ostream& os);
void emit_stokes_samples(const StokesSeries& ser, double eps, int samples,
                         const MetaList& meta, EmitFormat f, std::ostream& os);
void emit_stokes_coeffs(const StokesSeries& ser, const MetaList& meta,
                        std::ostream& os);
void emit_isola_numeric(const IsolaMeasurement& m, const MetaList& meta,
                        std::ostream& os);
void emit_isola_asymptotic(const IsolaAsymptotics& a, const AsymptoticIsola& ai,
                           const MetaList& meta, std::ostream& os);
void emit_isola_both(const ComparisonRecord& rec, const MetaList& meta,
                     std::ostream& os);

// Writes through to a file (creates/truncates), or to stdout when path is
// "-".  Throws std::runtime_error on unwritable paths.
void write_file(const std::string& path, const std::string& contents);

} // namespace bwstab
