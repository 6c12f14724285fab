#include "bwstab/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "bwstab/version.hpp"

namespace bwstab {

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PowerFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("fit_loglog: size mismatch");
  const int n = static_cast<int>(x.size());
  if (n < 3)
    throw std::invalid_argument("fit_loglog: degenerate fit (need at least 3 usable points)");

  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog: data must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }

  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;

  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("fit_loglog: abscissae coincide");

  PowerFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;

  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    ss += r * r;
    f.max_residual = std::max(f.max_residual, std::abs(r));
  }
  // Unbiased residual variance; with exactly 3 points this is a rough but
  // honest error bar.
  f.slope_stderr = std::sqrt(ss / (n - 2) / sxx);
  return f;
}

namespace {

// Distance from z to the segment [a, b] in the complex plane.
double seg_dist(std::complex<double> z, std::complex<double> a,
                std::complex<double> b) {
  const std::complex<double> ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(z - a);
  double t = ((z.real() - a.real()) * ab.real() +
              (z.imag() - a.imag()) * ab.imag()) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(z - (a + t * ab));
}

} // namespace

double curve_distance(const std::vector<IsolaCurvePoint>& curve,
                      const std::vector<std::complex<double>>& eigs) {
  if (curve.empty() || eigs.empty()) return 0.0;
  // Polyline segments along each branch; the branches share their first and
  // last vertices (the square root vanishes at the interval ends), closing
  // the isola, so no extra joining segments are needed.
  double worst = 0.0;
  for (const auto& z : eigs) {
    double best = std::numeric_limits<double>::infinity();
    if (curve.size() == 1) {
      best = std::min(std::abs(z - curve[0].lambda_plus),
                      std::abs(z - curve[0].lambda_minus));
    }
    for (size_t i = 0; i + 1 < curve.size(); ++i) {
      best = std::min(best, seg_dist(z, curve[i].lambda_plus,
                                     curve[i + 1].lambda_plus));
      best = std::min(best, seg_dist(z, curve[i].lambda_minus,
                                     curve[i + 1].lambda_minus));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Reference intervals at eps = 1e-3, stored ascending (sources that print the
// endpoints in descending order are normalized here once).

namespace {

struct RefRow {
  int p;
  double alpha;
  double lo, hi;
  double tol; // absolute tolerance on each endpoint for the direct method
};

constexpr double kTable1Eps = 1e-3;

constexpr RefRow kTable1Refs[] = {
    {2, 0.5, -0.106478813547533, -0.106478633575956, 5e-9},
    {2, 1.0, -0.260909131823605, -0.260908917941151, 5e-9},
    {2, 2.0, -0.330352275321770, -0.330352196060556, 5e-9},
    {3, 0.5, -0.375448877009085, -0.375448875412116, 5e-11},
    {3, 1.0, 0.257196721100572, 0.257196721343587, 5e-11},
    {3, 2.0, 0.044058331346416, 0.044058331384758, 5e-11},
};

std::pair<double, double> sorted2(double a, double b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

ComparisonRecord compare_one(const RefRow& ref, double eps, int modes) {
  ComparisonRecord rec = compare_isolas(ref.p, ref.alpha, eps, modes);
  rec.has_ref = true;
  rec.ref_lo = ref.lo;
  rec.ref_hi = ref.hi;
  rec.tol_numeric = ref.tol;
  rec.tol_asym = 2.0 * ref.tol;

  const auto [alo, ahi] =
      sorted2(rec.asymptotic.floquet_lo, rec.asymptotic.floquet_hi);
  rec.err_asym = std::max(std::abs(alo - ref.lo), std::abs(ahi - ref.hi));
  rec.pass_asym = rec.asymptotic.present && rec.err_asym <= rec.tol_asym;

  if (rec.numeric.present) {
    const auto [nlo, nhi] =
        sorted2(rec.numeric.floquet_lo_comp, rec.numeric.floquet_hi_comp);
    rec.err_numeric = std::max(std::abs(nlo - ref.lo), std::abs(nhi - ref.hi));
    rec.pass_numeric = rec.err_numeric <= rec.tol_numeric;
  } else {
    rec.err_numeric = std::numeric_limits<double>::infinity();
    rec.pass_numeric = false;
  }
  rec.pass = rec.pass_numeric && rec.pass_asym;
  return rec;
}

} // namespace

ComparisonRecord compare_isolas(int p, double alpha, double eps, int modes) {
  ComparisonRecord rec;
  rec.p = p;
  rec.alpha = alpha;
  rec.eps = eps;
  rec.modes = modes;

  const ModelSetup s = ModelSetup::make(alpha);
  const StokesSeries ser = stokes_coefficients(s);
  const CollisionPoint cp = solve_collision(s, p);
  const IsolaAsymptotics a =
      std::abs(p) == 2 ? p2_asymptotics(ser, cp) : p3_asymptotics(ser, cp);
  rec.asymptotic = evaluate_isola(a, eps, 4);

  IsolaScanConfig cfg;
  cfg.modes = modes;
  rec.numeric = extract_isola(ser, eps, p, rec.asymptotic.floquet_lo,
                              rec.asymptotic.floquet_hi,
                              rec.asymptotic.lambda_star, cfg);

  if (rec.numeric.present) {
    const auto [alo, ahi] =
        sorted2(rec.asymptotic.floquet_lo, rec.asymptotic.floquet_hi);
    const auto [nlo, nhi] =
        sorted2(rec.numeric.floquet_lo_comp, rec.numeric.floquet_hi_comp);
    rec.diff_endpoint_lo = std::abs(nlo - alo);
    rec.diff_endpoint_hi = std::abs(nhi - ahi);
    rec.diff_mu_star = std::abs(rec.numeric.mu_star - rec.asymptotic.mu_star);
    rec.diff_growth =
        std::abs(rec.numeric.growth_max - rec.asymptotic.growth_max);
    rec.diff_im_center = std::abs(rec.numeric.lambda_star.imag() -
                                  rec.asymptotic.lambda_star.imag());
  }
  return rec;
}

Table1Report reproduce_table1(int modes, int threads) {
  constexpr int n = static_cast<int>(std::size(kTable1Refs));
  Table1Report rep;
  rep.eps = kTable1Eps;
  rep.modes = modes;
  rep.rows.resize(n);

  if (threads <= 1) {
    for (int i = 0; i < n; ++i)
      rep.rows[i] = compare_one(kTable1Refs[i], kTable1Eps, modes);
  } else {
    std::atomic<int> next{0};
    auto work = [&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
        rep.rows[i] = compare_one(kTable1Refs[i], kTable1Eps, modes);
    };
    std::vector<std::future<void>> pool;
    for (int t = 1; t < std::min(threads, n); ++t)
      pool.push_back(std::async(std::launch::async, work));
    work();
    for (auto& f : pool) f.get();
  }

  rep.all_pass = true;
  for (const auto& r : rep.rows) rep.all_pass = rep.all_pass && r.pass;
  return rep;
}

ConvergenceStudy convergence_study(int p, double alpha,
                                   const std::vector<double>& eps_list,
                                   int modes) {
  if (eps_list.size() < 3)
    throw std::invalid_argument("convergence_study: need at least 3 amplitudes");
  const int ap = std::abs(p);
  if (ap != 2 && ap != 3)
    throw std::invalid_argument("convergence_study: |p| must be 2 or 3");

  const ModelSetup s = ModelSetup::make(alpha);
  const StokesSeries ser = stokes_coefficients(s);
  const CollisionPoint cp = solve_collision(s, p);
  const IsolaAsymptotics a =
      ap == 2 ? p2_asymptotics(ser, cp) : p3_asymptotics(ser, cp);

  IsolaScanConfig cfg;
  cfg.modes = modes;
  // The endpoint gap decays one order faster than the interval itself, so at
  // the small end of the amplitude range it sits near the rounding floor of
  // the Floquet axis; the endpoint bisection has to run to that floor too.
  cfg.bisect_width = 1e-15;

  ConvergenceStudy st;
  st.p = p;
  st.alpha = alpha;
  st.modes = modes;
  st.threshold = cfg.threshold;
  st.bisect_width = cfg.bisect_width;
  st.gap_floor = 5e-14;

  std::vector<double> eps_sorted(eps_list);
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<double>());

  for (double eps : eps_sorted) {
    if (!(eps > 0.0))
      throw std::invalid_argument("convergence_study: amplitudes must be positive");
    ConvergencePoint pt;
    pt.eps = eps;

    const AsymptoticIsola full = evaluate_isola(a, eps, 4);
    // The gap is measured against the order-p truncation, so its expected
    // decay is the first neglected correction, eps^{p+1}.
    const AsymptoticIsola lead = evaluate_isola(a, eps, ap);
    pt.width_asym = full.floquet_hi - full.floquet_lo;
    pt.growth_asym = full.growth_max;

    const IsolaMeasurement num = extract_isola(
        ser, eps, p, full.floquet_lo, full.floquet_hi, full.lambda_star, cfg);
    pt.present = num.present;
    if (num.present) {
      const auto [nlo, nhi] = sorted2(num.floquet_lo_comp, num.floquet_hi_comp);
      pt.width_num = nhi - nlo;
      pt.growth_num = num.growth_max;
      pt.endpoint_gap = std::max(std::abs(nlo - lead.floquet_lo),
                                 std::abs(nhi - lead.floquet_hi));
      pt.gap_usable = pt.endpoint_gap > st.gap_floor;
      pt.curve_dist = curve_distance(asymptotic_ellipse(a, eps, 513, 4), num.lambdas);
      pt.curve_dist_trunc =
          curve_distance(asymptotic_ellipse(a, eps, 513, ap), num.lambdas);
    }
    st.points.push_back(pt);
  }

  {
    std::vector<double> xs, ys;
    for (const auto& pt : st.points)
      if (pt.present) {
        xs.push_back(pt.eps);
        ys.push_back(pt.width_num);
      }
    st.width_fit = fit_loglog(xs, ys);
  }
  {
    std::vector<double> xs, ys;
    for (const auto& pt : st.points)
      if (pt.present) {
        xs.push_back(pt.eps);
        ys.push_back(pt.growth_num);
      }
    st.growth_fit = fit_loglog(xs, ys);
  }
  {
    std::vector<double> xs, ys;
    for (const auto& pt : st.points)
      if (pt.present && pt.gap_usable) {
        xs.push_back(pt.eps);
        ys.push_back(pt.endpoint_gap);
      }
    st.gap_fit = fit_loglog(xs, ys);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string jstr(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
  return out;
}

std::string jnum(double v) {
  // JSON has no inf/nan literals; those only arise in "not measured" slots.
  if (!std::isfinite(v)) return "null";
  return fmt_g17(v);
}
std::string jint(long long v) { return std::to_string(v); }
std::string jbool(bool b) { return b ? "true" : "false"; }
std::string jcplx(cplx z) {
  return "[" + jnum(z.real()) + "," + jnum(z.imag()) + "]";
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}
std::string jobj(const std::vector<std::string>& fields) {
  return "{" + join(fields, ",") + "}";
}
std::string jarr(const std::vector<std::string>& items) {
  return "[" + join(items, ",") + "]";
}
std::string jf(const char* k, const std::string& v) {
  return jstr(k) + ":" + v;
}

std::string jmeta(const MetaList& meta) {
  std::vector<std::string> fields;
  fields.reserve(meta.size());
  for (const auto& [k, v] : meta) fields.push_back(jf(k.c_str(), jstr(v)));
  return jobj(fields);
}

void csv_meta(std::ostream& os, const MetaList& meta) {
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
}

std::string jfit(const PowerFit& f) {
  return jobj({jf("slope", jnum(f.slope)), jf("intercept", jnum(f.intercept)),
               jf("slope_stderr", jnum(f.slope_stderr)),
               jf("max_residual", jnum(f.max_residual)), jf("n", jint(f.n))});
}

std::string jmeasurement(const IsolaMeasurement& m) {
  return jobj({jf("present", jbool(m.present)),
               jf("floquet_lo", jnum(m.floquet_lo)),
               jf("floquet_hi", jnum(m.floquet_hi)),
               jf("floquet_lo_comp", jnum(m.floquet_lo_comp)),
               jf("floquet_hi_comp", jnum(m.floquet_hi_comp)),
               jf("mu_star", jnum(m.mu_star)),
               jf("lambda_star", jcplx(m.lambda_star)),
               jf("growth_max", jnum(m.growth_max)),
               jf("modes", jint(m.modes)), jf("threshold", jnum(m.threshold))});
}

std::string jevaluated(const AsymptoticIsola& ai) {
  return jobj({jf("present", jbool(ai.present)),
               jf("floquet_lo", jnum(ai.floquet_lo)),
               jf("floquet_hi", jnum(ai.floquet_hi)),
               jf("mu_star", jnum(ai.mu_star)),
               jf("lambda_star", jcplx(ai.lambda_star)),
               jf("growth_max", jnum(ai.growth_max))});
}

std::vector<std::string> jrow_fields(const ComparisonRecord& r) {
  std::vector<std::string> fields = {
      jf("p", jint(r.p)),
      jf("alpha", jnum(r.alpha)),
      jf("eps", jnum(r.eps)),
      jf("modes", jint(r.modes)),
      jf("numeric", jmeasurement(r.numeric)),
      jf("asymptotic", jevaluated(r.asymptotic)),
      jf("diffs", jobj({jf("endpoint_lo", jnum(r.diff_endpoint_lo)),
                        jf("endpoint_hi", jnum(r.diff_endpoint_hi)),
                        jf("mu_star", jnum(r.diff_mu_star)),
                        jf("growth", jnum(r.diff_growth)),
                        jf("im_center", jnum(r.diff_im_center))}))};
  if (r.has_ref) {
    fields.insert(fields.begin() + 4,
                  jf("ref", jarr({jnum(r.ref_lo), jnum(r.ref_hi)})));
    fields.push_back(jf("err_numeric", jnum(r.err_numeric)));
    fields.push_back(jf("tol_numeric", jnum(r.tol_numeric)));
    fields.push_back(jf("pass_numeric", jbool(r.pass_numeric)));
    fields.push_back(jf("err_asym", jnum(r.err_asym)));
    fields.push_back(jf("tol_asym", jnum(r.tol_asym)));
    fields.push_back(jf("pass_asym", jbool(r.pass_asym)));
    fields.push_back(jf("pass", jbool(r.pass)));
  }
  return fields;
}

} // namespace

MetaList make_meta(
    std::initializer_list<std::pair<std::string, std::string>> kv) {
  MetaList m;
  m.emplace_back("artifact_version", version_string);
  for (const auto& p : kv) m.push_back(p);
  return m;
}

EmitFormat parse_format(const std::string& name) {
  if (name == "csv") return EmitFormat::csv;
  if (name == "json") return EmitFormat::json;
  throw std::invalid_argument("unknown format (expected csv or json): " + name);
}

void emit(const Table1Report& t, EmitFormat f, std::ostream& os) {
  MetaList meta = make_meta({{"dataset", "table1"},
                             {"eps", fmt_g17(t.eps)},
                             {"modes", std::to_string(t.modes)},
                             {"tol_numeric_p2", fmt_g17(5e-9)},
                             {"tol_numeric_p3", fmt_g17(5e-11)},
                             {"tol_asym_factor", "2"}});
  if (f == EmitFormat::json) {
    std::vector<std::string> rows;
    rows.reserve(t.rows.size());
    for (const auto& r : t.rows) rows.push_back(jobj(jrow_fields(r)));
    os << jobj({jf("meta", jmeta(meta)), jf("rows", jarr(rows)),
                jf("all_pass", jbool(t.all_pass))})
       << "\n";
    return;
  }
  csv_meta(os, meta);
  os << "p,alpha,eps,modes,ref_lo,ref_hi,num_lo,num_hi,asym_lo,asym_hi,"
        "num_mu_star,asym_mu_star,num_growth,asym_growth,"
        "diff_endpoint_lo,diff_endpoint_hi,diff_mu_star,diff_growth,"
        "diff_im_center,err_numeric,tol_numeric,pass_numeric,"
        "err_asym,tol_asym,pass_asym,pass\n";
  for (const auto& r : t.rows) {
    const auto [nlo, nhi] =
        r.numeric.present
            ? std::make_pair(
                  std::min(r.numeric.floquet_lo_comp, r.numeric.floquet_hi_comp),
                  std::max(r.numeric.floquet_lo_comp, r.numeric.floquet_hi_comp))
            : std::make_pair(0.0, 0.0);
    const double alo = std::min(r.asymptotic.floquet_lo, r.asymptotic.floquet_hi);
    const double ahi = std::max(r.asymptotic.floquet_lo, r.asymptotic.floquet_hi);
    os << r.p << ',' << fmt_g17(r.alpha) << ',' << fmt_g17(r.eps) << ','
       << r.modes << ',' << fmt_g17(r.ref_lo) << ',' << fmt_g17(r.ref_hi) << ','
       << fmt_g17(nlo) << ',' << fmt_g17(nhi) << ',' << fmt_g17(alo) << ','
       << fmt_g17(ahi) << ',' << fmt_g17(r.numeric.mu_star) << ','
       << fmt_g17(r.asymptotic.mu_star) << ',' << fmt_g17(r.numeric.growth_max)
       << ',' << fmt_g17(r.asymptotic.growth_max) << ','
       << fmt_g17(r.diff_endpoint_lo) << ',' << fmt_g17(r.diff_endpoint_hi)
       << ',' << fmt_g17(r.diff_mu_star) << ',' << fmt_g17(r.diff_growth) << ','
       << fmt_g17(r.diff_im_center) << ',' << fmt_g17(r.err_numeric) << ','
       << fmt_g17(r.tol_numeric) << ',' << int(r.pass_numeric) << ','
       << fmt_g17(r.err_asym) << ',' << fmt_g17(r.tol_asym) << ','
       << int(r.pass_asym) << ',' << int(r.pass) << "\n";
  }
}

void emit(const ConvergenceStudy& c, EmitFormat f, std::ostream& os) {
  MetaList meta = make_meta({{"dataset", "convergence"},
                             {"p", std::to_string(c.p)},
                             {"alpha", fmt_g17(c.alpha)},
                             {"modes", std::to_string(c.modes)},
                             {"threshold", fmt_g17(c.threshold)},
                             {"bisect_width", fmt_g17(c.bisect_width)},
                             {"gap_floor", fmt_g17(c.gap_floor)}});
  if (f == EmitFormat::json) {
    std::vector<std::string> pts;
    pts.reserve(c.points.size());
    for (const auto& p : c.points)
      pts.push_back(jobj({jf("eps", jnum(p.eps)),
                          jf("present", jbool(p.present)),
                          jf("width_num", jnum(p.width_num)),
                          jf("width_asym", jnum(p.width_asym)),
                          jf("growth_num", jnum(p.growth_num)),
                          jf("growth_asym", jnum(p.growth_asym)),
                          jf("endpoint_gap", jnum(p.endpoint_gap)),
                          jf("gap_usable", jbool(p.gap_usable)),
                          jf("curve_dist", jnum(p.curve_dist)),
                          jf("curve_dist_trunc", jnum(p.curve_dist_trunc))}));
    os << jobj({jf("meta", jmeta(meta)),
                jf("fits", jobj({jf("width", jfit(c.width_fit)),
                                 jf("growth", jfit(c.growth_fit)),
                                 jf("gap", jfit(c.gap_fit))})),
                jf("points", jarr(pts))})
       << "\n";
    return;
  }
  meta.emplace_back("width_slope", fmt_g17(c.width_fit.slope));
  meta.emplace_back("width_slope_stderr", fmt_g17(c.width_fit.slope_stderr));
  meta.emplace_back("growth_slope", fmt_g17(c.growth_fit.slope));
  meta.emplace_back("growth_slope_stderr", fmt_g17(c.growth_fit.slope_stderr));
  meta.emplace_back("gap_slope", fmt_g17(c.gap_fit.slope));
  meta.emplace_back("gap_slope_stderr", fmt_g17(c.gap_fit.slope_stderr));
  csv_meta(os, meta);
  os << "eps,present,width_num,width_asym,growth_num,growth_asym,"
        "endpoint_gap,gap_usable,curve_dist,curve_dist_trunc\n";
  for (const auto& p : c.points)
    os << fmt_g17(p.eps) << ',' << int(p.present) << ','
       << fmt_g17(p.width_num) << ',' << fmt_g17(p.width_asym) << ','
       << fmt_g17(p.growth_num) << ',' << fmt_g17(p.growth_asym) << ','
       << fmt_g17(p.endpoint_gap) << ',' << int(p.gap_usable) << ','
       << fmt_g17(p.curve_dist) << ',' << fmt_g17(p.curve_dist_trunc) << "\n";
}

void emit(const std::vector<SpectrumSlice>& slices, const MetaList& meta,
          EmitFormat f, std::ostream& os) {
  if (f == EmitFormat::json) {
    std::vector<std::string> out;
    out.reserve(slices.size());
    for (const auto& sl : slices) {
      std::vector<std::string> ls;
      ls.reserve(sl.lambdas.size());
      for (const auto& z : sl.lambdas) ls.push_back(jcplx(z));
      out.push_back(jobj({jf("mu", jnum(sl.mu)), jf("lambdas", jarr(ls))}));
    }
    os << jobj({jf("meta", jmeta(meta)), jf("slices", jarr(out))}) << "\n";
    return;
  }
  csv_meta(os, meta);
  os << "mu,re_lambda,im_lambda\n";
  for (const auto& sl : slices)
    for (const auto& z : sl.lambdas)
      os << fmt_g17(sl.mu) << ',' << fmt_g17(z.real()) << ','
         << fmt_g17(z.imag()) << "\n";
}

void emit(const std::vector<SweepPoint>& sweep, const MetaList& meta,
          EmitFormat f, std::ostream& os) {
  if (f == EmitFormat::json) {
    std::vector<std::string> pts;
    pts.reserve(sweep.size());
    for (const auto& p : sweep)
      pts.push_back(jobj({jf("alpha", jnum(p.alpha)), jf("S", jnum(p.S))}));
    os << jobj({jf("meta", jmeta(meta)), jf("points", jarr(pts))}) << "\n";
    return;
  }
  csv_meta(os, meta);
  os << "alpha,S\n";
  for (const auto& p : sweep)
    os << fmt_g17(p.alpha) << ',' << fmt_g17(p.S) << "\n";
}

namespace {

std::string jcollision(const CollisionPoint& cp, double alpha) {
  return jobj({jf("alpha", jnum(alpha)), jf("p", jint(cp.p)),
               jf("k", jnum(cp.k)), jf("mu0", jnum(cp.mu0)),
               jf("n", jint(cp.n)), jf("m", jint(cp.m)),
               jf("lambda0_im", jnum(cp.lambda0.imag())),
               jf("residual", jnum(cp.residual)),
               jf("half_integer_tie", jbool(cp.half_integer_tie))});
}

void collision_csv(const std::vector<CollisionPoint>& pts, double alpha,
                   const MetaList& meta, std::ostream& os) {
  csv_meta(os, meta);
  os << "alpha,p,k,mu0,n,m,lambda0_im,residual,half_integer_tie\n";
  for (const auto& cp : pts)
    os << fmt_g17(alpha) << ',' << cp.p << ',' << fmt_g17(cp.k) << ','
       << fmt_g17(cp.mu0) << ',' << cp.n << ',' << cp.m << ','
       << fmt_g17(cp.lambda0.imag()) << ',' << fmt_g17(cp.residual) << ','
       << (cp.half_integer_tie ? 1 : 0) << "\n";
}

} // namespace

void emit_collision(const CollisionPoint& cp, double alpha,
                    const MetaList& meta, EmitFormat f, std::ostream& os) {
  if (f == EmitFormat::csv) {
    collision_csv({cp}, alpha, meta, os);
    return;
  }
  os << jobj({jf("meta", jmeta(meta)), jf("alpha", jnum(alpha)),
              jf("p", jint(cp.p)), jf("k", jnum(cp.k)),
              jf("mu0", jnum(cp.mu0)), jf("n", jint(cp.n)),
              jf("m", jint(cp.m)),
              jf("lambda0_im", jnum(cp.lambda0.imag())),
              jf("residual", jnum(cp.residual)),
              jf("half_integer_tie", jbool(cp.half_integer_tie))})
     << "\n";
}

void emit_collision(const std::vector<CollisionPoint>& ladder, double alpha,
                    const MetaList& meta, EmitFormat f, std::ostream& os) {
  if (f == EmitFormat::csv) {
    collision_csv(ladder, alpha, meta, os);
    return;
  }
  std::vector<std::string> pts;
  pts.reserve(ladder.size());
  for (const auto& cp : ladder) pts.push_back(jcollision(cp, alpha));
  os << jobj({jf("meta", jmeta(meta)), jf("collisions", jarr(pts))}) << "\n";
}

void emit_stokes_samples(const StokesSeries& ser, double eps, int samples,
                         const MetaList& meta, EmitFormat f, std::ostream& os) {
  if (samples < 2) throw std::invalid_argument("stokes samples: need >= 2 points");
  MetaList m2 = meta;
  m2.emplace_back("c", fmt_g17(ser.speed(eps)));
  const double step = 2.0 * std::numbers::pi / samples;
  if (f == EmitFormat::json) {
    std::vector<std::string> pts;
    pts.reserve(samples);
    for (int i = 0; i < samples; ++i) {
      const double x = step * i;
      const WaveSample w = eval_wave(ser, eps, x);
      pts.push_back(jobj({jf("x", jnum(x)), jf("eta", jnum(w.eta)),
                          jf("u", jnum(w.u))}));
    }
    os << jobj({jf("meta", jmeta(m2)), jf("samples", jarr(pts))}) << "\n";
    return;
  }
  csv_meta(os, m2);
  os << "x,eta,u\n";
  for (int i = 0; i < samples; ++i) {
    const double x = step * i;
    const WaveSample w = eval_wave(ser, eps, x);
    os << fmt_g17(x) << ',' << fmt_g17(w.eta) << ',' << fmt_g17(w.u) << "\n";
  }
}

void emit_stokes_coeffs(const StokesSeries& ser, const MetaList& meta,
                        std::ostream& os) {
  auto rows = [&](const auto& table) {
    std::vector<std::string> r;
    for (int j = 1; j <= StokesSeries::max_order; ++j) {
      std::vector<std::string> cols;
      for (int l = 0; l <= StokesSeries::max_harmonic; ++l)
        cols.push_back(jnum(table[j][l]));
      r.push_back(jarr(cols));
    }
    return jarr(r);
  };
  os << jobj({jf("meta", jmeta(meta)), jf("c0", jnum(ser.c0)),
              jf("c2", jnum(ser.c2)), jf("c4", jnum(ser.c4)),
              jf("eta", rows(ser.eta)), jf("u", rows(ser.u))})
     << "\n";
}

void emit_isola_numeric(const IsolaMeasurement& m, const MetaList& meta,
                        std::ostream& os) {
  std::vector<std::string> pts;
  pts.reserve(m.mus.size());
  for (size_t i = 0; i < m.mus.size() && i < m.lambdas.size(); ++i)
    pts.push_back(
        jobj({jf("mu", jnum(m.mus[i])), jf("lambda", jcplx(m.lambdas[i]))}));
  os << jobj({jf("meta", jmeta(meta)), jf("p", jint(m.p)),
              jf("eps", jnum(m.eps)), jf("measurement", jmeasurement(m)),
              jf("samples", jarr(pts))})
     << "\n";
}

void emit_isola_asymptotic(const IsolaAsymptotics& a, const AsymptoticIsola& ai,
                           const MetaList& meta, std::ostream& os) {
  const std::string collision =
      jobj({jf("k", jnum(a.collision.k)), jf("n", jint(a.collision.n)),
            jf("m", jint(a.collision.m)), jf("mu0", jnum(a.collision.mu0)),
            jf("lambda0", jcplx(a.collision.lambda0)),
            jf("residual", jnum(a.collision.residual))});
  const std::string diagnostics =
      jobj({jf("T3_rel", jnum(a.T3_rel)), jf("T4_rel", jnum(a.T4_rel)),
            jf("re_lambda2_rel", jnum(a.re_lambda2_rel)),
            jf("re_lambda4_rel", jnum(a.re_lambda4_rel)),
            jf("mu3_independence", jnum(a.mu3_independence)),
            jf("roundtrip_rel", jnum(a.roundtrip_rel)),
            jf("lambda1_abs", jnum(a.lambda1_abs)),
            jf("mu1_abs", jnum(a.mu1_abs))});
  os << jobj({jf("meta", jmeta(meta)),
              jf("p", jint(a.p)),
              jf("alpha", jnum(a.setup.alpha)),
              jf("collision", collision),
              jf("omega_n", jnum(a.omega_n)),
              jf("omega_m", jnum(a.omega_m)),
              jf("cg_n", jnum(a.cg_n)),
              jf("cg_m", jnum(a.cg_m)),
              jf("P2_n", jnum(a.P2_n)),
              jf("P2_m", jnum(a.P2_m)),
              jf("lambda2", jcplx(a.lambda2)),
              jf("mu2", jnum(a.mu2)),
              jf("S", jnum(a.S)),
              jf("S_n", jcplx(a.S_n)),
              jf("S_m", jcplx(a.S_m)),
              jf("interval_halfwidth", jnum(a.interval_halfwidth)),
              jf("growth_coeff", jnum(a.growth_coeff)),
              jf("P4_n", jnum(a.P4_n)),
              jf("P4_m", jnum(a.P4_m)),
              jf("lambda4", jcplx(a.lambda4)),
              jf("mu4", jnum(a.mu4)),
              jf("gamma0", jcplx(a.gamma0)),
              jf("gamma1", jcplx(a.gamma1)),
              jf("gamma1_determined", jbool(a.gamma1_determined)),
              jf("degenerate", jbool(a.degenerate)),
              jf("diagnostics", diagnostics),
              jf("evaluated", jevaluated(ai)),
              jf("eps", jnum(ai.eps))})
     << "\n";
}

void emit_isola_both(const ComparisonRecord& rec, const MetaList& meta,
                     std::ostream& os) {
  std::vector<std::string> fields = {jf("meta", jmeta(meta))};
  for (auto& s : jrow_fields(rec)) fields.push_back(std::move(s));
  os << jobj(fields) << "\n";
}

void write_file(const std::string& path, const std::string& contents) {
  if (path == "-") {
    std::cout << contents;
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << contents;
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + path);
}

} // namespace bwstab
