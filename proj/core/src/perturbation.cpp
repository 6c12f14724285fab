#include "bwstab/perturbation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace bwstab {

namespace {
const cplx I_(0.0, 1.0);

double sech(double z) { return 1.0 / std::cosh(z); }
} // namespace

// ---------------------------------------------------------------------------
// FourierVec2

FourierVec2::FourierVec2(int lo, int hi) : lo_(lo) {
  if (hi < lo) throw std::invalid_argument("FourierVec2: empty window");
  d_.assign(static_cast<std::size_t>(hi - lo + 1), Eigen::Vector2cd::Zero());
}

Eigen::Vector2cd FourierVec2::at(int j) const {
  if (d_.empty() || j < lo_ || j > hi()) return Eigen::Vector2cd::Zero();
  return d_[static_cast<std::size_t>(j - lo_)];
}

Eigen::Vector2cd& FourierVec2::ref(int j) {
  if (d_.empty()) {
    lo_ = j;
    d_.assign(1, Eigen::Vector2cd::Zero());
  } else if (j < lo_) {
    d_.insert(d_.begin(), static_cast<std::size_t>(lo_ - j),
              Eigen::Vector2cd::Zero());
    lo_ = j;
  } else if (j > hi()) {
    d_.insert(d_.end(), static_cast<std::size_t>(j - hi()),
              Eigen::Vector2cd::Zero());
  }
  return d_[static_cast<std::size_t>(j - lo_)];
}

FourierVec2& FourierVec2::operator+=(const FourierVec2& o) {
  if (&o == this) {
    *this *= cplx(2.0, 0.0);
    return *this;
  }
  if (o.empty()) return *this;
  if (empty()) {
    *this = o;
    return *this;
  }
  ref(std::min(lo_, o.lo_));
  ref(std::max(hi(), o.hi()));
  for (int j = o.lo(); j <= o.hi(); ++j) {
    d_[static_cast<std::size_t>(j - lo_)] +=
        o.d_[static_cast<std::size_t>(j - o.lo_)];
  }
  return *this;
}

FourierVec2& FourierVec2::operator*=(cplx a) {
  for (auto& v : d_) v *= a;
  return *this;
}

double FourierVec2::norm() const {
  double s = 0.0;
  for (const auto& v : d_) s += v.squaredNorm();
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Zero-amplitude symbol

Eigen::Matrix2cd symbol_block(const ModelSetup& s, double mu0, int j) {
  const double K = mu0 + j;
  Eigen::Matrix2cd b;
  b(0, 0) = I_ * s.alpha * s.c0 * K;
  b(0, 1) = -I_ * s.alpha * K;
  b(1, 0) = -I_ * std::tanh(s.alpha * K);
  b(1, 1) = b(0, 0);
  return b;
}

Eigen::Matrix2cd symbol_block_dmu(const ModelSetup& s, double mu0, int j) {
  const double K = mu0 + j;
  const double sc = sech(s.alpha * K);
  Eigen::Matrix2cd b;
  b(0, 0) = I_ * s.alpha * s.c0;
  b(0, 1) = -I_ * s.alpha;
  b(1, 0) = -I_ * s.alpha * sc * sc;
  b(1, 1) = b(0, 0);
  return b;
}

// ---------------------------------------------------------------------------
// Order operators

namespace {

// Symmetric harmonic table: value attached to mode offsets +-l.
struct Harm {
  std::array<double, StokesSeries::max_harmonic + 1> a{};
};

struct OrderTables {
  // Per expansion order 0..4: harmonics of (c - u_S) and (1 + eta_S), plus
  // the raw profile harmonics u_j, eta_j feeding the derivative terms.
  std::array<Harm, 5> cu, ge, uh, eh;
  double alpha = 0.0;
  double mu0 = 0.0;
};

OrderTables make_tables(const StokesSeries& ser, double mu0) {
  OrderTables t;
  t.alpha = ser.setup.alpha;
  t.mu0 = mu0;
  t.cu[0].a[0] = ser.c0;
  t.ge[0].a[0] = 1.0;
  for (int i = 1; i <= StokesSeries::max_order; ++i) {
    for (int l = 0; l <= StokesSeries::max_harmonic; ++l) {
      t.uh[i].a[l] = ser.u[i][l];
      t.eh[i].a[l] = ser.eta[i][l];
      t.cu[i].a[l] = -ser.u[i][l];
      t.ge[i].a[l] = ser.eta[i][l];
    }
  }
  t.cu[2].a[0] += ser.c2;
  t.cu[4].a[0] += ser.c4;
  return t;
}

FourierVec2 apply_order(const OrderTables& t, int order, const MuCorrections& mu,
                        const FourierVec2& w) {
  if (order < 1 || order > 4) {
    throw std::invalid_argument("apply_order_operator: order must be 1..4");
  }
  constexpr int H = StokesSeries::max_harmonic;
  const double mus[5] = {0.0, 0.0, mu.mu2, mu.mu3, mu.mu4};

  // Effective multiplication tables: besides the profile harmonics of this
  // order, the Floquet corrections contribute i mu_a times the profile of
  // order (order - a).
  std::array<cplx, 2 * H + 1> t11_mul{}, t12_mul{}; // index l + H
  for (int l = -H; l <= H; ++l) {
    const int a = std::abs(l);
    cplx extra_cu(0.0, 0.0), extra_ge(0.0, 0.0);
    for (int o = 2; o <= order; ++o) {
      extra_cu += I_ * mus[o] * t.cu[order - o].a[a];
      extra_ge += I_ * mus[o] * t.ge[order - o].a[a];
    }
    t11_mul[static_cast<std::size_t>(l + H)] = extra_cu;
    t12_mul[static_cast<std::size_t>(l + H)] = -extra_ge;
  }

  FourierVec2 out(w.lo() - H, w.hi() + H);
  for (int j = out.lo(); j <= out.hi(); ++j) {
    cplx acc_h(0.0, 0.0), acc_u(0.0, 0.0);
    for (int l = -H; l <= H; ++l) {
      const int src = j - l;
      if (src < w.lo() || src > w.hi()) continue;
      const Eigen::Vector2cd wv = w.at(src);
      const int a = std::abs(l);
      const cplx dcol = I_ * (t.mu0 + src);
      // (1,1) and (2,2): -u_order' + (c-u_S)_order (i mu0 + d/dx) + mu terms
      const cplx t11 = -I_ * static_cast<double>(l) * t.uh[order].a[a] +
                       t.cu[order].a[a] * dcol +
                       t11_mul[static_cast<std::size_t>(l + H)];
      // (1,2): -eta_order' - (1+eta_S)_order (i mu0 + d/dx) - mu terms
      const cplx t12 = -I_ * static_cast<double>(l) * t.eh[order].a[a] -
                       t.ge[order].a[a] * dcol +
                       t12_mul[static_cast<std::size_t>(l + H)];
      acc_h += t11 * wv(0) + t12 * wv(1);
      acc_u += t11 * wv(1);
    }
    // (2,1): expansion of -i tanh(alpha(mu + D)) in the Floquet corrections.
    // Linear term -i mu_order sech^2; at fourth order the quadratic chain
    // term +i alpha mu2^2 sech^2 tanh also enters.  (The overall alpha
    // prefactor of the operator is applied below.)
    const Eigen::Vector2cd wj = w.at(j);
    const double K = t.mu0 + j;
    const double sc = sech(t.alpha * K);
    cplx t21 = -I_ * mus[order] * sc * sc;
    if (order == 4) {
      t21 += I_ * t.alpha * mu.mu2 * mu.mu2 * sc * sc * std::tanh(t.alpha * K);
    }
    acc_u += t21 * wj(0);

    Eigen::Vector2cd& o = out.ref(j);
    o(0) = t.alpha * acc_h;
    o(1) = t.alpha * acc_u;
  }
  return out;
}

} // namespace

FourierVec2 apply_order_operator(const StokesSeries& ser, double mu0, int order,
                                 const MuCorrections& mu, const FourierVec2& w) {
  if (w.empty()) return w;
  return apply_order(make_tables(ser, mu0), order, mu, w);
}

// ---------------------------------------------------------------------------
// Off-resonant solves

FourierVec2 solve_offresonant(const ModelSetup& s, const CollisionPoint& cp,
                              const FourierVec2& rhs, double rel_tol) {
  if (rhs.empty()) return rhs;
  const double rhs_norm = rhs.norm();
  const cplx lam0 = cp.lambda0;

  // Null direction at mode n (for the normalization shift).
  const double Kn = cp.mu0 + cp.n;
  const double wn = omega_alpha(s, Kn);
  Eigen::Vector2cd phi_n;
  phi_n << 1.0, wn / (s.alpha * Kn);

  FourierVec2 out(rhs.lo(), rhs.hi());
  for (int j = rhs.lo(); j <= rhs.hi(); ++j) {
    const Eigen::Vector2cd b = rhs.at(j);
    Eigen::Matrix2cd M = symbol_block(s, cp.mu0, j);
    M(0, 0) -= lam0;
    M(1, 1) -= lam0;
    if (j == cp.n || j == cp.m) {
      // Singular block (up to the collision residual): take the minimal-norm
      // least-squares solution.  The rank threshold must sit between the
      // true spectral gaps and the collision residual, or the pseudo-inverse
      // amplifies the defect instead of annihilating it.
      Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix2cd> cod;
      cod.setThreshold(1e-8);
      cod.compute(M);
      Eigen::Vector2cd x = cod.solve(b);
      const double defect = (M * x - b).norm();
      if (defect > rel_tol * std::max(rhs_norm, 1e-300)) {
        throw std::runtime_error(
            "solve_offresonant: solvability not satisfied at mode " +
            std::to_string(j) + " (defect " + std::to_string(defect) + ")");
      }
      if (j == cp.n) x -= x(0) * phi_n; // normalization h_hat(n) = 0
      out.ref(j) = x;
    } else {
      const cplx det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
      if (std::abs(det) < 1e-9) {
        throw std::runtime_error(
            "solve_offresonant: near-singular block at non-colliding mode " +
            std::to_string(j));
      }
      Eigen::Vector2cd x;
      x(0) = (M(1, 1) * b(0) - M(0, 1) * b(1)) / det;
      x(1) = (M(0, 0) * b(1) - M(1, 0) * b(0)) / det;
      out.ref(j) = x;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// The order-by-order engine

namespace {

// Symbolic amplitude slots carried through the pipeline: the resolved part
// and the deferred amplitudes gamma_0..gamma_3 attached to the mode-m null
// direction at successive orders.
enum Slot { kConst = 0, kG0 = 1, kG1 = 2, kG2 = 3, kG3 = 4, kNumSlots = 5 };

using SlotVec = std::array<FourierVec2, kNumSlots>;

struct Order34Data {
  double mu3 = 0.0;
  SolvabilityCoeffs C3, C4;
  cplx lambda3{0.0, 0.0};
  cplx gamma0{0.0, 0.0};
  cplx lambda4{0.0, 0.0};
  double mu4 = 0.0;
  double P4n = 0.0, P4m = 0.0;
  cplx gamma1{0.0, 0.0};
  bool gamma1_determined = false;
  double det_identity_rel = 0.0; // |det - 8 Re lambda3| / |8 Re lambda3|
  double cramer_rel = 0.0;       // closed-form lambda4 vs direct linear solve
};

struct Engine {
  Engine(const StokesSeries& ser, const CollisionPoint& cp0)
      : s(ser.setup), cp(cp0), tables(make_tables(ser, cp0.mu0)) {
    Kn = cp.mu0 + cp.n;
    Km = cp.mu0 + cp.m;
    wn = omega_alpha(s, Kn);
    wm = omega_alpha(s, Km);
    cgn = group_velocity(s, 1, Kn);
    cgm = group_velocity(s, -1, Km);
    if (std::abs(cgm - cgn) < 1e-10) {
      throw std::runtime_error(
          "perturbation: group velocities coincide at the collision");
    }
    phi_n << 1.0, wn / (s.alpha * Kn);
    phi_m << 1.0, -wm / (s.alpha * Km);
    psi_n << 1.0, s.alpha * Kn / wn;
    psi_m << 1.0, -s.alpha * Km / wm;

    // Pairings <psi, phi> = 2.  Every condition row is normalized by half
    // its pairing, which makes the reported coefficients independent of how
    // the projection vectors are scaled.
    npair = pair(psi_n, phi_n);
    mpair = pair(psi_m, phi_m);

    w0[kConst].ref(cp.n) = phi_n;
    w0[kG0].ref(cp.m) = phi_m;
    for (int g : {kConst, kG0}) mu_probe[g] = dmu_apply(w0[g]);

    // The mu coefficients of the conditions are group velocities in
    // disguise -- a cross-check against the dispersion module.
    dn = proj_n(mu_probe[kConst]);
    dm = proj_m(mu_probe[kG0]);
    const cplx dn_expect = 2.0 * I_ * cgn;
    const cplx dm_expect = 2.0 * I_ * cgm;
    if (std::abs(dn - dn_expect) > 1e-10 * std::abs(dn_expect) ||
        std::abs(dm - dm_expect) > 1e-10 * std::abs(dm_expect)) {
      throw std::runtime_error(
          "perturbation: projected mu coefficients disagree with group "
          "velocities");
    }
  }

  // --- first order: lambda1 = mu1 = 0 and w1 ---
  void run_order1() {
    SlotVec rhs{};
    for (int g : {kConst, kG0}) {
      rhs[g] = minus(apply_order(tables, 1, {}, w0[g]));
    }
    C1 = extract(1, rhs);

    // Both constants are structural zeros; the 2x2 solve returns the (tiny)
    // first-order residuals, evaluated at gamma0 = 1.
    Eigen::Matrix2cd A;
    A << cplx(2.0, 0.0), dn, cplx(2.0, 0.0), dm;
    Eigen::Vector2cd b;
    b << -(C1.n_const + C1.n_g0), -(C1.m_const + C1.m_g0);
    const Eigen::Vector2cd x = A.partialPivLu().solve(b);
    lambda1_abs = std::abs(x(0));
    mu1_abs = std::abs(x(1));

    for (int g : {kConst, kG0}) {
      w1[g] = solve_and_check(rhs[g]);
    }
    w1[kG1].ref(cp.m) = phi_m;
  }

  // --- second order ---
  void run_order2() {
    SlotVec rhs{};
    for (int g : {kConst, kG0, kG1}) {
      FourierVec2 r;
      if (!w1[g].empty()) r += minus(apply_order(tables, 1, {}, w1[g]));
      if (!w0[g].empty()) r += minus(apply_order(tables, 2, {}, w0[g]));
      rhs[g] = std::move(r);
    }
    C2 = extract(2, rhs);
    C2.T_m = C2.m_g1; // deferred-amplitude coupling, structurally zero

    const int ap = std::abs(cp.p);
    if (ap == 2) {
      // Coupled quadratic conditions: S and P decomposition.
      C2.S_n = -I_ * C2.n_g0;
      C2.S_m = -I_ * C2.m_const;
      set_P(C2, I_ * C2.n_const / 2.0, I_ * C2.m_g0 / 2.0);
      finalize_S(C2);
      P2n = C2.P_n;
      P2m = C2.P_m;
      mu2 = (P2m - P2n) / (cgm - cgn); // interval midpoint mu_{2,*}
      const double chat_n = mu2 * cgn - P2n;
      const double chat_m = mu2 * cgm - P2m;
      lambda2 = -I_ * 0.5 * (chat_m + chat_n) +
                C2.S / (2.0 * std::sqrt(wn * wm)); // unstable branch
      gamma0 = -(2.0 * lambda2 + dn * mu2 + C2.n_const) / C2.n_g0;
      return;
    }

    // |p| >= 3: the two conditions decouple and fix lambda2, mu2 linearly.
    set_P(C2, I_ * C2.n_const / 2.0, I_ * C2.m_g0 / 2.0);
    P2n = C2.P_n;
    P2m = C2.P_m;
    Eigen::Matrix2cd A;
    A << cplx(2.0, 0.0), dn, cplx(2.0, 0.0), dm;
    Eigen::Vector2cd b;
    b << -C2.n_const, -C2.m_g0;
    const Eigen::Vector2cd x = A.partialPivLu().solve(b);
    lambda2 = x(0);
    mu2 = x(1).real();
    C2.im_defect = std::max(
        C2.im_defect, std::abs(x(1).imag()) / std::max(1.0, std::abs(x(1))));

    for (int g : {kConst, kG0, kG1}) {
      FourierVec2 r = rhs[g];
      if (!w0[g].empty()) {
        r += lambda2 * w0[g];
        r += mu2 * mu_probe[g];
      }
      w2[g] = solve_and_check(r);
    }
    w2[kG2].ref(cp.m) = phi_m;
  }

  // --- third-order right-hand side (current-order unknowns excluded) ---
  SlotVec order3_base() const {
    SlotVec rhs{};
    const MuCorrections mc2{mu2, 0.0, 0.0};
    for (int g : {kConst, kG0, kG1, kG2}) {
      FourierVec2 r;
      if (!w2[g].empty()) r += minus(apply_order(tables, 1, {}, w2[g]));
      if (!w1[g].empty()) {
        r += minus(apply_order(tables, 2, mc2, w1[g]));
        r += lambda2 * w1[g];
      }
      if (!w0[g].empty()) r += minus(apply_order(tables, 3, mc2, w0[g]));
      rhs[g] = std::move(r);
    }
    return rhs;
  }

  SolvabilityCoeffs order3_extract(const SlotVec& rhs) const {
    SolvabilityCoeffs c = extract(3, rhs);
    c.S_n = -I_ * c.n_g0;
    c.S_m = -I_ * c.m_const;
    c.T_m = c.m_g1; // identically zero; kept as a structure diagnostic
    finalize_S(c);
    return c;
  }

  SolvabilityCoeffs order3_coeffs() const {
    return order3_extract(order3_base());
  }

  // --- third and fourth order at one setting of the free parameter mu3 ---
  Order34Data run_orders34(double mu3, bool degenerate) {
    if (degenerate && mu3 != 0.0) {
      throw std::invalid_argument(
          "run_orders34: degenerate branch requires mu3 = 0");
    }
    Order34Data d;
    d.mu3 = mu3;
    SlotVec rhs3 = order3_base();
    d.C3 = order3_extract(rhs3);

    const double dcg = cgm - cgn;
    if (!degenerate) {
      const double disc = d.C3.S * d.C3.S / (4.0 * wn * wm) -
                          mu3 * mu3 * 0.25 * dcg * dcg;
      d.lambda3 = -I_ * mu3 * 0.5 * (cgm + cgn) + std::sqrt(cplx(disc, 0.0));
      d.gamma0 = -(2.0 * d.lambda3 + dn * mu3 + d.C3.n_const) / d.C3.n_g0;
    } else {
      // S_3 = 0 within tolerance: lambda3 = mu3 = 0 and both conditions hold
      // for any gamma0; the convention gamma0 = 1 keeps the pipeline going
      // and order 4 still determines lambda4 and mu4.
      d.lambda3 = cplx(0.0, 0.0);
      d.gamma0 = cplx(1.0, 0.0);
    }

    // Collapse the gamma0 slot now that gamma0 is known.
    SlotVec w0f = fold(w0, d.gamma0);
    SlotVec w1f = fold(w1, d.gamma0);
    SlotVec w2f = fold(w2, d.gamma0);
    const FourierVec2 probe0 = dmu_apply(w0f[kConst]);

    SlotVec rhs3f{};
    rhs3f[kConst] = rhs3[kConst];
    rhs3f[kConst] += d.gamma0 * rhs3[kG0];
    rhs3f[kConst] += d.lambda3 * w0f[kConst];
    rhs3f[kConst] += mu3 * probe0;
    rhs3f[kG1] = rhs3[kG1];
    rhs3f[kG2] = rhs3[kG2];

    SlotVec w3{};
    for (int g : {kConst, kG1, kG2}) {
      w3[g] = solve_and_check(rhs3f[g]);
    }
    w3[kG3].ref(cp.m) = phi_m;

    // Fourth order.
    const MuCorrections mc2{mu2, 0.0, 0.0};
    const MuCorrections mc3{mu2, mu3, 0.0};
    SlotVec rhs4{};
    for (int g : {kConst, kG1, kG2, kG3}) {
      FourierVec2 r;
      if (!w3[g].empty()) r += minus(apply_order(tables, 1, {}, w3[g]));
      if (!w2f[g].empty()) {
        r += minus(apply_order(tables, 2, mc2, w2f[g]));
        r += lambda2 * w2f[g];
      }
      if (!w1f[g].empty()) {
        r += minus(apply_order(tables, 3, mc3, w1f[g]));
        r += d.lambda3 * w1f[g];
      }
      if (!w0f[g].empty()) r += minus(apply_order(tables, 4, mc3, w0f[g]));
      rhs4[g] = std::move(r);
    }

    SolvabilityCoeffs& c4 = d.C4;
    c4.order = 4;
    c4.n_const = proj_n(rhs4[kConst]);
    c4.n_g1 = proj_n(rhs4[kG1]);
    c4.n_g2 = proj_n(rhs4[kG2]);
    c4.n_g3 = proj_n(rhs4[kG3]);
    c4.m_const = proj_m(rhs4[kConst]);
    c4.m_g1 = proj_m(rhs4[kG1]);
    c4.m_g2 = proj_m(rhs4[kG2]);
    c4.m_g3 = proj_m(rhs4[kG3]);
    c4.T_m = c4.m_g2; // identically zero; kept as a structure diagnostic

    set_P(c4, I_ * c4.n_const / 2.0, I_ * c4.m_const / (2.0 * d.gamma0));
    d.P4n = c4.P_n;
    d.P4m = c4.P_m;

    // Regular-curve condition and the purely imaginary fourth-order drift.
    d.mu4 = (d.P4m - d.P4n) / dcg;
    d.lambda4 = -I_ * (d.P4m * cgn - d.P4n * cgm) / dcg;

    if (!degenerate) {
      // Determinant identity of the (lambda4, gamma1) system: 8 Re lambda3.
      const cplx det = 2.0 * c4.m_g1 - 2.0 * d.gamma0 * c4.n_g1;
      const double l3r = d.lambda3.real();
      d.det_identity_rel =
          std::abs(det - 8.0 * l3r) / std::max(std::abs(8.0 * l3r), 1e-300);

      // Cross-check: solve the pair directly at the regular-curve mu4.
      Eigen::Matrix2cd A;
      A << cplx(2.0, 0.0), c4.n_g1, 2.0 * d.gamma0, c4.m_g1;
      Eigen::Vector2cd b;
      b << -(c4.n_const + dn * d.mu4), -(c4.m_const + d.gamma0 * dm * d.mu4);
      const Eigen::Vector2cd x = A.partialPivLu().solve(b);
      d.cramer_rel =
          std::abs(x(0) - d.lambda4) / std::max(std::abs(d.lambda4), 1e-300);
      d.gamma1 = x(1);
      d.gamma1_determined = true;
    }
    return d;
  }

  // --- projections and helpers ---
  cplx proj_n(const FourierVec2& v) const {
    return pair(psi_n, v.at(cp.n)) * (2.0 / npair);
  }
  cplx proj_m(const FourierVec2& v) const {
    return pair(psi_m, v.at(cp.m)) * (2.0 / mpair);
  }

  SolvabilityCoeffs extract(int order, const SlotVec& rhs) const {
    SolvabilityCoeffs c;
    c.order = order;
    c.n_const = proj_n(rhs[kConst]);
    c.n_g0 = proj_n(rhs[kG0]);
    c.n_g1 = proj_n(rhs[kG1]);
    c.n_g2 = proj_n(rhs[kG2]);
    c.n_g3 = proj_n(rhs[kG3]);
    c.m_const = proj_m(rhs[kConst]);
    c.m_g0 = proj_m(rhs[kG0]);
    c.m_g1 = proj_m(rhs[kG1]);
    c.m_g2 = proj_m(rhs[kG2]);
    c.m_g3 = proj_m(rhs[kG3]);
    return c;
  }

  static void set_P(SolvabilityCoeffs& c, cplx pn, cplx pm) {
    c.P_n = pn.real();
    c.P_m = pm.real();
    c.im_defect = std::max(
        c.im_defect, std::max(std::abs(pn.imag()), std::abs(pm.imag())) /
                         std::max({std::abs(pn), std::abs(pm), 1e-300}));
  }

  void finalize_S(SolvabilityCoeffs& c) const {
    // Product identity: S_n S_m w_n w_m = -S^2 (real and non-positive).
    const cplx prod = c.S_n * c.S_m * (wn * wm);
    c.S = std::sqrt(std::max(-prod.real(), 0.0));
    const double scale = std::max(std::abs(prod), 1e-300);
    c.im_defect = std::max(c.im_defect, std::abs(prod.imag()) / scale);
  }

  FourierVec2 dmu_apply(const FourierVec2& w) const {
    // Minus the mu derivative of the zero-amplitude operator applied to w
    // (it enters right-hand sides with that sign).
    FourierVec2 out(w.lo(), w.hi());
    for (int j = w.lo(); j <= w.hi(); ++j) {
      out.ref(j) = -(symbol_block_dmu(s, cp.mu0, j) * w.at(j));
    }
    return out;
  }

  FourierVec2 solve_and_check(const FourierVec2& rhs) {
    if (rhs.empty()) return rhs;
    FourierVec2 x = solve_offresonant(s, cp, rhs, 1e-9);
    // Round trip (L0 - lambda0) x = rhs away from the singular modes.
    double num = 0.0;
    for (int j = x.lo(); j <= x.hi(); ++j) {
      if (j == cp.n || j == cp.m) continue;
      Eigen::Matrix2cd M = symbol_block(s, cp.mu0, j);
      M(0, 0) -= cp.lambda0;
      M(1, 1) -= cp.lambda0;
      num += (M * x.at(j) - rhs.at(j)).squaredNorm();
    }
    roundtrip_rel = std::max(roundtrip_rel,
                             std::sqrt(num) / std::max(rhs.norm(), 1e-300));
    return x;
  }

  static cplx pair(const Eigen::Vector2cd& psi, const Eigen::Vector2cd& v) {
    return std::conj(psi(0)) * v(0) + std::conj(psi(1)) * v(1);
  }
  static FourierVec2 minus(FourierVec2 v) {
    v *= cplx(-1.0, 0.0);
    return v;
  }
  static SlotVec fold(const SlotVec& w, cplx g0) {
    SlotVec out = w;
    if (!out[kG0].empty()) {
      out[kConst] += g0 * out[kG0];
      out[kG0] = FourierVec2();
    }
    return out;
  }

  ModelSetup s;
  CollisionPoint cp;
  OrderTables tables;

  double Kn = 0, Km = 0, wn = 0, wm = 0, cgn = 0, cgm = 0;
  Eigen::Vector2cd phi_n, phi_m, psi_n, psi_m;
  cplx npair, mpair, dn, dm;

  SlotVec w0{}, w1{}, w2{};
  SlotVec mu_probe{};
  SolvabilityCoeffs C1, C2;
  double lambda1_abs = 0.0, mu1_abs = 0.0;
  cplx lambda2{0.0, 0.0};
  double mu2 = 0.0;
  double P2n = 0.0, P2m = 0.0;
  cplx gamma0{0.0, 0.0};
  double roundtrip_rel = 0.0;
};

void fill_base(IsolaAsymptotics& a, const Engine& e) {
  a.p = e.cp.p;
  a.collision = e.cp;
  a.setup = e.s;
  a.omega_n = e.wn;
  a.omega_m = e.wm;
  a.cg_n = e.cgn;
  a.cg_m = e.cgm;
  a.lambda1_abs = e.lambda1_abs;
  a.mu1_abs = e.mu1_abs;
  a.P2_n = e.P2n;
  a.P2_m = e.P2m;
  a.lambda2 = e.lambda2;
  a.mu2 = e.mu2;
  a.orders.push_back(e.C1);
  a.orders.push_back(e.C2);
}

// Degeneracy test for the S_3 = 0 branch: the couplings themselves vanish at
// the root, so compare against the natural scale of the collision eigenvalue.
bool s3_degenerate(double S3, const CollisionPoint& cp) {
  return S3 < 1e-8 * (1.0 + std::abs(cp.lambda0.imag()));
}

} // namespace

// ---------------------------------------------------------------------------
// Public drivers

IsolaAsymptotics p2_asymptotics(const StokesSeries& ser,
                                const CollisionPoint& cp) {
  if (std::abs(cp.p) != 2) {
    throw std::invalid_argument("p2_asymptotics: collision must have |p| = 2");
  }
  Engine e(ser, cp);
  e.run_order1();
  e.run_order2();

  IsolaAsymptotics a;
  fill_base(a, e);
  a.S = e.C2.S;
  a.S_n = e.C2.S_n;
  a.S_m = e.C2.S_m;
  a.gamma0 = e.gamma0;
  a.roundtrip_rel = e.roundtrip_rel;
  if (!(a.S > 1e-10 * (1.0 + std::abs(cp.lambda0.imag())))) {
    throw std::runtime_error(
        "p2_asymptotics: coupling S_2 vanishes (no instability at this "
        "order)");
  }
  const double root = std::sqrt(e.wn * e.wm);
  a.interval_halfwidth = a.S / (std::abs(e.cgm - e.cgn) * root);
  a.growth_coeff = a.S / (2.0 * root);
  return a;
}

IsolaAsymptotics p3_asymptotics(const StokesSeries& ser,
                                const CollisionPoint& cp) {
  if (std::abs(cp.p) != 3) {
    throw std::invalid_argument("p3_asymptotics: collision must have |p| = 3");
  }
  Engine e(ser, cp);
  e.run_order1();
  e.run_order2();

  IsolaAsymptotics a;
  fill_base(a, e);
  a.re_lambda2_rel =
      std::abs(e.lambda2.real()) / std::max(std::abs(e.lambda2), 1e-300);

  const SolvabilityCoeffs c3probe = e.order3_coeffs();
  a.degenerate = s3_degenerate(c3probe.S, cp);
  const Order34Data d0 = e.run_orders34(0.0, a.degenerate);

  const double root = std::sqrt(e.wn * e.wm);
  a.S = d0.C3.S;
  a.S_n = d0.C3.S_n;
  a.S_m = d0.C3.S_m;
  a.interval_halfwidth =
      a.degenerate ? 0.0 : a.S / (std::abs(e.cgm - e.cgn) * root);
  a.growth_coeff = a.degenerate ? 0.0 : a.S / (2.0 * root);
  a.gamma0 = d0.gamma0;
  a.gamma1 = d0.gamma1;
  a.gamma1_determined = d0.gamma1_determined;
  a.lambda4 = d0.lambda4;
  a.mu4 = d0.mu4;
  a.P4_n = d0.P4n;
  a.P4_m = d0.P4m;
  a.re_lambda4_rel =
      std::abs(d0.lambda4.real()) / std::max(std::abs(d0.lambda4), 1e-300);
  a.orders.push_back(d0.C3);
  a.orders.push_back(d0.C4);

  // Scales for the structural-zero diagnostics: the couplings at order 3 and
  // the condition entries at order 4.  Near the degenerate root those vanish
  // too, so fall back to the eigenvalue scale.
  const double lam_scale = 1.0 + std::abs(cp.lambda0.imag());
  const double cscale =
      a.degenerate
          ? lam_scale
          : std::max({std::abs(d0.C3.S_n), std::abs(d0.C3.S_m), 1e-300});
  const double c4scale =
      a.degenerate
          ? lam_scale
          : std::max({std::abs(d0.C4.n_g1), std::abs(d0.C4.m_g1), cscale});
  a.T3_rel = std::abs(d0.C3.T_m) / cscale;
  a.T4_rel = std::abs(d0.C4.T_m) / c4scale;

  // The regular-curve corrections must not depend on the free ellipse
  // parameter mu3; verify over a grid spanning 90% of the interval.
  if (!a.degenerate) {
    const double M3 = a.interval_halfwidth;
    double spread = 0.0;
    for (double f : {-0.9, -0.45, 0.45, 0.9}) {
      const Order34Data d = e.run_orders34(f * M3, false);
      spread = std::max(spread, std::abs(d.lambda4 - d0.lambda4) /
                                    std::max(std::abs(d0.lambda4), 1e-300));
      spread = std::max(spread, std::abs(d.mu4 - d0.mu4) /
                                    std::max(std::abs(d0.mu4), 1e-300));
      a.T4_rel = std::max(a.T4_rel, std::abs(d.C4.T_m) / c4scale);
    }
    a.mu3_independence = spread;
  }
  a.roundtrip_rel = e.roundtrip_rel;
  return a;
}

std::vector<SolvabilityCoeffs> solvability_coeffs(const StokesSeries& ser,
                                                  const CollisionPoint& cp,
                                                  int up_to_order, double mu3) {
  const int ap = std::abs(cp.p);
  const int max_order = (ap == 3) ? 4 : 2;
  if (up_to_order < 1 || up_to_order > max_order) {
    throw std::invalid_argument("solvability_coeffs: order out of range");
  }
  Engine e(ser, cp);
  std::vector<SolvabilityCoeffs> out;
  e.run_order1();
  out.push_back(e.C1);
  if (up_to_order >= 2) {
    e.run_order2();
    out.push_back(e.C2);
  }
  if (up_to_order >= 3) {
    const SolvabilityCoeffs probe = e.order3_coeffs();
    const bool deg = s3_degenerate(probe.S, cp);
    const Order34Data d = e.run_orders34(deg ? 0.0 : mu3, deg);
    out.push_back(d.C3);
    if (up_to_order >= 4) out.push_back(d.C4);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation at finite amplitude

std::vector<IsolaCurvePoint> asymptotic_ellipse(const IsolaAsymptotics& a,
                                                double eps, int samples,
                                                int order) {
  if (samples < 2) {
    throw std::invalid_argument("asymptotic_ellipse: samples < 2");
  }
  const int ap = std::abs(a.p);
  if (ap != 2 && ap != 3) {
    throw std::invalid_argument("asymptotic_ellipse: only |p| in {2, 3}");
  }
  std::vector<IsolaCurvePoint> pts;
  pts.reserve(static_cast<std::size_t>(samples));
  const double e2 = eps * eps;
  const CollisionPoint& cp = a.collision;

  if (ap == 2) {
    const double hw = a.interval_halfwidth;
    for (int i = 0; i < samples; ++i) {
      const double t = static_cast<double>(i) / (samples - 1);
      const double m2 = a.mu2 - hw * std::cos(std::numbers::pi * t);
      const double chat_n = m2 * a.cg_n - a.P2_n;
      const double chat_m = m2 * a.cg_m - a.P2_m;
      const double disc = a.S * a.S / (4.0 * a.omega_n * a.omega_m) -
                          0.25 * (chat_m - chat_n) * (chat_m - chat_n);
      const double r = std::sqrt(std::max(disc, 0.0));
      const cplx drift = -I_ * 0.5 * (chat_m + chat_n);
      IsolaCurvePoint p;
      p.mu = cp.mu0 + m2 * e2;
      p.lambda_plus = cp.lambda0 + e2 * (drift + r);
      p.lambda_minus = cp.lambda0 + e2 * (drift - r);
      pts.push_back(p);
    }
    return pts;
  }

  const bool fourth = (order >= 4);
  const double e3 = e2 * eps;
  const double e4 = e2 * e2;
  const double M3 = a.interval_halfwidth;
  const cplx base = cp.lambda0 + e2 * a.lambda2 +
                    (fourth ? e4 * a.lambda4 : cplx(0.0, 0.0));
  const double mu_base = cp.mu0 + a.mu2 * e2 + (fourth ? a.mu4 * e4 : 0.0);
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / (samples - 1);
    const double m3 = -M3 * std::cos(std::numbers::pi * t);
    const double disc =
        a.S * a.S / (4.0 * a.omega_n * a.omega_m) -
        m3 * m3 * 0.25 * (a.cg_m - a.cg_n) * (a.cg_m - a.cg_n);
    const double r = std::sqrt(std::max(disc, 0.0));
    const cplx drift = -I_ * m3 * 0.5 * (a.cg_m + a.cg_n);
    IsolaCurvePoint p;
    p.mu = mu_base + m3 * e3;
    p.lambda_plus = base + e3 * (drift + r);
    p.lambda_minus = base + e3 * (drift - r);
    pts.push_back(p);
  }
  return pts;
}

AsymptoticIsola evaluate_isola(const IsolaAsymptotics& a, double eps,
                               int order) {
  const int ap = std::abs(a.p);
  if (ap != 2 && ap != 3) {
    throw std::invalid_argument("evaluate_isola: only |p| in {2, 3}");
  }
  AsymptoticIsola r;
  r.p = a.p;
  r.eps = eps;
  const double e2 = eps * eps;
  const CollisionPoint& cp = a.collision;
  const double root = std::sqrt(a.omega_n * a.omega_m);

  if (ap == 2) {
    r.present = true;
    r.floquet_lo = cp.mu0 + (a.mu2 - a.interval_halfwidth) * e2;
    r.floquet_hi = cp.mu0 + (a.mu2 + a.interval_halfwidth) * e2;
    r.mu_star = cp.mu0 + a.mu2 * e2;
    r.growth_max = a.growth_coeff * e2;
    const double chat_n = a.mu2 * a.cg_n - a.P2_n;
    const double chat_m = a.mu2 * a.cg_m - a.P2_m;
    r.lambda_star =
        cp.lambda0 + e2 * (-I_ * 0.5 * (chat_m + chat_n) + a.S / (2.0 * root));
    return r;
  }

  const bool fourth = (order >= 4);
  const double e3 = e2 * eps;
  const double e4 = e2 * e2;
  r.present = !a.degenerate;
  const double center = cp.mu0 + a.mu2 * e2 + (fourth ? a.mu4 * e4 : 0.0);
  r.floquet_lo = center - a.interval_halfwidth * e3;
  r.floquet_hi = center + a.interval_halfwidth * e3;
  r.mu_star = center;
  r.growth_max = a.growth_coeff * e3;
  r.lambda_star = cp.lambda0 + e2 * a.lambda2 + e3 * (a.S / (2.0 * root)) +
                  (fourth ? e4 * a.lambda4 : cplx(0.0, 0.0));
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps over alpha

namespace {

// Magnitude S_p plus the raw n-coupling used for continuity tracking.
cplx sweep_coupling(int p, double alpha, double* S_out) {
  const ModelSetup s = ModelSetup::make(alpha);
  const StokesSeries ser = stokes_coefficients(s);
  const CollisionPoint cp = solve_collision(s, p);
  Engine e(ser, cp);
  e.run_order1();
  e.run_order2();
  if (std::abs(p) == 2) {
    if (S_out) *S_out = e.C2.S;
    return e.C2.S_n;
  }
  const SolvabilityCoeffs c3 = e.order3_coeffs();
  if (S_out) *S_out = c3.S;
  return c3.S_n;
}

} // namespace

std::vector<SweepPoint> sweep_S(int p, const std::vector<double>& alphas) {
  std::vector<SweepPoint> out;
  out.reserve(alphas.size());
  double sign = 1.0;
  cplx prev(0.0, 0.0);
  for (double alpha : alphas) {
    double S = 0.0;
    const cplx raw = sweep_coupling(p, alpha, &S);
    if (!out.empty() && (raw * std::conj(prev)).real() < 0.0) {
      sign = -sign; // the raw coupling passed through zero
    }
    prev = raw;
    out.push_back({alpha, sign * S});
  }
  return out;
}

double find_S3_root(double alpha_min, double alpha_max, int grid_points) {
  if (!(alpha_min > 0.0) || !(alpha_max > alpha_min) || grid_points < 8) {
    throw std::invalid_argument("find_S3_root: bad sweep parameters");
  }
  std::vector<double> alphas(static_cast<std::size_t>(grid_points));
  const double la = std::log(alpha_min);
  const double lb = std::log(alpha_max);
  for (int i = 0; i < grid_points; ++i) {
    alphas[static_cast<std::size_t>(i)] =
        std::exp(la + (lb - la) * i / (grid_points - 1));
  }
  const std::vector<SweepPoint> sw = sweep_S(3, alphas);
  int flip = -1;
  for (std::size_t i = 1; i < sw.size(); ++i) {
    if (sw[i - 1].S * sw[i].S < 0.0) {
      flip = static_cast<int>(i);
      break;
    }
  }
  if (flip < 0) {
    throw std::runtime_error("find_S3_root: no sign change in the sweep range");
  }

  double a = alphas[static_cast<std::size_t>(flip - 1)];
  double b = alphas[static_cast<std::size_t>(flip)];
  cplx raw_a = sweep_coupling(3, a, nullptr);
  for (int it = 0; it < 80 && (b - a) > 1e-13 * b; ++it) {
    const double mid = 0.5 * (a + b);
    const cplx raw_m = sweep_coupling(3, mid, nullptr);
    if ((raw_m * std::conj(raw_a)).real() > 0.0) {
      a = mid;
      raw_a = raw_m;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

} // namespace bwstab
