#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "bwstab/dispersion.hpp"
#include "bwstab/stokes.hpp"

namespace bwstab {

using cplx = std::complex<double>;

// Finite-support Fourier coefficient vector with a C^2 value (surface,
// velocity) at each integer mode.  The order-by-order corrections live on a
// dozen modes around the colliding pair, so dense storage over an inclusive
// window is enough.
class FourierVec2 {
 public:
  FourierVec2() = default;
  FourierVec2(int lo, int hi); // inclusive window, zero-initialized

  bool empty() const { return d_.empty(); }
  int lo() const { return lo_; }
  int hi() const { return lo_ + static_cast<int>(d_.size()) - 1; }

  // Value at mode j (zero outside the window).
  Eigen::Vector2cd at(int j) const;
  // Mutable access; grows the window as needed.
  Eigen::Vector2cd& ref(int j);

  FourierVec2& operator+=(const FourierVec2& o);
  FourierVec2& operator*=(cplx a);
  friend FourierVec2 operator+(FourierVec2 a, const FourierVec2& b) {
    a += b;
    return a;
  }
  friend FourierVec2 operator*(cplx a, FourierVec2 v) {
    v *= a;
    return v;
  }

  double norm() const; // sqrt of the sum of squared entry magnitudes

 private:
  int lo_ = 0;
  std::vector<Eigen::Vector2cd> d_;
};

// 2x2 Fourier symbol of the zero-amplitude operator at mode j and Floquet
// exponent mu0; eigenvalues -i Omega_{+-1}(mu0 + j).
Eigen::Matrix2cd symbol_block(const ModelSetup& s, double mu0, int j);
// d/dmu of the symbol (the operator obtained by differentiating every
// occurrence of mu in the zero-amplitude operator).
Eigen::Matrix2cd symbol_block_dmu(const ModelSetup& s, double mu0, int j);

struct MuCorrections {
  double mu2 = 0.0, mu3 = 0.0, mu4 = 0.0; // mu1 = 0 always (first order is trivial)
};

// Applies the eps^order coefficient of the expansion of the linearized
// operator about (eps = 0, mu = mu0 + mu2 eps^2 + mu3 eps^3 + mu4 eps^4).
// Multiplications by the Stokes harmonics shift modes by at most `order`;
// the sech^2 / sech^2 tanh multipliers act diagonally.
FourierVec2 apply_order_operator(const StokesSeries& ser, double mu0, int order,
                                 const MuCorrections& mu, const FourierVec2& w);

// Solves (L0 - lambda0) w = rhs mode by mode at a collision.  Away from the
// colliding modes n, m the 2x2 blocks are invertible.  At n and m the blocks
// are singular: rhs must lie in their range (checked against
// rel_tol * ||rhs||, violation throws "solvability not satisfied"), the
// minimal-norm particular solution is taken, and the normalization
// h_hat(n) = 0 is enforced by removing the null-direction component at n.
// The homogeneous slot at m is NOT added here; callers track it explicitly.
FourierVec2 solve_offresonant(const ModelSetup& s, const CollisionPoint& cp,
                              const FourierVec2& rhs, double rel_tol = 1e-9);

// Projected solvability data of one perturbation order.  Writing the two
// conditions (projections against the adjoint null vectors at modes n, m) as
//
//   n:        2 lambda_j + dn mu_j + n_const + n_g0 g0 + n_g1 g1 + ... = 0
//   m:  g0 * (2 lambda_j + dm mu_j) + m_const + m_g0 g0 + m_g1 g1 + ... = 0
//
// with dn = 2i c_{g,1}(mu0+n), dm = 2i c_{g,-1}(mu0+m); the named S / P / T
// combinations below are the same groupings at each order.
struct SolvabilityCoeffs {
  int order = 0;

  cplx n_const, n_g0, n_g1, n_g2, n_g3; // n-condition coefficients
  cplx m_const, m_g0, m_g1, m_g2, m_g3; // m-condition coefficients

  // Order-p couplings S_{p,n}, S_{p,m} (present when order == |p|), the
  // drifts P_{j,n}, P_{j,m} (real), and the deferred-amplitude couplings
  // T_{j,m} that the solvability structure forces to vanish.
  cplx S_n{0.0, 0.0}, S_m{0.0, 0.0};
  double P_n = 0.0, P_m = 0.0;
  cplx T_m{0.0, 0.0};

  // S_j >= 0 from the product identity S_n S_m = -S_j^2/(w_m w_n).
  double S = 0.0;
  // Relative size of spurious parts (imaginary parts of P, nonzero T, ...):
  // diagnostics the tests pin down.
  double im_defect = 0.0;
};

// Numerically reconstructed asymptotics of one isola.
struct IsolaAsymptotics {
  int p = 0;
  CollisionPoint collision;
  ModelSetup setup;

  // Dispersion data at the colliding pair.
  double omega_n = 0.0, omega_m = 0.0; // omega_alpha(mu0+n), omega_alpha(mu0+m)
  double cg_n = 0.0, cg_m = 0.0;       // c_{g,1}(mu0+n), c_{g,-1}(mu0+m)

  // First-order residuals (both vanish; kept as diagnostics).
  double lambda1_abs = 0.0, mu1_abs = 0.0;

  // Order-2 data.  For |p| = 2 these are the P_{2,j} drifts entering the
  // ellipse; for |p| = 3 they resolve lambda2 (purely imaginary) and mu2.
  double P2_n = 0.0, P2_m = 0.0;
  cplx lambda2{0.0, 0.0};
  double mu2 = 0.0; // |p|=3 Floquet center correction; |p|=2: mu_{2,*}

  // Leading coupling at order |p|.
  double S = 0.0;                    // S_p >= 0
  cplx S_n{0.0, 0.0}, S_m{0.0, 0.0}; // raw couplings
  double interval_halfwidth = 0.0;   // M_2 half-width or M_3
  double growth_coeff = 0.0;         // lambda_r* / eps^p

  // Fourth-order data (|p| = 3 only).
  double P4_n = 0.0, P4_m = 0.0;
  cplx lambda4{0.0, 0.0}; // purely imaginary
  double mu4 = 0.0;
  cplx gamma0{0.0, 0.0}; // resolved at order p (mu3 = 0 branch, unstable sign)
  cplx gamma1{0.0, 0.0}; // resolved at order 4; meaningless when degenerate
  bool gamma1_determined = false;
  bool degenerate = false; // S_3 = 0 within tolerance (vanishing isola)

  // Per-order solvability dumps for inspection and tests.
  std::vector<SolvabilityCoeffs> orders;

  // Worst-case diagnostics accumulated across the pipeline (relative).
  double T3_rel = 0.0, T4_rel = 0.0;          // |T_{3,m}|, |T_{4,m}| vs coupling scale
  double re_lambda2_rel = 0.0;                 // |Re lambda2| / |lambda2|
  double re_lambda4_rel = 0.0;                 // |Re lambda4| / |lambda4|
  double mu3_independence = 0.0;               // spread of (lambda4, mu4) over mu3 grid
  double roundtrip_rel = 0.0;                  // (L0-lambda0) w_j vs rhs_j
};

// Solvability coefficients for orders 1..up_to_order of the expansion at the
// given collision (up_to_order <= |p| + (|p| == 3 ? 1 : 0)).  mu3 matters
// only for the order-4 conditions of |p| = 3.  Exposed for tests; the
// asymptotics drivers below consume the same pipeline.
std::vector<SolvabilityCoeffs> solvability_coeffs(const StokesSeries& ser,
                                                  const CollisionPoint& cp,
                                                  int up_to_order,
                                                  double mu3 = 0.0);

// Order-2 (p = +-2) isola asymptotics: ellipse data, Floquet interval
// half-width, growth coefficient.  Throws if S_2 vanishes within tolerance
// ("no instability at this order") -- not expected for any alpha > 0.
IsolaAsymptotics p2_asymptotics(const StokesSeries& ser, const CollisionPoint& cp);

// Order-3/4 (p = +-3) asymptotics: purely imaginary lambda2, mu2, the
// coupling S_3 and interval half-width M_3, the regular-curve corrections
// lambda4 and mu4, with the degenerate S_3 = 0 branch of the vanishing-isola
// aspect ratio.  Verifies mu3-independence of (lambda4, mu4) internally.
IsolaAsymptotics p3_asymptotics(const StokesSeries& ser, const CollisionPoint& cp);

// One point of the asymptotic isola curve.
struct IsolaCurvePoint {
  double mu = 0.0;
  cplx lambda_plus{0.0, 0.0};  // unstable branch (Re >= 0)
  cplx lambda_minus{0.0, 0.0}; // conjugate branch closing the curve
};

// Samples the asymptotic curve over its parameterizing interval at the given
// amplitude.  `order` selects the truncation for p = 3 (3 or 4; 4 = full,
// also the default); it is ignored for p = 2.
std::vector<IsolaCurvePoint> asymptotic_ellipse(const IsolaAsymptotics& a,
                                                double eps, int samples = 129,
                                                int order = 4);

// Interval endpoints, most unstable point, and growth at amplitude eps.
struct AsymptoticIsola {
  int p = 0;
  double eps = 0.0;
  bool present = false;
  double floquet_lo = 0.0, floquet_hi = 0.0;
  double mu_star = 0.0;
  cplx lambda_star{0.0, 0.0};
  double growth_max = 0.0;
};

AsymptoticIsola evaluate_isola(const IsolaAsymptotics& a, double eps,
                               int order = 4);

// Signed sweep diagnostic for locating roots of S_p(alpha): the magnitude
// S_p with the sign fixed by continuation in alpha (flips where S_p crosses
// zero).  `alphas` must be increasing.
struct SweepPoint {
  double alpha = 0.0;
  double S = 0.0; // signed
};
std::vector<SweepPoint> sweep_S(int p, const std::vector<double>& alphas);

// Root of S_3(alpha) located by a sign-change sweep plus bisection.
double find_S3_root(double alpha_min, double alpha_max, int grid_points = 400);

} // namespace bwstab
