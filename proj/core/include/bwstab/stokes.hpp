#pragma once

#include <array>

#include "bwstab/model.hpp"

namespace bwstab {

// Fourier multiplier of K_alpha at wavenumber k: tanh(alpha k)/(alpha k),
// with the removable value 1 at k = 0.
double kalpha_symbol(const ModelSetup& s, double k);

// Fourth-order small-amplitude expansion of the 2*pi-periodic right-moving
// Stokes wave,
//
//   eta_S = eps cos x + eps^2 eta_2 + eps^3 eta_3 + eps^4 eta_4 + O(eps^5),
//   u_S   = c0 eps cos x + eps^2 u_2 + ... ,
//   c     = c0 + c2 eps^2 + c4 eps^4 + O(eps^6),
//
// where the amplitude parameter is pinned to the first Fourier mode,
// eps = 2*etahat_S(1) exactly.  Each eta_j, u_j is a finite, even cosine
// polynomial; entry (j, l) below stores its exponential-basis coefficient at
// modes +-l, i.e. eta_j(x) = E[j][0] + sum_{l>=1} 2 E[j][l] cos(l x).
struct StokesSeries {
  ModelSetup setup;

  static constexpr int max_order = 4;
  static constexpr int max_harmonic = 4;
  // Rows indexed by order j = 1..4 (row 0 unused), columns by harmonic l = 0..4.
  std::array<std::array<double, max_harmonic + 1>, max_order + 1> eta{};
  std::array<std::array<double, max_harmonic + 1>, max_order + 1> u{};

  double c0 = 0.0, c2 = 0.0, c4 = 0.0;

  double speed(double eps) const {
    const double e2 = eps * eps;
    return c0 + (c2 + c4 * e2) * e2;
  }

  // Exponential Fourier coefficient of eta_S (or u_S) at integer mode l,
  // |l| <= 4, for the given amplitude: sum_j eps^j E[j][|l|].
  double eta_hat(double eps, int l) const;
  double u_hat(double eps, int l) const;
};

// Evaluates every closed-form coefficient of the expansion.  Finite for all
// alpha > 0: the divisors c0^2 - C_l^2 (l = 2, 3, 4) and c0^2 - 1 never
// vanish because tanh(z)/z is strictly decreasing.
StokesSeries stokes_coefficients(const ModelSetup& s);

struct WaveSample {
  double eta = 0.0;
  double u = 0.0;
  double c = 0.0;
};

// Pointwise evaluation of the truncated series.  |eps| > 0.05 is outside the
// small-amplitude regime the expansion targets; a one-line warning goes to
// stderr but values are still returned.
WaveSample eval_wave(const StokesSeries& ser, double eps, double x);

// Independent check of the series against the steady traveling-wave system,
//   R1 = c eta - u - eta u,   R2 = c u - K_alpha[eta] - u^2/2,
// assembled by exact harmonic convolution of the truncated series.  Returns
// the largest |Fourier coefficient| over both residuals; decays like eps^5
// when every tabulated coefficient is correct.
double traveling_residual(const StokesSeries& ser, double eps);

} // namespace bwstab
