#pragma once

#include <complex>
#include <vector>

#include "bwstab/model.hpp"

namespace bwstab {

// Dispersion relation of the linearized system in the rest frame,
//   omega_alpha(k) = sgn(k) * sqrt(alpha k tanh(alpha k)),
// an odd, strictly increasing function of k.
double omega_alpha(const ModelSetup& s, double k);

// d/dk of omega_alpha.  Even, positive, with the removable limit
// omega_alpha'(0) = alpha; satisfies omega_alpha'(k) < alpha*c0 for |k| > 1.
double omega_alpha_prime(const ModelSetup& s, double k);

// Dispersion branches in the frame co-moving with the Stokes wave:
//   Omega_sigma(k) = -alpha c0 k + sigma omega_alpha(k),  sigma = +1 or -1.
double big_omega(const ModelSetup& s, int sigma, double k);

// Group velocity c_{g,sigma}(k) = Omega_sigma'(k) = -alpha c0 + sigma omega_alpha'(k).
double group_velocity(const ModelSetup& s, int sigma, double k);

// A nonzero collision of zero-amplitude eigenvalues: the unique k with
// Omega_1(k) = Omega_{-1}(k+p), decomposed into Fourier mode n = [k] and
// Floquet exponent mu0 = k - n.  Seeds the order-p high-frequency isola.
struct CollisionPoint {
  int p = 0;                     // mode offset m - n, |p| >= 2
  double k = 0.0;                // root of the collision condition
  int n = 0;                     // nearest integer to k
  int m = 0;                     // n + p
  double mu0 = 0.0;              // k - n, in [-1/2, 1/2]
  std::complex<double> lambda0;  // -i Omega_1(mu0 + n), nonzero and imaginary
  double residual = 0.0;         // |Omega_1(k) - Omega_{-1}(k+p)| at the root
  bool half_integer_tie = false; // k landed exactly between two integers
};

// Solves the collision condition for integer |p| >= 2.  For p in {0, +1, -1}
// the only roots give lambda0 = 0 (no isola); those p are rejected with
// std::invalid_argument("no nonzero collision").
CollisionPoint solve_collision(const ModelSetup& s, int p);

// Collision points for p = -p_max..-2 and 2..p_max, ascending in p.
std::vector<CollisionPoint> collision_ladder(const ModelSetup& s, int p_max);

} // namespace bwstab
