#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "bwstab/stokes.hpp"

namespace bwstab {

// Dense Floquet-Fourier-Hill truncation of the linearized operator about a
// Stokes wave.  Fourier modes j = -N..N, two components (surface, velocity)
// per mode; the matrix is block-banded with block bandwidth 4 because the
// series carries harmonics up to 4.  Row/column index of component c of mode
// j is 2*(j + N) + c.
struct OperatorAssembly {
  double eps = 0.0;
  double mu = 0.0;
  int modes = 0; // N
  Eigen::MatrixXcd matrix; // square, size 2*(2N+1)
};

// Builds the truncated operator at amplitude eps and Floquet exponent mu.
// The multiplier tanh(alpha(mu+j)) sits on the block diagonal; products with
// the Stokes profile become Toeplitz blocks in the mode offset.  Both
// diagonal entries carry the full (c - u_S)(i mu + d/dx) advection (the
// co-moving derivative acts identically on both components).
OperatorAssembly assemble(const StokesSeries& ser, double eps, double mu, int N);

struct SpectrumSlice {
  double mu = 0.0;
  std::vector<std::complex<double>> lambdas; // sorted by (Im, Re)
};

// All eigenvalues of the assembled dense non-normal matrix (no eigenvectors).
// Throws std::runtime_error carrying mu and N if the QR iteration fails.
SpectrumSlice eigenvalues(const OperatorAssembly& op);

// One slice per grid point; slices are independent and are computed on
// `threads` workers with a deterministic merge by grid position.
std::vector<SpectrumSlice> scan(const StokesSeries& ser, double eps,
                                const std::vector<double>& mu_grid, int N,
                                int threads = 1);

struct IsolaScanConfig {
  int modes = 32;
  double threshold = 1e-12;      // instability threshold on Re(lambda)
  double bisect_width = 1e-13;   // endpoint bisection resolution in mu
  int interior_samples = 64;
  double im_window = 0.5;        // |Im lambda - Im lambda_ref| association filter
  int max_expansions = 6;        // seed-window growth attempts before giving up
};

// Direct numerical measurement of one isola.
struct IsolaMeasurement {
  bool present = false;
  int p = 0;
  double eps = 0.0;
  int modes = 0;
  double threshold = 0.0;

  double floquet_lo = 0.0, floquet_hi = 0.0; // threshold crossings of max Re
  // Crossing locations shifted to where Re(lambda) would vanish, removing the
  // O(threshold^2) bite the finite threshold takes out of the interval ends
  // (the growth profile is locally elliptic: Re = A sqrt(1 - (d/M)^2)).
  double floquet_lo_comp = 0.0, floquet_hi_comp = 0.0;

  double mu_star = 0.0;                  // argmax of the growth rate
  std::complex<double> lambda_star;      // most unstable eigenvalue
  double growth_max = 0.0;               // Re(lambda_star)

  std::vector<double> mus;                        // interior sample exponents
  std::vector<std::complex<double>> lambdas;      // matching unstable branch
};

// Measures the isola whose eigenvalues lie within cfg.im_window of
// lambda_ref, starting from a seed Floquet window that must overlap the
// unstable interval (asymptotics provide it).  Endpoints by bisection of the
// threshold crossing, peak by golden-section search.  If no instability is
// found after widening the seed, returns present = false (not an error: the
// isola genuinely vanishes at special aspect ratios).
IsolaMeasurement extract_isola(const StokesSeries& ser, double eps, int p,
                               double seed_lo, double seed_hi,
                               std::complex<double> lambda_ref,
                               const IsolaScanConfig& cfg = {});

} // namespace bwstab
