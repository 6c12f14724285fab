#pragma once

namespace bwstab {

// Nondimensional setup of the Boussinesq-Whitham system
//
//   eta_t = -(h0 u + eta u)_x,   u_t = -(g K_alpha[eta] + u^2/2)_x,
//
// after scaling out gravity g and depth h0.  The single remaining knob is the
// aspect ratio alpha = kappa*h0 (carrier wavenumber times depth).  K_alpha is
// the Fourier multiplier with symbol tanh(alpha*k)/(alpha*k), equal to 1 at
// k=0.  Right-traveling 2*pi-periodic Stokes waves bifurcate at the linear
// phase speed c0 = +sqrt(tanh(alpha)/alpha) in (0,1); only the right-moving
// branch (c0 > 0) is treated here, the left-moving one follows by symmetry.
struct ModelSetup {
  double alpha = 0.0;
  double c0 = 0.0;

  // Validates alpha > 0 (finite) and computes c0.
  static ModelSetup make(double alpha);
};

} // namespace bwstab
