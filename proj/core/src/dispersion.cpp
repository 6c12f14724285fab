#include "bwstab/dispersion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bwstab {

ModelSetup ModelSetup::make(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("ModelSetup: alpha must be positive and finite");
  }
  ModelSetup s;
  s.alpha = alpha;
  s.c0 = std::sqrt(std::tanh(alpha) / alpha);
  return s;
}

double omega_alpha(const ModelSetup& s, double k) {
  const double t = s.alpha * k;
  // t*tanh(t) >= 0 for all real t, so the sqrt is safe; sgn(k) restores oddness.
  const double w = std::sqrt(t * std::tanh(t));
  return k < 0 ? -w : w;
}

double omega_alpha_prime(const ModelSetup& s, double k) {
  const double q = std::abs(k); // derivative is even in k
  const double t = s.alpha * q;
  if (t < 1e-4) {
    // omega_alpha(k) = t(1 - t^2/6 + 19 t^4/360 + ...) near 0, hence
    // omega'(k) = alpha (1 - t^2/2 + 19 t^4/72 + ...); the t^4 term is below
    // roundoff at this threshold but costs nothing.
    return s.alpha * (1.0 - 0.5 * t * t + (19.0 / 72.0) * t * t * t * t);
  }
  const double first = std::sqrt(s.alpha * std::tanh(t) / q);
  // t/sinh(t) underflows harmlessly for large t; skip it beyond exp range.
  double second = 0.0;
  if (t < 350.0) {
    second = s.alpha * std::sqrt(t / std::sinh(t)) *
             std::pow(1.0 / std::cosh(t), 1.5);
  }
  return 0.5 * (first + second);
}

double big_omega(const ModelSetup& s, int sigma, double k) {
  if (sigma != 1 && sigma != -1) {
    throw std::invalid_argument("big_omega: sigma must be +1 or -1");
  }
  return -s.alpha * s.c0 * k + sigma * omega_alpha(s, k);
}

double group_velocity(const ModelSetup& s, int sigma, double k) {
  if (sigma != 1 && sigma != -1) {
    throw std::invalid_argument("group_velocity: sigma must be +1 or -1");
  }
  return -s.alpha * s.c0 + sigma * omega_alpha_prime(s, k);
}

namespace {

// Collision condition for p >= 2 written as a scalar root problem:
//   F(k) = Omega_1(k) - Omega_{-1}(k+p) = alpha c0 p + omega(k) + omega(k+p).
// F is strictly increasing (F' = omega'(k) + omega'(k+p) > 0), F(-p) > 0,
// and F -> -infinity as k -> -infinity, so the root is unique and < -p.
double collision_f(const ModelSetup& s, int p, double k) {
  return s.alpha * s.c0 * p + omega_alpha(s, k) + omega_alpha(s, k + p);
}

double collision_fprime(const ModelSetup& s, int p, double k) {
  return omega_alpha_prime(s, k) + omega_alpha_prime(s, k + p);
}

CollisionPoint solve_collision_positive(const ModelSetup& s, int p) {
  // Bracket [-p - B, -p] with B doubled until the sign change appears.
  const double hi0 = -static_cast<double>(p);
  double width = 1.0;
  while (collision_f(s, p, hi0 - width) >= 0.0) {
    width *= 2.0;
    if (width > 1e9) {
      throw std::runtime_error("solve_collision: bracket expansion failed");
    }
  }
  double lo = hi0 - width;
  double hi = hi0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (collision_f(s, p, mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // Newton polish; safe because F is monotone and we start inside the bracket.
  double k = 0.5 * (lo + hi);
  const double scale = 1.0 + std::abs(big_omega(s, 1, k));
  for (int it = 0; it < 60; ++it) {
    const double f = collision_f(s, p, k);
    if (std::abs(f) < 1e-14 * scale) break;
    k -= f / collision_fprime(s, p, k);
  }

  CollisionPoint cp;
  cp.p = p;
  cp.k = k;

  // Nearest integer; at an exact half-integer tie round toward -infinity and
  // flag it (mu0 = +1/2 and -1/2 label the same Floquet class).
  const double fl = std::floor(k);
  const double frac = k - fl;
  if (frac == 0.5) {
    cp.n = static_cast<int>(fl);
    cp.half_integer_tie = true;
  } else {
    cp.n = static_cast<int>(std::lround(k));
  }
  cp.m = cp.n + p;
  cp.mu0 = k - cp.n;
  cp.lambda0 = std::complex<double>(0.0, -big_omega(s, 1, k));
  cp.residual = std::abs(big_omega(s, 1, k) - big_omega(s, -1, k + p));
  return cp;
}

} // namespace

CollisionPoint solve_collision(const ModelSetup& s, int p) {
  if (p == 0 || p == 1 || p == -1) {
    throw std::invalid_argument("solve_collision: no nonzero collision for p = " +
                                std::to_string(p));
  }
  if (p >= 2) return solve_collision_positive(s, p);

  // Oddness of Omega_sigma gives k(-p) = -k(p) and the conjugate eigenvalue.
  const CollisionPoint q = solve_collision_positive(s, -p);
  CollisionPoint cp;
  cp.p = p;
  cp.k = -q.k;
  cp.n = -q.n;
  cp.m = cp.n + p;
  cp.mu0 = cp.k - cp.n;
  cp.half_integer_tie = q.half_integer_tie;
  cp.lambda0 = std::complex<double>(0.0, -big_omega(s, 1, cp.k));
  cp.residual = std::abs(big_omega(s, 1, cp.k) - big_omega(s, -1, cp.k + p));
  return cp;
}

std::vector<CollisionPoint> collision_ladder(const ModelSetup& s, int p_max) {
  if (p_max < 2) {
    throw std::invalid_argument("collision_ladder: p_max must be >= 2");
  }
  std::vector<CollisionPoint> out;
  out.reserve(2 * (p_max - 1));
  for (int p = -p_max; p <= -2; ++p) out.push_back(solve_collision(s, p));
  for (int p = 2; p <= p_max; ++p) out.push_back(solve_collision(s, p));
  return out;
}

} // namespace bwstab
