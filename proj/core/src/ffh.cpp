#include "bwstab/ffh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#ifdef BWSTAB_HAVE_LAPACKE
// Make the LAPACKE prototypes take std::complex directly (the header's
// default is the C99 _Complex types, which do not convert).
#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <complex>
#include <lapacke.h>
#endif

namespace bwstab {

OperatorAssembly assemble(const StokesSeries& ser, double eps, double mu, int N) {
  if (N < 8) {
    throw std::invalid_argument("assemble: need N >= 8 to contain the harmonics");
  }
  const ModelSetup& s = ser.setup;
  const double alpha = s.alpha;
  constexpr int H = StokesSeries::max_harmonic;

  // Exponential coefficients of the profile at this amplitude, offsets -4..4
  // (symmetric in the offset since the profiles are even).
  double ehat[H + 1], uhat[H + 1];
  for (int l = 0; l <= H; ++l) {
    ehat[l] = ser.eta_hat(eps, l);
    uhat[l] = ser.u_hat(eps, l);
  }
  const double c = ser.speed(eps);

  OperatorAssembly op;
  op.eps = eps;
  op.mu = mu;
  op.modes = N;
  const int dim = 2 * (2 * N + 1);
  op.matrix = Eigen::MatrixXcd::Zero(dim, dim);

  const std::complex<double> I(0.0, 1.0);
  for (int j = -N; j <= N; ++j) {
    const int r = 2 * (j + N);
    for (int jp = std::max(-N, j - H); jp <= std::min(N, j + H); ++jp) {
      const int cix = 2 * (jp + N);
      const int l = j - jp;                 // harmonic offset of the product
      const int a = std::abs(l);
      const double eh = ehat[a];
      const double uh = uhat[a];
      // Coefficient of e^{ilx} in (c - u_S) and in (1 + eta_S).
      const double cmu = (l == 0 ? c - uh : -uh);
      const double ope = (l == 0 ? 1.0 + eh : eh);
      const std::complex<double> dcol = I * (mu + jp); // (i mu + d/dx) on column mode
      // (1,1) and (2,2): -u_S' + (c - u_S)(i mu + d/dx)
      const std::complex<double> t11 = alpha * (-I * double(l) * uh + cmu * dcol);
      // (1,2): -eta_S' - (1 + eta_S)(i mu + d/dx)
      const std::complex<double> t12 = alpha * (-I * double(l) * eh - ope * dcol);
      op.matrix(r, cix) += t11;
      op.matrix(r, cix + 1) += t12;
      op.matrix(r + 1, cix + 1) += t11;
    }
    // (2,1): the multiplier -i tanh(alpha (mu + D)), diagonal in mode space.
    op.matrix(r + 1, r) += -I * std::tanh(alpha * (mu + j));
  }
  return op;
}

namespace {

#ifdef BWSTAB_HAVE_LAPACKE
std::once_flag blas_threads_flag;

void pin_blas_threads() {
  // The scan-level parallelism owns the cores; nested BLAS threading would
  // only add nondeterministic reduction orders on these small matrices.
  std::call_once(blas_threads_flag, [] {
    setenv("OPENBLAS_NUM_THREADS", "1", /*overwrite=*/0);
    setenv("OMP_NUM_THREADS", "1", /*overwrite=*/0);
  });
}
#endif

std::vector<std::complex<double>> dense_eigs(const Eigen::MatrixXcd& m,
                                             double mu, int N) {
  const int n = static_cast<int>(m.rows());
  std::vector<std::complex<double>> ev(n);
#ifdef BWSTAB_HAVE_LAPACKE
  pin_blas_threads();
  Eigen::MatrixXcd a = m; // zgeev overwrites its input
  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, ev.data(), nullptr, 1,
      nullptr, 1);
  if (info != 0) {
    throw std::runtime_error("eigenvalues: zgeev failed (info=" +
                             std::to_string(info) + ", mu=" + std::to_string(mu) +
                             ", N=" + std::to_string(N) + ")");
  }
#else
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalues: solver failed (mu=" +
                             std::to_string(mu) + ", N=" + std::to_string(N) + ")");
  }
  for (int i = 0; i < n; ++i) ev[i] = es.eigenvalues()(i);
#endif
  return ev;
}

} // namespace

SpectrumSlice eigenvalues(const OperatorAssembly& op) {
  SpectrumSlice slice;
  slice.mu = op.mu;
  slice.lambdas = dense_eigs(op.matrix, op.mu, op.modes);
  std::sort(slice.lambdas.begin(), slice.lambdas.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              if (a.imag() != b.imag()) return a.imag() < b.imag();
              return a.real() < b.real();
            });
  return slice;
}

std::vector<SpectrumSlice> scan(const StokesSeries& ser, double eps,
                                const std::vector<double>& mu_grid, int N,
                                int threads) {
  std::vector<SpectrumSlice> out(mu_grid.size());
  const int nw = std::max(1, threads);
  if (nw == 1 || mu_grid.size() <= 1) {
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
      out[i] = eigenvalues(assemble(ser, eps, mu_grid[i], N));
    }
    return out;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= mu_grid.size()) return;
        try {
          out[i] = eigenvalues(assemble(ser, eps, mu_grid[i], N));
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

namespace {

struct GrowthSample {
  double growth = -1.0; // max Re over the associated eigenvalues (-1: none seen)
  std::complex<double> lambda{0.0, 0.0};
};

// Growth rate of the target isola at one Floquet exponent: the largest real
// part among eigenvalues whose imaginary part lies near the reference.
GrowthSample isola_growth(const StokesSeries& ser, double eps, double mu, int N,
                          std::complex<double> lambda_ref, double im_window) {
  GrowthSample g;
  const SpectrumSlice slice = eigenvalues(assemble(ser, eps, mu, N));
  for (const auto& lam : slice.lambdas) {
    if (std::abs(lam.imag() - lambda_ref.imag()) < im_window &&
        lam.real() > g.growth) {
      g.growth = lam.real();
      g.lambda = lam;
    }
  }
  return g;
}

} // namespace

IsolaMeasurement extract_isola(const StokesSeries& ser, double eps, int p,
                               double seed_lo, double seed_hi,
                               std::complex<double> lambda_ref,
                               const IsolaScanConfig& cfg) {
  IsolaMeasurement res;
  res.p = p;
  res.eps = eps;
  res.modes = cfg.modes;
  res.threshold = cfg.threshold;

  const auto g = [&](double mu) {
    return isola_growth(ser, eps, mu, cfg.modes, lambda_ref, cfg.im_window);
  };

  // Locate an unstable exponent, widening the seed window if necessary.
  double lo = std::min(seed_lo, seed_hi);
  double hi = std::max(seed_lo, seed_hi);
  if (hi - lo <= 0.0) {
    const double pad = std::max(1e-12, 1e-3 * std::max(std::abs(lo), 1.0));
    lo -= pad;
    hi += pad;
  }
  double best_mu = 0.5 * (lo + hi);
  GrowthSample best;
  for (int attempt = 0; attempt <= cfg.max_expansions; ++attempt) {
    constexpr int probes = 17;
    for (int i = 0; i < probes; ++i) {
      const double mu = lo + (hi - lo) * (i + 0.5) / probes;
      const GrowthSample v = g(mu);
      if (v.growth > best.growth) {
        best = v;
        best_mu = mu;
      }
    }
    if (best.growth > cfg.threshold) break;
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    lo = c - 3.0 * h;
    hi = c + 3.0 * h;
  }
  res.mu_star = best_mu;
  res.growth_max = best.growth;
  res.lambda_star = best.lambda;
  if (!(best.growth > cfg.threshold)) {
    res.present = false;
    return res;
  }
  res.present = true;

  // Threshold crossings on both sides of the unstable point.
  const double width0 = hi - lo;
  const auto cross = [&](int dir) {
    double inner = best_mu;
    double step = width0 / 8.0;
    double outer = inner + dir * step;
    for (int it = 0; it < 200 && g(outer).growth > cfg.threshold; ++it) {
      inner = outer;
      step *= 1.5;
      outer += dir * step;
    }
    // Bisect the predicate growth > threshold down to the requested width.
    while (std::abs(outer - inner) > cfg.bisect_width) {
      const double mid = 0.5 * (outer + inner);
      if (g(mid).growth > cfg.threshold) {
        inner = mid;
      } else {
        outer = mid;
      }
    }
    return 0.5 * (outer + inner);
  };
  res.floquet_lo = cross(-1);
  res.floquet_hi = cross(+1);

  // Golden-section maximization of the growth rate between the endpoints.
  {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = res.floquet_lo, b = res.floquet_hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    GrowthSample f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 120 && (b - a) > cfg.bisect_width; ++it) {
      if (f1.growth < f2.growth) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = g(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = g(x1);
      }
    }
    const GrowthSample peak = f1.growth > f2.growth ? f1 : f2;
    if (peak.growth > res.growth_max) {
      res.mu_star = f1.growth > f2.growth ? x1 : x2;
      res.growth_max = peak.growth;
      res.lambda_star = peak.lambda;
    }
  }

  // Interior trace of the unstable branch.
  res.mus.reserve(cfg.interior_samples);
  res.lambdas.reserve(cfg.interior_samples);
  for (int i = 0; i < cfg.interior_samples; ++i) {
    const double mu = res.floquet_lo +
                      (res.floquet_hi - res.floquet_lo) * (i + 0.5) /
                          cfg.interior_samples;
    const GrowthSample v = g(mu);
    res.mus.push_back(mu);
    res.lambdas.push_back(v.lambda);
  }

  // Compensate the threshold bite: crossings sit where A sqrt(1-(d/M)^2)
  // equals the threshold, a factor sqrt(1 - (theta/A)^2) inside the true
  // half-width M.
  const double A = res.growth_max;
  const double center = 0.5 * (res.floquet_lo + res.floquet_hi);
  const double M = 0.5 * (res.floquet_hi - res.floquet_lo);
  double f = 1.0;
  if (A > cfg.threshold) {
    const double q = cfg.threshold / A;
    f = 1.0 / std::sqrt(1.0 - q * q);
  }
  res.floquet_lo_comp = center - M * f;
  res.floquet_hi_comp = center + M * f;
  return res;
}

} // namespace bwstab
