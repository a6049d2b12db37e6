#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here stays deliberately naive (dense scans, finite differences, direct
// quadrature) so it cannot share a failure mode with the library code.

#include "degbill/bvp.hpp"
#include "degbill/problems.hpp"

#include <random>

namespace degbill::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240811ull);
  return gen;
}

inline double uniform(double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng());
}

inline Vec random_unit(int m) {
  std::normal_distribution<double> n(0, 1);
  Vec v(m);
  for (int i = 0; i < m; ++i) v[i] = n(rng());
  return v.normalized();
}

/// Brute-force distance to the scatterer: dense chart sampling plus local
/// golden-section refinement. Independent of Component::project.
inline double brute_force_dist(const Problem& pb, const Vec& q,
                               double chart_range = 6.0, int samples = 4000) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& comp : pb.comps) {
    if (comp.intrinsic_dim() == 0) {
      best = std::min(best, (q - comp.base).norm());
      continue;
    }
    double bx = 0;
    const double lo = comp.kind == ChartKind::Circle ? -M_PI : -chart_range;
    const double hi = comp.kind == ChartKind::Circle ? M_PI : chart_range;
    for (int i = 0; i <= samples; ++i) {
      Vec x(1);
      x[0] = lo + (hi - lo) * i / samples;
      const double d = (q - comp.chart(x)).norm();
      if (d < best) {
        best = d;
        bx = x[0];
      }
    }
    // golden-section polish
    double a = bx - (hi - lo) / samples, b = bx + (hi - lo) / samples;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d2 = a + gr * (b - a);
    auto f = [&](double s) {
      Vec x(1);
      x[0] = s;
      return (q - comp.chart(x)).norm();
    };
    double fc = f(c), fd = f(d2);
    for (int it = 0; it < 60; ++it) {
      if (fc < fd) {
        b = d2;
        d2 = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d2;
        fc = fd;
        d2 = a + gr * (b - a);
        fd = f(d2);
      }
    }
    best = std::min(best, std::min(fc, fd));
  }
  return best;
}

/// Jacobi-length quadrature along a trajectory: composite Gauss-Legendre of
/// g_E(q, qdot) using only q(t) and the energy relation (no p dq sum).
inline double jacobi_length(const Problem& pb, const Trajectory& tr, double E,
                            double mu, int panels = 400) {
  static const double gl_x[5] = {-0.906179845938664, -0.538469310105683, 0.0,
                                 0.538469310105683, 0.906179845938664};
  static const double gl_w[5] = {0.236926885056189, 0.478628670499366,
                                 0.568888888888889, 0.478628670499366,
                                 0.236926885056189};
  double total = 0;
  const double h = (tr.t1 - tr.t0) / panels;
  for (int k = 0; k < panels; ++k) {
    const double tm = tr.t0 + (k + 0.5) * h;
    for (int g = 0; g < 5; ++g) {
      const double t = tm + 0.5 * h * gl_x[g];
      const Vec q = tr.q(t);
      const Vec v = tr.p(t) - pb.gyro(q); // qdot
      total += 0.5 * h * gl_w[g] * jacobi_norm(pb, q, v, E, mu);
    }
  }
  return total;
}

/// Central finite difference of a scalar function of one coordinate.
template <class F>
double fd_derivative(F&& f, double h = 1e-6) {
  return (f(h) - f(-h)) / (2 * h);
}

template <class F>
double fd_second(F&& f, double h = 1e-4) {
  return (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
}

} // namespace degbill::testing
