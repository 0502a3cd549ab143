// Test-side oracles, deliberately independent of the library's fast paths:
// brute-force ODE integration and dense quadrature.
#pragma once

#include <cmath>
#include <functional>

#include "sharpwave/scalar_dynamics.hpp"

namespace oracles {

// Fixed-step RK4 for the scalar phase flow dX = -(1/eps) f(X) + lambda X.
inline double rk4_flow(double xi0, double t, const sharpwave::FlowParams& fp,
                       double h = 1e-6) {
  const auto rhs = [&](double x) {
    return -fp.poly.eval(x) / fp.epsilon + fp.lambda * x;
  };
  const long long n = static_cast<long long>(std::ceil(t / h));
  const double step = t / n;
  double x = xi0;
  for (long long k = 0; k < n; ++k) {
    const double k1 = rhs(x);
    const double k2 = rhs(x + 0.5 * step * k1);
    const double k3 = rhs(x + 0.5 * step * k2);
    const double k4 = rhs(x + step * k3);
    x += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

// Composite Simpson quadrature of f over [a, b].
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracles
