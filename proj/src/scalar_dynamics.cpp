#include "sharpwave/scalar_dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace sharpwave {

Polynomial Polynomial::derivative() const {
  Polynomial d;
  if (c.size() <= 1) return d;
  d.c.resize(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k)
    d.c[k - 1] = c[k] * static_cast<double>(k);
  return d;
}

Polynomial Polynomial::antiderivative() const {
  Polynomial ip;
  ip.c.resize(c.size() + 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k)
    ip.c[k + 1] = c[k] / static_cast<double>(k + 1);
  return ip;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial p;
  if (a.c.empty() || b.c.empty()) return p;
  p.c.assign(a.c.size() + b.c.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) p.c[i + j] += a.c[i] * b.c[j];
  return p;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  Polynomial p;
  p.c.resize(std::max(a.c.size(), b.c.size()), 0.0);
  for (std::size_t i = 0; i < a.c.size(); ++i) p.c[i] += a.c[i];
  for (std::size_t i = 0; i < b.c.size(); ++i) p.c[i] += b.c[i];
  return p;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
  Polynomial nb = b;
  for (double& x : nb.c) x = -x;
  return a + nb;
}

OddPolynomial::OddPolynomial(std::vector<double> odd_coeffs)
    : odd_coeffs_(std::move(odd_coeffs)) {
  if (odd_coeffs_.empty())
    throw std::invalid_argument("OddPolynomial: no coefficients");
  if (!(odd_coeffs_.back() > 0.0))
    throw std::invalid_argument("OddPolynomial: leading a_{2m+1} must be > 0");
  m_ = static_cast<int>(odd_coeffs_.size()) - 1;
  poly_.c.assign(2 * m_ + 2, 0.0);
  for (int k = 0; k <= m_; ++k) poly_.c[2 * k + 1] = odd_coeffs_[k];
  dpoly_ = poly_.derivative();
  ddpoly_ = dpoly_.derivative();
  ipoly_ = poly_.antiderivative();
}

FlowParams::FlowParams(double eps, double lam, OddPolynomial f,
                       FlowMethod meth)
    : epsilon(eps), lambda(lam), poly(std::move(f)), method(meth) {
  if (!(eps > 0.0)) throw std::invalid_argument("FlowParams: epsilon <= 0");
  if (!(lam > 0.0)) throw std::invalid_argument("FlowParams: lambda <= 0");
  if (method == FlowMethod::ClosedFormCubic && poly.m() > 1)
    throw std::invalid_argument("FlowParams: ClosedFormCubic requires m <= 1");
}

double psi0(double xi, const FlowParams& params) {
  return -params.poly.eval(xi) / params.epsilon + params.lambda * xi;
}

double psi0_prime(double xi, const FlowParams& params) {
  return -params.poly.deriv(xi) / params.epsilon + params.lambda;
}

namespace {

double flow_cubic(double xi0, double t, const FlowParams& p) {
  if (xi0 == 0.0 || t == 0.0) return xi0;
  const double c = p.c();
  const double b = p.b();
  const double s = (xi0 > 0.0) ? 1.0 : -1.0;
  if (b == 0.0) return xi0 * std::exp(c * t);
  if (c == 0.0) {
    const double y = 1.0 / (xi0 * xi0) + 2.0 * b * t;
    return s / std::sqrt(y);
  }
  const double ratio = b / c;
  const double y = std::exp(-2.0 * c * t) * (1.0 / (xi0 * xi0) - ratio) + ratio;
  // y stays positive along exact trajectories; exp overflow collapses to 0.
  return s / std::sqrt(y);
}

// Safeguarded Newton-bisection solve of the implicit midpoint equation
//   x - xi - h psi0((xi + x)/2) = 0.
// psi0 has negative superlinear growth, so the residual is -inf/+inf at the
// ends of a wide enough bracket.
double implicit_midpoint_step(double xi, double h, const FlowParams& p) {
  const auto residual = [&](double x) {
    return x - xi - h * psi0(0.5 * (xi + x), p);
  };
  double lo = xi + h * psi0(xi, p);
  double hi = lo;
  double width = std::max(1.0, std::abs(xi));
  for (int i = 0; i < 200 && residual(lo) > 0.0; ++i, width *= 2.0)
    lo -= width;
  for (int i = 0; i < 200 && residual(hi) < 0.0; ++i, width *= 2.0)
    hi += width;
  if (!(residual(lo) <= 0.0 && residual(hi) >= 0.0))
    throw FlowIntegrationError("implicit midpoint: bracketing failed");

  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 100; ++iter) {
    const double f = residual(x);
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double df = 1.0 - 0.5 * h * psi0_prime(0.5 * (xi + x), p);
    double xn = (df != 0.0) ? x - f / df : x;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= 1e-15 * (std::abs(xn) + 1.0)) return xn;
    x = xn;
  }
  return x;
}

double flow_adaptive(double xi0, double t, const FlowParams& p) {
  if (xi0 == 0.0 || t == 0.0) return xi0;
  double x = xi0;
  double remaining = t;
  double h = std::min(t, 0.1 / (1.0 / p.epsilon + p.lambda));
  const double h_floor = 1e-14 * std::max(t, 1.0);
  while (remaining > 0.0) {
    h = std::min(h, remaining);
    if (h < h_floor)
      throw FlowIntegrationError("flow: step-size underflow");
    const double full = implicit_midpoint_step(x, h, p);
    const double half = implicit_midpoint_step(x, 0.5 * h, p);
    const double half2 = implicit_midpoint_step(half, 0.5 * h, p);
    const double err = std::abs(half2 - full) / 3.0;
    const double tol = p.abs_tol + p.rel_tol * std::abs(half2);
    if (err <= tol) {
      x = half2 + (half2 - full) / 3.0;  // local extrapolation
      remaining -= h;
    }
    const double scale =
        (err > 0.0) ? 0.9 * std::cbrt(tol / err) : 5.0;
    h *= std::clamp(scale, 0.2, 5.0);
  }
  return x;
}

}  // namespace

double flow(double xi0, double t, const FlowParams& params) {
  if (t < 0.0) throw std::invalid_argument("flow: t < 0");
  return (params.method == FlowMethod::ClosedFormCubic)
             ? flow_cubic(xi0, t, params)
             : flow_adaptive(xi0, t, params);
}

double psi_tau(double xi, double tau, const FlowParams& params) {
  if (!(tau > 0.0)) throw std::invalid_argument("psi_tau: tau <= 0");
  if (tau * (1.0 / params.epsilon + params.lambda) < 1e-12)
    return psi0(xi, params);
  return (flow(xi, tau, params) - xi) / tau;
}

RegularizedDrift::RegularizedDrift(double d, FlowParams p)
    : delta(d), params(std::move(p)) {
  if (d < 0.0 || d >= 1.0)
    throw std::invalid_argument("RegularizedDrift: delta outside [0,1)");
}

double theta_delta(double xi, const RegularizedDrift& drift) {
  const int m = drift.params.poly.m();
  const double F = std::pow(xi, 2 * m);
  return psi0(xi, drift.params) / (1.0 + drift.delta * F);
}

namespace {
// Numerator N = -f/eps + lambda xi and denominator D = 1 + delta xi^{2m}.
struct Quotient {
  Polynomial N, D;
};

Quotient drift_quotient(const RegularizedDrift& drift) {
  Quotient q;
  const auto& f = drift.params.poly.as_polynomial();
  q.N.c.assign(f.c.size(), 0.0);
  for (std::size_t k = 0; k < f.c.size(); ++k)
    q.N.c[k] = -f.c[k] / drift.params.epsilon;
  if (q.N.c.size() < 2) q.N.c.resize(2, 0.0);
  q.N.c[1] += drift.params.lambda;
  q.D.c.assign(2 * drift.params.poly.m() + 1, 0.0);
  q.D.c[0] = 1.0;
  q.D.c.back() += drift.delta;  // m = 0 collapses to the constant 1 + delta
  return q;
}
}  // namespace

DriftDerivatives::DriftDerivatives(const RegularizedDrift& drift) {
  const Quotient q = drift_quotient(drift);
  num_ = q.N;
  den_ = q.D;
  const Polynomial Dp = q.D.derivative();
  prime_num_ = q.N.derivative() * q.D - q.N * Dp;  // theta' = u / D^2
  second_num_ =
      prime_num_.derivative() * q.D - Polynomial{{2.0}} * Dp * prime_num_;
}

double theta_prime(double xi, const RegularizedDrift& drift) {
  return DriftDerivatives(drift).prime(xi);
}

double theta_second(double xi, const RegularizedDrift& drift) {
  return DriftDerivatives(drift).second(xi);
}

TamingReport check_taming_conditions(const OddPolynomial& poly,
                                     const std::vector<double>& delta_grid,
                                     const std::vector<double>& xi_grid) {
  TamingReport rep;
  const int m = poly.m();
  bool first = true;
  for (double xi : xi_grid) {
    const double F = std::pow(xi, 2 * m);
    const double Fp = 2.0 * m * std::pow(xi, 2 * m - 1);
    const double e = -poly.deriv(xi) * F + Fp * poly.eval(xi);
    if (first || e > rep.L_estimate) {
      rep.L_estimate = e;
      rep.argmax_xi = xi;
      first = false;
    }
    // Monomial identity behind the second structural condition.
    if (std::abs(Fp * xi - 2.0 * m * F) >
        1e-12 * (1.0 + std::abs(F) * 2.0 * m))
      rep.violations.push_back("F'(xi) xi != 2m F(xi) at xi=" +
                               std::to_string(xi));
    for (double delta : delta_grid) {
      if (delta * (1.0 - 2.0 * m) * F > 1e-12)
        rep.violations.push_back(
            "delta (1-2m) F(xi) > 0 at xi=" + std::to_string(xi) +
            ", delta=" + std::to_string(delta));
    }
  }
  return rep;
}

}  // namespace sharpwave
