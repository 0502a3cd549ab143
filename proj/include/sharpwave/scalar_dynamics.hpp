#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sharpwave {

// Dense polynomial, coefficients in ascending degree. Small utility backing
// exact symbolic derivatives of the regularized drift.
struct Polynomial {
  std::vector<double> c;  // c[k] multiplies xi^k

  double eval(double xi) const {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * xi + *it;
    return v;
  }
  Polynomial derivative() const;
  Polynomial antiderivative() const;  // constant of integration 0
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
};

// f(xi) = a_1 xi + a_3 xi^3 + ... + a_{2m+1} xi^{2m+1}, a_{2m+1} > 0.
class OddPolynomial {
public:
  // odd_coeffs[k] is the coefficient of xi^{2k+1}; the last entry must be
  // strictly positive.
  explicit OddPolynomial(std::vector<double> odd_coeffs);

  // The paper's standing example f(xi) = xi^3 - xi.
  static OddPolynomial allen_cahn() { return OddPolynomial({-1.0, 1.0}); }

  int m() const { return m_; }
  double coeff(int odd_index) const { return odd_coeffs_.at(odd_index); }
  const std::vector<double>& odd_coeffs() const { return odd_coeffs_; }
  bool is_cubic() const { return m_ == 1; }
  bool is_linear() const { return m_ == 0; }

  double eval(double xi) const { return poly_.eval(xi); }
  double deriv(double xi) const { return dpoly_.eval(xi); }
  double second_deriv(double xi) const { return ddpoly_.eval(xi); }
  double antideriv(double xi) const { return ipoly_.eval(xi); }

  const Polynomial& as_polynomial() const { return poly_; }
  const Polynomial& derivative_polynomial() const { return dpoly_; }

private:
  std::vector<double> odd_coeffs_;
  int m_;
  Polynomial poly_, dpoly_, ddpoly_, ipoly_;
};

enum class FlowMethod { ClosedFormCubic, StiffAdaptive };

class FlowIntegrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Parameters of the scalar phase flow dX = -(1/eps) f(X) dt + lambda X dt.
struct FlowParams {
  double epsilon;
  double lambda;
  OddPolynomial poly;
  FlowMethod method = FlowMethod::ClosedFormCubic;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;

  FlowParams(double eps, double lam, OddPolynomial f,
             FlowMethod meth = FlowMethod::ClosedFormCubic);

  // Drift of the linearized part in the cubic closed form: dX = cX - bX^3.
  double c() const { return lambda - poly.coeff(0) / epsilon; }
  double b() const { return poly.is_cubic() ? poly.coeff(1) / epsilon : 0.0; }
};

// Psi_0(xi) = -(1/eps) f(xi) + lambda xi, the un-regularized drift.
double psi0(double xi, const FlowParams& params);
double psi0_prime(double xi, const FlowParams& params);

// Phase flow Phi_t(xi0). Cubic f has a closed form via the Bernoulli
// substitution y = X^{-2}; general odd polynomials use an adaptive implicit
// midpoint method with step doubling (A-stable, tolerances from params).
double flow(double xi0, double t, const FlowParams& params);

// Increment quotient Psi_tau(xi) = (Phi_tau(xi) - xi) / tau. For
// tau * (1/eps + lambda) < 1e-12 the quotient is returned as psi0.
double psi_tau(double xi, double tau, const FlowParams& params);

// Tamed drift Theta_delta(xi) = psi0(xi) / (1 + delta xi^{2m}).
struct RegularizedDrift {
  double delta;  // in [0, 1)
  FlowParams params;

  RegularizedDrift(double d, FlowParams p);
};

double theta_delta(double xi, const RegularizedDrift& drift);
// Exact symbolic first and second derivatives of the quotient.
double theta_prime(double xi, const RegularizedDrift& drift);
double theta_second(double xi, const RegularizedDrift& drift);

// Precompiled quotient-rule polynomials for grid loops.
class DriftDerivatives {
public:
  explicit DriftDerivatives(const RegularizedDrift& drift);
  double theta(double xi) const {
    return num_.eval(xi) / den_.eval(xi);
  }
  double prime(double xi) const {
    const double d = den_.eval(xi);
    return prime_num_.eval(xi) / (d * d);
  }
  double second(double xi) const {
    const double d = den_.eval(xi);
    return second_num_.eval(xi) / (d * d * d);
  }

private:
  Polynomial num_, den_, prime_num_, second_num_;
};

struct TamingReport {
  double L_estimate = 0.0;  // grid max of -f'F + F'f
  double argmax_xi = 0.0;
  std::vector<std::string> violations;
};

// Grid check of the structural taming conditions with F(xi) = xi^{2m}:
// -f'F + F'f bounded above (L estimated by grid max), and the monomial
// identity F'(xi) xi = 2m F(xi) that collapses the second condition to
// lambda delta (1 - 2m) xi^{2m} <= 0.
TamingReport check_taming_conditions(const OddPolynomial& poly,
                                     const std::vector<double>& delta_grid,
                                     const std::vector<double>& xi_grid);

}  // namespace sharpwave
