#include "sharpwave/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace sharpwave {

namespace {
using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

void apply_semigroup_inplace(Eigen::VectorXd& coeffs, const DomainSpec& dom,
                             double t) {
  coeffs.array() *= (-dom.shifted_eigenvalues() * t).exp();
}

SpectralField apply_semigroup(const SpectralField& field, double t) {
  if (t < 0.0) throw std::invalid_argument("apply_semigroup: t < 0");
  SpectralField out = field;
  apply_semigroup_inplace(out.coeffs, *field.domain, t);
  return out;
}

SpectralField apply_fractional_power(const SpectralField& field,
                                     double kappa) {
  if (!std::isfinite(kappa))
    throw std::invalid_argument("apply_fractional_power: non-finite kappa");
  SpectralField out = field;
  out.coeffs.array() *= field.domain->shifted_eigenvalues().pow(kappa);
  return out;
}

double sobolev_norm(const SpectralField& field, double kappa) {
  const auto& mu = field.domain->shifted_eigenvalues();
  return std::sqrt((mu.pow(kappa) * field.coeffs.array().square()).sum());
}

void synthesize(const DomainSpec& dom, const Eigen::VectorXd& coeffs,
                Eigen::VectorXd& grid) {
  const auto& B = dom.basis_matrix();
  if (dom.dim() == 1) {
    grid.noalias() = B * coeffs;
  } else {
    const int J = dom.modes_per_dim();
    const int G = dom.grid_per_dim();
    Eigen::Map<const RowMat> C(coeffs.data(), J, J);
    Eigen::Map<RowMat> P(grid.data(), G, G);
    P.noalias() = B * C * B.transpose();
  }
}

void analyze(const DomainSpec& dom, const Eigen::VectorXd& grid,
             Eigen::VectorXd& coeffs) {
  const auto& B = dom.basis_matrix();
  const double w = dom.quad_weight();
  if (dom.dim() == 1) {
    coeffs.noalias() = w * (B.transpose() * grid);
  } else {
    const int J = dom.modes_per_dim();
    const int G = dom.grid_per_dim();
    Eigen::Map<const RowMat> P(grid.data(), G, G);
    Eigen::Map<RowMat> C(coeffs.data(), J, J);
    C.noalias() = (w * w) * (B.transpose() * P * B);
  }
}

Eigen::VectorXd to_physical(const SpectralField& field) {
  Eigen::VectorXd grid(field.domain->total_grid());
  synthesize(*field.domain, field.coeffs, grid);
  return grid;
}

SpectralField from_physical(const Eigen::VectorXd& grid, DomainPtr domain) {
  if (grid.size() != domain->total_grid())
    throw std::invalid_argument("from_physical: grid/domain size mismatch");
  SpectralField out(std::move(domain));
  analyze(*out.domain, grid, out.coeffs);
  return out;
}

double sup_norm(const SpectralField& field) {
  return to_physical(field).cwiseAbs().maxCoeff();
}

}  // namespace sharpwave
