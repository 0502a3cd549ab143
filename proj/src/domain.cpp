#include "sharpwave/domain.hpp"

#include <cmath>
#include <stdexcept>

namespace sharpwave {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kSqrt2 = 1.41421356237309504880168872420969808;
}  // namespace

std::shared_ptr<const DomainSpec> DomainSpec::build(int dim,
                                                    BoundaryCondition bc,
                                                    int modes_per_dim,
                                                    double lambda,
                                                    int phys_grid_factor) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("DomainSpec: dim must be 1 or 2");
  if (modes_per_dim < 4)
    throw std::invalid_argument("DomainSpec: modes_per_dim must be >= 4");
  if (!(lambda > 0.0))
    throw std::invalid_argument("DomainSpec: lambda must be positive");
  if (phys_grid_factor < 2)
    throw std::invalid_argument("DomainSpec: phys_grid_factor must be >= 2");

  auto spec = std::shared_ptr<DomainSpec>(new DomainSpec());
  spec->dim_ = dim;
  spec->bc_ = bc;
  spec->modes_per_dim_ = modes_per_dim;
  spec->lambda_ = lambda;
  spec->phys_grid_factor_ = phys_grid_factor;
  const int J = modes_per_dim;
  const int G = phys_grid_factor * J;
  spec->grid_per_dim_ = G;
  spec->total_modes_ = (dim == 1) ? J : J * J;
  spec->total_grid_ = (dim == 1) ? G : G * G;

  // 1D eigenvalues and basis sampled on the grid with discrete orthogonality:
  // Dirichlet uses the interior points of a (G+1)-cell partition (DST-I grid),
  // Neumann uses midpoints (DCT-II grid). Both give
  //   sum_g f_j(x_g) f_k(x_g) * quad_weight = delta_jk.
  Eigen::ArrayXd lam1(J);
  spec->basis_.resize(G, J);
  spec->grid_points_.resize(G);
  if (bc == BoundaryCondition::Dirichlet) {
    spec->quad_weight_ = 1.0 / (G + 1);
    for (int g = 0; g < G; ++g)
      spec->grid_points_[g] = static_cast<double>(g + 1) / (G + 1);
    for (int k = 0; k < J; ++k) {
      const int j = k + 1;
      lam1[k] = (j * kPi) * (j * kPi);
      for (int g = 0; g < G; ++g)
        spec->basis_(g, k) = kSqrt2 * std::sin(j * kPi * spec->grid_points_[g]);
    }
  } else {
    spec->quad_weight_ = 1.0 / G;
    for (int g = 0; g < G; ++g)
      spec->grid_points_[g] = (g + 0.5) / G;
    for (int k = 0; k < J; ++k) {
      const int j = k;  // includes the constant null mode j = 0
      lam1[k] = (j * kPi) * (j * kPi);
      for (int g = 0; g < G; ++g)
        spec->basis_(g, k) =
            (j == 0) ? 1.0
                     : kSqrt2 * std::cos(j * kPi * spec->grid_points_[g]);
    }
  }

  if (dim == 1) {
    spec->eigenvalues_ = lam1;
  } else {
    spec->eigenvalues_.resize(J * J);
    for (int kx = 0; kx < J; ++kx)
      for (int ky = 0; ky < J; ++ky)
        spec->eigenvalues_[kx * J + ky] = lam1[kx] + lam1[ky];
  }
  spec->shifted_eigenvalues_ = spec->eigenvalues_ + lambda;
  return spec;
}

bool DomainSpec::same_as(const DomainSpec& other) const {
  if (this == &other) return true;
  return dim_ == other.dim_ && bc_ == other.bc_ &&
         modes_per_dim_ == other.modes_per_dim_ && lambda_ == other.lambda_ &&
         phys_grid_factor_ == other.phys_grid_factor_;
}

bool SpectralField::compatible_with(const SpectralField& other) const {
  return domain && other.domain && domain->same_as(*other.domain);
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  if (!compatible_with(other))
    throw std::invalid_argument("SpectralField: domain mismatch");
  coeffs += other.coeffs;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  if (!compatible_with(other))
    throw std::invalid_argument("SpectralField: domain mismatch");
  coeffs -= other.coeffs;
  return *this;
}

}  // namespace sharpwave
