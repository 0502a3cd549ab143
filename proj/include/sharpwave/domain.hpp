#pragma once

#include <Eigen/Dense>
#include <memory>

namespace sharpwave {

enum class BoundaryCondition { Dirichlet, Neumann };

// Eigenbasis of the shifted Laplacian -A + lambda on the unit interval or
// unit square. Immutable after construction; share freely across threads.
//
// Dirichlet 1D: lambda_j = (j pi)^2, f_j(x) = sqrt(2) sin(j pi x), j >= 1.
// Neumann  1D:  lambda_j = (j pi)^2, f_j(x) = sqrt(2) cos(j pi x) for j >= 1,
//               f_0 = 1.
// 2D modes are tensor products with summed eigenvalues.
class DomainSpec {
public:
  static std::shared_ptr<const DomainSpec> build(int dim, BoundaryCondition bc,
                                                 int modes_per_dim,
                                                 double lambda,
                                                 int phys_grid_factor = 2);

  int dim() const { return dim_; }
  BoundaryCondition bc() const { return bc_; }
  int modes_per_dim() const { return modes_per_dim_; }
  int total_modes() const { return total_modes_; }
  double lambda() const { return lambda_; }
  int phys_grid_factor() const { return phys_grid_factor_; }
  int grid_per_dim() const { return grid_per_dim_; }
  int total_grid() const { return total_grid_; }

  // Laplacian eigenvalues lambda_j (without the shift), flattened mode order.
  const Eigen::ArrayXd& eigenvalues() const { return eigenvalues_; }
  // lambda_j + lambda, the spectrum of -A + lambda.
  const Eigen::ArrayXd& shifted_eigenvalues() const {
    return shifted_eigenvalues_;
  }

  // 1D synthesis matrix, grid_per_dim x modes_per_dim: B(g, k) = f_k(x_g).
  const Eigen::MatrixXd& basis_matrix() const { return basis_; }
  // Quadrature weight of one grid cell (uniform).
  double quad_weight() const { return quad_weight_; }
  // Grid coordinates along one dimension.
  const Eigen::VectorXd& grid_points() const { return grid_points_; }

  bool same_as(const DomainSpec& other) const;

private:
  DomainSpec() = default;

  int dim_ = 1;
  BoundaryCondition bc_ = BoundaryCondition::Dirichlet;
  int modes_per_dim_ = 0;
  int total_modes_ = 0;
  double lambda_ = 0.0;
  int phys_grid_factor_ = 2;
  int grid_per_dim_ = 0;
  int total_grid_ = 0;
  Eigen::ArrayXd eigenvalues_;
  Eigen::ArrayXd shifted_eigenvalues_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd grid_points_;
  double quad_weight_ = 0.0;
};

using DomainPtr = std::shared_ptr<const DomainSpec>;

// Truncated eigenbasis coefficient vector representing u in H.
struct SpectralField {
  DomainPtr domain;
  Eigen::VectorXd coeffs;

  SpectralField() = default;
  explicit SpectralField(DomainPtr d)
      : domain(std::move(d)),
        coeffs(Eigen::VectorXd::Zero(domain->total_modes())) {}
  SpectralField(DomainPtr d, Eigen::VectorXd c)
      : domain(std::move(d)), coeffs(std::move(c)) {}

  bool compatible_with(const SpectralField& other) const;
  bool all_finite() const { return coeffs.allFinite(); }

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double a) {
    coeffs *= a;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) {
    return a += b;
  }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) {
    return a -= b;
  }
  friend SpectralField operator*(double a, SpectralField f) { return f *= a; }
};

}  // namespace sharpwave
