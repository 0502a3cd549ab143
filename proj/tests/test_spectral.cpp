#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sharpwave/rng.hpp"
#include "sharpwave/spectral.hpp"

using namespace sharpwave;

namespace {
const double kPi = 3.14159265358979323846;

SpectralField random_field(DomainPtr dom, std::uint64_t stream) {
  PathRng rng(11, stream);
  SpectralField f(dom);
  for (int j = 0; j < dom->total_modes(); ++j) f.coeffs[j] = rng.normal();
  return f;
}
}  // namespace

TEST_CASE("dirichlet 1d eigenvalues are (j pi)^2") {
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 12, 0.7);
  for (int j = 1; j <= 12; ++j) {
    CHECK(dom->eigenvalues()[j - 1] ==
          doctest::Approx(j * j * kPi * kPi).epsilon(1e-14));
    CHECK(dom->shifted_eigenvalues()[j - 1] ==
          doctest::Approx(j * j * kPi * kPi + 0.7).epsilon(1e-14));
  }
}

TEST_CASE("neumann 1d spectrum starts at zero") {
  const auto dom = DomainSpec::build(1, BoundaryCondition::Neumann, 6, 1.0);
  CHECK(dom->eigenvalues()[0] == 0.0);
  for (int j = 1; j < 6; ++j)
    CHECK(dom->eigenvalues()[j] ==
          doctest::Approx(j * j * kPi * kPi).epsilon(1e-14));
}

TEST_CASE("2d eigenvalues are tensor sums") {
  const auto dom = DomainSpec::build(2, BoundaryCondition::Dirichlet, 4, 1.0);
  CHECK(dom->total_modes() == 16);
  // Every flattened eigenvalue must equal (j^2 + k^2) pi^2 for some pair.
  double min_ev = 1e300, max_ev = 0.0;
  for (int i = 0; i < 16; ++i) {
    min_ev = std::min(min_ev, dom->eigenvalues()[i]);
    max_ev = std::max(max_ev, dom->eigenvalues()[i]);
  }
  CHECK(min_ev == doctest::Approx(2 * kPi * kPi).epsilon(1e-13));
  CHECK(max_ev == doctest::Approx(32 * kPi * kPi).epsilon(1e-13));
}

TEST_CASE("basis orthonormal under quadrature, both bcs") {
  for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
    const auto dom = DomainSpec::build(1, bc, 10, 1.0);
    const Eigen::MatrixXd gram = dom->quad_weight() *
                                 dom->basis_matrix().transpose() *
                                 dom->basis_matrix();
    const double dev =
        (gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff();
    CHECK(dev < 1e-12);
  }
}

TEST_CASE("build rejects bad arguments") {
  CHECK_THROWS(DomainSpec::build(3, BoundaryCondition::Dirichlet, 8, 1.0));
  CHECK_THROWS(DomainSpec::build(1, BoundaryCondition::Dirichlet, 2, 1.0));
  CHECK_THROWS(DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 0.0));
  CHECK_THROWS(DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 1.0, 1));
}

TEST_CASE("analysis inverts synthesis, 1d and 2d") {
  for (int dim : {1, 2}) {
    const auto dom = DomainSpec::build(dim, BoundaryCondition::Dirichlet,
                                       dim == 1 ? 16 : 5, 1.0);
    const SpectralField u = random_field(dom, dim);
    const SpectralField back = from_physical(to_physical(u), dom);
    CHECK((back.coeffs - u.coeffs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("grid dealiases the cubic exactly") {
  // Compare the cubic's projection computed on the working grid against a
  // much finer quadrature grid: both must give the same coefficients.
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 1.0);
  const auto fine = DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 1.0, 16);
  const SpectralField u = random_field(dom, 3);
  SpectralField u_fine(fine, u.coeffs);

  const Eigen::VectorXd cubed = to_physical(u).array().cube();
  const Eigen::VectorXd cubed_fine = to_physical(u_fine).array().cube();
  const SpectralField a = from_physical(cubed, dom);
  const SpectralField b = from_physical(cubed_fine, fine);
  CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("semigroup decays per mode and composes") {
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 2.0);
  const SpectralField u = random_field(dom, 4);
  const SpectralField w = apply_semigroup(u, 0.05);
  for (int j = 0; j < 8; ++j)
    CHECK(w.coeffs[j] ==
          doctest::Approx(u.coeffs[j] *
                          std::exp(-dom->shifted_eigenvalues()[j] * 0.05))
              .epsilon(1e-13));

  const SpectralField two = apply_semigroup(apply_semigroup(u, 0.02), 0.03);
  CHECK((two.coeffs - w.coeffs).cwiseAbs().maxCoeff() < 1e-13);
  CHECK_THROWS(apply_semigroup(u, -0.1));
}

TEST_CASE("fractional powers compose and invert") {
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 1.5);
  const SpectralField u = random_field(dom, 5);
  const SpectralField half_twice =
      apply_fractional_power(apply_fractional_power(u, 0.5), 0.5);
  const SpectralField one = apply_fractional_power(u, 1.0);
  CHECK((half_twice.coeffs - one.coeffs).cwiseAbs().maxCoeff() < 1e-10);
  const SpectralField round_trip =
      apply_fractional_power(apply_fractional_power(u, -0.7), 0.7);
  CHECK((round_trip.coeffs - u.coeffs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sobolev norm matches the weighted sum") {
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 1.0);
  const SpectralField u = random_field(dom, 6);
  double sum = 0.0;
  for (int j = 0; j < 8; ++j)
    sum += std::pow(dom->shifted_eigenvalues()[j], 0.75) * u.coeffs[j] *
           u.coeffs[j];
  CHECK(sobolev_norm(u, 0.75) == doctest::Approx(std::sqrt(sum)).epsilon(1e-13));
  CHECK(sobolev_norm(u, 0.0) == doctest::Approx(u.coeffs.norm()).epsilon(1e-13));
}

TEST_CASE("sup norm is the grid max") {
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 1.0);
  const SpectralField u = random_field(dom, 7);
  CHECK(sup_norm(u) ==
        doctest::Approx(to_physical(u).cwiseAbs().maxCoeff()).epsilon(1e-14));
}

TEST_CASE("transforms reject mismatched sizes") {
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 8, 1.0);
  Eigen::VectorXd bad(dom->total_grid() + 1);
  bad.setZero();
  CHECK_THROWS(from_physical(bad, dom));
}
