#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fluxmet/dynamics.hpp"
#include "fluxmet/errors.hpp"
#include "fluxmet/qmat.hpp"
#include "generators.hpp"

using namespace fluxmet;
using namespace fluxmet::qmat;
using namespace std::complex_literals;
using fluxmet::testing::Engine;

namespace {

// Plain Taylor series summed until the terms vanish; only for small norms.
CMatrix taylor_oracle(const CMatrix& a) {
  CMatrix result = CMatrix::identity(a.dim());
  CMatrix term = CMatrix::identity(a.dim());
  for (int k = 1; k < 80; ++k) {
    term = term * a;
    term *= 1.0 / k;
    result += term;
  }
  return result;
}

CMatrix reconstruct(const EigenDecomposition& e) {
  CMatrix lambda = CMatrix::diagonal(e.values);
  return e.vectors * lambda * e.vectors.adjoint();
}

}  // namespace

TEST_CASE("kron") {
  CHECK(max_abs_diff(kron(pauli::identity(), pauli::identity()), CMatrix::identity(4)) == 0);

  const CVector bell = dynamics::bell_state();
  const CVector flipped = kron(pauli::x(), pauli::identity()) * bell;
  const double r = 1 / std::sqrt(2.0);
  CHECK(max_abs_diff(flipped, CVector{0.0, r, r, 0.0}) < 1e-15);

  const auto e = hermitian_eig(kron(pauli::z(), pauli::z()));
  CHECK(e.values[0] == doctest::Approx(-1));
  CHECK(e.values[1] == doctest::Approx(-1));
  CHECK(e.values[2] == doctest::Approx(1));
  CHECK(e.values[3] == doctest::Approx(1));

  CHECK_THROWS_AS(kron(CMatrix::identity(4), CMatrix::identity(8)), DimensionError);
}

TEST_CASE("kron mixed product property") {
  Engine g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = fluxmet::testing::random_matrix(g, 2);
    const auto b = fluxmet::testing::random_matrix(g, 2);
    const auto c = fluxmet::testing::random_matrix(g, 2);
    const auto d = fluxmet::testing::random_matrix(g, 2);
    CHECK(max_abs_diff(kron(a, b) * kron(c, d), kron(a * c, b * d)) < 1e-12);
  }
}

TEST_CASE("hermitian_eig examples") {
  const auto z = hermitian_eig(pauli::z());
  CHECK(z.values[0] == doctest::Approx(-1));
  CHECK(z.values[1] == doctest::Approx(1));
  CHECK(std::abs(z.vectors(1, 0)) == doctest::Approx(1));
  CHECK(std::abs(z.vectors(0, 1)) == doctest::Approx(1));

  const auto n = hermitian_eig(dynamics::sigma_theta(std::numbers::pi / 4));
  CHECK(n.values[0] == doctest::Approx(-1));
  CHECK(n.values[1] == doctest::Approx(1));

  // Free θ evolution of the Bell probe: spectrum {0, 0, (1-η)/2, (1+η)/2}.
  const auto model = dynamics::theta_model(0.1, 0.05, std::numbers::pi / 4);
  const auto rho = dynamics::lindblad_evolve(model, CMatrix::projector(dynamics::bell_state()),
                                             5.0, 1e-3);
  const auto e = hermitian_eig(rho);
  const double eta = std::exp(-0.5);
  CHECK(std::abs(e.values[0]) < 1e-9);
  CHECK(std::abs(e.values[1]) < 1e-9);
  CHECK(e.values[2] == doctest::Approx((1 - eta) / 2).epsilon(1e-9));
  CHECK(e.values[3] == doctest::Approx((1 + eta) / 2).epsilon(1e-9));

  CHECK_THROWS_AS(hermitian_eig(CMatrix{{0.0, 1.0}, {0.0, 0.0}}), ContractError);
}

TEST_CASE("hermitian_eig reconstruction property") {
  Engine g(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto h = fluxmet::testing::random_hermitian(g, 4);
    const auto e = hermitian_eig(h);
    REQUIRE(max_abs_diff(reconstruct(e), h) < 1e-9);
    REQUIRE(max_abs_diff(e.vectors.adjoint() * e.vectors, CMatrix::identity(4)) < 1e-10);
    for (std::size_t i = 0; i < 4; ++i) {
      const CVector v = e.vectors.column(i);
      REQUIRE(max_abs_diff(h * v, complex(e.values[i]) * v) < 1e-10 * (1 + h.max_abs()));
      if (i > 0) REQUIRE(e.values[i - 1] <= e.values[i]);
    }
  }
  for (std::size_t dim : {2u, 3u, 8u, 16u}) {
    const auto h = fluxmet::testing::random_hermitian(g, dim);
    CHECK(max_abs_diff(reconstruct(hermitian_eig(h)), h) < 1e-9);
  }
}

TEST_CASE("hermitian_eig degenerate spectrum") {
  const auto e = hermitian_eig(CMatrix::identity(4));
  for (double v : e.values) CHECK(v == doctest::Approx(1));
  CHECK(max_abs_diff(e.vectors.adjoint() * e.vectors, CMatrix::identity(4)) < 1e-12);
}

TEST_CASE("expm examples") {
  CHECK(max_abs_diff(expm(CMatrix::zero(2)), CMatrix::identity(2)) < 1e-15);

  const CMatrix half_turn = expm(-1i * (std::numbers::pi / 2) * pauli::x());
  CHECK(max_abs_diff(half_turn, -1i * pauli::x()) < 1e-12);

  const CMatrix a = -1i * dynamics::sigma_theta(0.0);
  CHECK(max_abs_diff(expm(a), taylor_oracle(a)) < 1e-13);
  CHECK(max_abs_diff(expm(a), std::cos(1.0) * pauli::identity() - 1i * std::sin(1.0) * pauli::x()) <
        1e-13);

  CMatrix bad(2);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(expm(bad), DomainError);
}

TEST_CASE("expm unitarity and Taylor agreement property") {
  Engine g(7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto h = fluxmet::testing::random_hermitian(g, 4);
    const CMatrix u = expm(-1i * h);
    CHECK(max_abs_diff(u * u.adjoint(), CMatrix::identity(4)) < 1e-10);
    CHECK(max_abs_diff(expm(-1i * h) * expm(1i * h), CMatrix::identity(4)) < 1e-10);

    CMatrix small = fluxmet::testing::random_matrix(g, 4);
    small *= 0.3 / small.max_abs();
    CHECK(max_abs_diff(expm(small), taylor_oracle(small)) < 1e-13);
  }
}

TEST_CASE("sqrtm_psd") {
  CHECK(max_abs_diff(sqrtm_psd(0.5 * CMatrix::identity(2)),
                     (1 / std::sqrt(2.0)) * CMatrix::identity(2)) < 1e-14);
  const CMatrix p0 = CMatrix::projector(CVector::basis(2, 0));
  CHECK(max_abs_diff(sqrtm_psd(p0), p0) < 1e-14);
  const double d[] = {0.25, 0.75};
  const double s[] = {0.5, std::sqrt(0.75)};
  CHECK(max_abs_diff(sqrtm_psd(CMatrix::diagonal(d)), CMatrix::diagonal(s)) < 1e-14);

  const double neg[] = {-1e-6, 1.0};
  CHECK_THROWS_AS(sqrtm_psd(CMatrix::diagonal(neg)), NotPsdError);
  const double tiny[] = {-1e-11, 1.0};
  CHECK_NOTHROW(sqrtm_psd(CMatrix::diagonal(tiny)));

  Engine g(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rho = fluxmet::testing::random_density(g, 4);
    const CMatrix root = sqrtm_psd(rho);
    CHECK(max_abs_diff(root * root, rho) < 1e-9);
    CHECK(root.is_hermitian(1e-12));
    const CMatrix proj = CMatrix::projector(fluxmet::testing::random_state(g, 4));
    CHECK(max_abs_diff(sqrtm_psd(proj), proj) < 1e-9);
  }
}

TEST_CASE("partial_trace") {
  const CMatrix p00 = CMatrix::projector(CVector::basis(4, 0));
  CHECK(max_abs_diff(partial_trace(p00, Subsystem::first), CMatrix::projector(CVector::basis(2, 0))) ==
        0);
  const CMatrix bell = CMatrix::projector(dynamics::bell_state());
  CHECK(max_abs_diff(partial_trace(bell, Subsystem::first), 0.5 * CMatrix::identity(2)) < 1e-15);

  Engine g(3);
  const auto a = fluxmet::testing::random_density(g, 2);
  const auto b = fluxmet::testing::random_density(g, 2);
  CHECK(max_abs_diff(partial_trace(kron(a, b), Subsystem::second), b) < 1e-14);
  CHECK(max_abs_diff(partial_trace(kron(a, b), Subsystem::first), a) < 1e-14);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rho = fluxmet::testing::random_density(g, 4);
    CHECK(std::abs(partial_trace(rho, Subsystem::first).trace() - rho.trace()) < 1e-12);
  }
  CHECK_THROWS_AS(partial_trace(CMatrix::identity(2), Subsystem::first), DimensionError);
}

TEST_CASE("polar_isometry") {
  const CMatrix p0 = CMatrix::projector(CVector::basis(2, 0));
  const auto flip = polar_isometry(pauli::x() * p0, p0, 1e-12);
  CHECK(flip.scale == doctest::Approx(1));
  CHECK(!flip.degenerate);
  CHECK(max_abs_diff(flip.isometry * CVector::basis(2, 0), CVector::basis(2, 1)) < 1e-14);

  const auto zero = polar_isometry(CMatrix::zero(2), p0, 1e-12);
  CHECK(zero.scale == 0);
  CHECK(zero.degenerate);

  const CMatrix lopsided{{1.0, 0.0}, {0.0, 0.5}};
  CHECK_THROWS_AS(polar_isometry(lopsided, CMatrix::identity(2), 1e-8), NonIsotropicError);

  Engine g(9);
  for (int trial = 0; trial < 100; ++trial) {
    // m = s·W·Π with W unitary: must round-trip.
    const CMatrix w = expm(-1i * fluxmet::testing::random_hermitian(g, 4));
    const CVector a = fluxmet::testing::random_state(g, 4);
    CVector b = fluxmet::testing::random_state(g, 4);
    b -= inner(a, b) * a;
    b = b.normalized();
    const CMatrix proj = CMatrix::projector(a) + CMatrix::projector(b);
    const double s = fluxmet::testing::uniform(g, 0.1, 3.0);
    const CMatrix m = s * (w * proj);
    const auto polar = polar_isometry(m, proj, 1e-10);
    CHECK(polar.scale == doctest::Approx(s).epsilon(1e-12));
    CHECK(max_abs_diff(complex(polar.scale) * polar.isometry * proj, m) < 1e-10);
  }
}

TEST_CASE("check_density_matrix") {
  CHECK_NOTHROW(check_density_matrix(0.5 * CMatrix::identity(2)));
  CHECK_THROWS_AS(check_density_matrix(CMatrix::identity(2)), ContractError);
  const double neg[] = {-0.1, 1.1};
  CHECK_THROWS_AS(check_density_matrix(CMatrix::diagonal(neg)), ContractError);
}
