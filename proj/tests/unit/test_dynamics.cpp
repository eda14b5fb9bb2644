#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fluxmet/dynamics.hpp"
#include "fluxmet/errors.hpp"
#include "fluxmet/metrology.hpp"
#include "fluxmet/qmat.hpp"
#include "generators.hpp"

using namespace fluxmet;
using namespace fluxmet::dynamics;
using namespace fluxmet::qmat;
using namespace std::complex_literals;
using fluxmet::testing::Engine;

namespace {

constexpr double kB = 0.1;
constexpr double kGamma = 0.05;
constexpr double kTheta = std::numbers::pi / 4;

CMatrix bell_rho() { return CMatrix::projector(bell_state()); }

// Spectral projectors of σ_n(θ) ⊗ I.
CMatrix sector(double theta, double sign) {
  return on_probe(0.5 * (pauli::identity() + sign * sigma_theta(theta)));
}

double frobenius(const CMatrix& a) {
  double s = 0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

double min_eigenvalue(const CMatrix& rho) { return hermitian_eig(rho.hermitian_part()).values[0]; }

}  // namespace

TEST_CASE("theta_model operators") {
  const LindbladModel model = theta_model(kB, kGamma, kTheta);
  CHECK(model.dim == 4);
  const auto e = hermitian_eig(model.hamiltonian(0));
  CHECK(e.values[0] == doctest::Approx(-kB));
  CHECK(e.values[1] == doctest::Approx(-kB));
  CHECK(e.values[2] == doctest::Approx(kB));
  CHECK(e.values[3] == doctest::Approx(kB));
  CHECK(max_abs_diff(model.hamiltonian(0), model.hamiltonian(7.3)) == 0);

  REQUIRE(model.derivatives);
  const auto& d = *model.derivatives;
  const CMatrix expected_dh =
      kB * on_probe(-std::sin(kTheta) * pauli::x() + std::cos(kTheta) * pauli::z());
  CHECK(max_abs_diff(d.d_hamiltonian, expected_dh) < 1e-15);
  CHECK(max_abs_diff(d.dd_lindblads[0], -std::sqrt(kGamma) * on_probe(sigma_theta(kTheta))) <
        1e-15);

  // (i/2)(E†Ė - Ė†E) = γσ2 ⊗ I
  const CMatrix E = model.lindblads[0](0);
  const CMatrix Ed = d.d_lindblads[0];
  const CMatrix term = 0.5i * (E.adjoint() * Ed - Ed.adjoint() * E);
  CHECK(max_abs_diff(term, kGamma * on_probe(pauli::y())) < 1e-15);
}

TEST_CASE("theta_model unitary limit and domain") {
  const LindbladModel model = theta_model(kB, 0, 0.3);
  REQUIRE(model.lindblads.size() == 1);
  CHECK(max_abs_diff(model.lindblads[0](0), CMatrix(4)) == 0);
  CHECK_THROWS_AS(theta_model(kB, -0.1, 0.3), DomainError);
  CHECK_THROWS_AS(omega_model(kB, -0.1, 0.3), DomainError);
}

TEST_CASE("omega_model rotates in the XY plane") {
  const double omega = 0.5;
  const LindbladModel model = omega_model(kB, kGamma, omega);
  CHECK(max_abs_diff(model.hamiltonian(0), kB * on_probe(pauli::x())) < 1e-15);
  CHECK(max_abs_diff(model.hamiltonian(std::numbers::pi / omega), -kB * on_probe(pauli::x())) <
        1e-15);
  for (double t : {0.3, 1.7, 4.2}) {
    const auto e = hermitian_eig(model.hamiltonian(t));
    CHECK(e.values[0] == doctest::Approx(-kB));
    CHECK(e.values[3] == doctest::Approx(kB));
    const CMatrix dh =
        -kB * t * on_probe(std::sin(omega * t) * pauli::x() + std::cos(omega * t) * pauli::y());
    CHECK(max_abs_diff(model.hamiltonian_derivative(t), dh) < 1e-15);
    // Finite difference in Ω of H(Ω, t).
    const double h = 1e-6;
    CMatrix fd = omega_model(kB, kGamma, omega + h).hamiltonian(t) -
                 omega_model(kB, kGamma, omega - h).hamiltonian(t);
    fd *= 1 / (2 * h);
    CHECK(max_abs_diff(fd, dh) < 1e-8);
  }
}

TEST_CASE("lindblad_evolve unitary limit matches expm") {
  Engine g(3);
  const LindbladModel model = theta_model(kB, 0, 0.7);
  const CMatrix h = model.hamiltonian(0);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix rho0 = fluxmet::testing::random_density(g, 4);
    const double t = fluxmet::testing::uniform(g, 0.5, 6);
    const CMatrix u = expm(-1i * t * h);
    const CMatrix expected = u * rho0 * u.adjoint();
    CHECK(max_abs_diff(lindblad_evolve(model, rho0, t, 1e-3), expected) < 1e-8);
  }
}

TEST_CASE("lindblad_evolve dephasing factor in the field eigenbasis") {
  const LindbladModel model = theta_model(kB, kGamma, kTheta);
  const CMatrix rho = lindblad_evolve(model, bell_rho(), 5, 1e-3);
  const CMatrix p = sector(kTheta, 1);
  const CMatrix m = sector(kTheta, -1);
  const double before = frobenius(p * bell_rho() * m);
  const double after = frobenius(p * rho * m);
  CHECK(after / before == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
}

TEST_CASE("lindblad_evolve QFI of the free theta family") {
  const auto family = [](double theta) {
    return lindblad_evolve(theta_model(kB, kGamma, theta), bell_rho(), 5, 1e-3);
  };
  const double oracle = 2 * (1 - std::exp(-0.5) * std::cos(1.0));
  CHECK(oracle == doctest::Approx(1.34458).epsilon(1e-5));
  CHECK(metrology::qfi_sld_family(family, kTheta).value == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("lindblad_evolve errors and edge cases") {
  const LindbladModel model = theta_model(kB, kGamma, kTheta);
  CHECK_THROWS_AS(lindblad_evolve(model, bell_rho(), 0.5, 1.0), StepError);
  CHECK_THROWS_AS(lindblad_evolve(model, bell_rho(), 1, 0), StepError);
  CHECK_THROWS_AS(lindblad_evolve(model, bell_rho(), -1, 1e-3), DomainError);
  CHECK_THROWS_AS(lindblad_evolve(model, CMatrix::identity(2) * 0.5, 1, 1e-3), DimensionError);
  CHECK(max_abs_diff(lindblad_evolve(model, bell_rho(), 0, 1e-3), bell_rho()) == 0);
}

TEST_CASE("trace preservation and positivity up to t = 10") {
  Engine g(5);
  const LindbladModel models[] = {theta_model(kB, kGamma, kTheta), omega_model(kB, kGamma, 0.5),
                                  theta_model(1.0, 0.8, 0.2)};
  for (const auto& model : models) {
    CMatrix rho = fluxmet::testing::random_density(g, 4);
    double t = 0;
    for (int block = 0; block < 10; ++block) {
      rho = lindblad_evolve(model, rho, 1.0, 1e-3);
      t += 1;
      CHECK(std::abs(rho.trace() - 1.0) < 1e-8);
      CHECK(min_eigenvalue(rho) > -1e-7);
    }
  }
}

TEST_CASE("RK4 step halving on the rotating model") {
  const LindbladModel model = omega_model(0.8, 0.3, 1.2);
  const CMatrix rho0 = bell_rho();
  const CMatrix r1 = lindblad_evolve(model, rho0, 5, 0.1);
  const CMatrix r2 = lindblad_evolve(model, rho0, 5, 0.05);
  const CMatrix r3 = lindblad_evolve(model, rho0, 5, 0.025);
  const double ratio = max_abs_diff(r1, r2) / max_abs_diff(r2, r3);
  CHECK(ratio >= 8);

  const CMatrix converged = lindblad_evolve_converged(model, rho0, 5);
  CHECK(max_abs_diff(converged, lindblad_evolve(model, rho0, 5, 1e-4)) < 1e-8);
}

TEST_CASE("sample_phase statistics") {
  Rng rng(17);
  CHECK(sample_phase(kB, 0, 5, rng).phi == kB * 5);
  CHECK_THROWS_AS(sample_phase(kB, kGamma, -1, rng), DomainError);

  const int n = 1'000'000;
  const double t = 5;
  const double beta = 0.3;
  double sum = 0;
  double cos_sum = 0;
  for (int i = 0; i < n; ++i) {
    const double phi = sample_phase(kB, kGamma, t, rng).phi;
    sum += phi;
    cos_sum += std::cos(2 * phi + 2 * beta);
  }
  CHECK(std::abs(sum / n - kB * t) < 3 * std::sqrt(kGamma * t / n));
  CHECK(std::abs(cos_sum / n - std::exp(-0.5) * std::cos(1 + 2 * beta)) < 0.003);
}

TEST_CASE("sample_phase is deterministic for a seed") {
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 100; ++i)
    CHECK(sample_phase(kB, kGamma, 2, a).phi == sample_phase(kB, kGamma, 2, b).phi);
}

TEST_CASE("phase trajectories average to the master equation") {
  Rng rng(23);
  const double t = 5;
  const int n = 20'000;
  CMatrix mean(4);
  for (int i = 0; i < n; ++i)
    mean += CMatrix::projector(phase_trajectory_state(sample_phase(kB, kGamma, t, rng), kTheta,
                                                      bell_state()));
  mean *= 1.0 / n;
  const CMatrix rho = lindblad_evolve(theta_model(kB, kGamma, kTheta), bell_rho(), t, 1e-3);
  // Entries are bounded by 1/2, so 4.5σ with σ ≤ 0.5/√n is a loose band.
  CHECK(max_abs_diff(mean, rho) < 4.5 * 0.5 / std::sqrt(n));
}

TEST_CASE("rotating-field trajectories average to the master equation") {
  Rng rng(29);
  const double t = 2;
  const int n = 4000;
  const double omega = 0.7;
  CMatrix mean(4);
  for (int i = 0; i < n; ++i)
    mean += CMatrix::projector(omega_trajectory(0.5, 0.2, omega, t, 1e-2, bell_state(), rng));
  mean *= 1.0 / n;
  const CMatrix rho = lindblad_evolve(omega_model(0.5, 0.2, omega), bell_rho(), t, 1e-3);
  CHECK(max_abs_diff(mean, rho) < 4.5 * 0.5 / std::sqrt(n) + 1e-2);

  Rng quiet(1);
  const CVector psi = omega_trajectory(0.5, 0, omega, t, 1e-3, bell_state(), quiet);
  const CMatrix unitary = lindblad_evolve(omega_model(0.5, 0, omega), bell_rho(), t, 1e-3);
  CHECK(max_abs_diff(CMatrix::projector(psi), unitary) < 1e-5);
}

TEST_CASE("dephasing_kraus") {
  const KrausPair k = dephasing_kraus(kB, kGamma, 5, kTheta);
  const CMatrix completeness = k.k1.adjoint() * k.k1 + k.k2.adjoint() * k.k2;
  CHECK(max_abs_diff(completeness, pauli::identity()) < 1e-12);

  const KrausPair unitary = dephasing_kraus(kB, 0, 5, kTheta);
  CHECK(max_abs_diff(unitary.k2, CMatrix(2)) == 0);
  CHECK(max_abs_diff(unitary.k1.adjoint() * unitary.k1, pauli::identity()) < 1e-12);

  const KrausPair idle = dephasing_kraus(kB, kGamma, 0, kTheta);
  CHECK(max_abs_diff(idle.k1, pauli::identity()) < 1e-15);
  CHECK(max_abs_diff(idle.k2, CMatrix(2)) == 0);

  CHECK_THROWS_AS(dephasing_kraus(kB, kGamma, -1, kTheta), DomainError);
}

TEST_CASE("Kraus channel equals master-equation propagation") {
  Engine g(31);
  const double t = 5;
  const LindbladModel model = theta_model(kB, kGamma, kTheta);
  const KrausPair k = dephasing_kraus(kB, kGamma, t, kTheta);
  CHECK(max_abs_diff(apply_probe_channel(k, bell_rho()), lindblad_evolve(model, bell_rho(), t, 1e-3)) <
        1e-6);
  for (int trial = 0; trial < 25; ++trial) {
    const CMatrix rho = CMatrix::projector(fluxmet::testing::random_state(g, 4));
    CHECK(max_abs_diff(apply_probe_channel(k, rho), lindblad_evolve(model, rho, t, 1e-3)) < 1e-6);
  }
}
