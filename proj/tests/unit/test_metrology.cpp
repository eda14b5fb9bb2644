#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "fluxmet/dynamics.hpp"
#include "fluxmet/errors.hpp"
#include "fluxmet/metrology.hpp"
#include "fluxmet/qec.hpp"
#include "fluxmet/qmat.hpp"
#include "generators.hpp"

using namespace fluxmet;
using namespace fluxmet::metrology;
using namespace fluxmet::qmat;
using namespace std::complex_literals;
using fluxmet::testing::Engine;

namespace {

constexpr double kB = 0.1;
constexpr double kGamma = 0.05;
constexpr double kT = 5;
constexpr double kTheta = std::numbers::pi / 4;

// Values frozen from an independent 40-digit evaluation of the coherence
// formulas (qubit QFI r'²/(1-r²) + r²b'² and the two-outcome CFI).
constexpr double kThetaQfi005 = 1.991270276703323;
constexpr double kThetaCfi005 = 1.991268119169427;
constexpr double kOmegaQfi005 = 13.87646797785528;
constexpr double kOmegaCfi005 = 13.87586257356599;

CMatrix free_theta_state(double theta, double B = kB, double gamma = kGamma, double t = kT) {
  return dynamics::apply_probe_channel(dynamics::dephasing_kraus(B, gamma, t, theta),
                                       CMatrix::projector(dynamics::bell_state()));
}

CMatrix diag2(double a, double b) {
  const std::array<double, 2> values{a, b};
  return CMatrix::diagonal(values);
}

}  // namespace

TEST_CASE("fidelity examples") {
  Engine g(1);
  const CMatrix rho = fluxmet::testing::random_density(g, 4);
  CHECK(fidelity(rho, rho) == doctest::Approx(1).epsilon(1e-12));

  const CVector zero{1.0, 0.0};
  const CVector plus = CVector{1.0, 1.0}.normalized();
  CHECK(fidelity(CMatrix::projector(zero), CMatrix::projector(plus)) ==
        doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(fidelity(diag2(0.5, 0.5), diag2(0.9, 0.1)) ==
        doctest::Approx(std::sqrt(0.45) + std::sqrt(0.05)).epsilon(1e-12));
}

TEST_CASE("fidelity is symmetric and bounded") {
  Engine g(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = trial % 2 ? 2 : 4;
    const CMatrix a = fluxmet::testing::random_density(g, dim);
    const CMatrix b = trial % 3 ? fluxmet::testing::random_density(g, dim)
                                : CMatrix::projector(fluxmet::testing::random_state(g, dim));
    const double f = fidelity(a, b);
    CHECK(f >= 0);
    CHECK(f <= 1 + 1e-10);
    CHECK(std::abs(f - fidelity(b, a)) < 1e-10);
  }
}

TEST_CASE("fidelity rejects invalid states") {
  CHECK_THROWS_AS(fidelity(diag2(1.2, -0.2), diag2(0.5, 0.5)), DomainError);
  CHECK_THROWS_AS(fidelity(diag2(0.5, 0.5), CMatrix::identity(4) * 0.25), DimensionError);
}

TEST_CASE("fidelity_qubit is the squared fidelity") {
  const CMatrix zero = diag2(1, 0);
  const CMatrix one = diag2(0, 1);
  CHECK(fidelity_qubit(zero, zero) == doctest::Approx(1));
  CHECK(fidelity_qubit(zero, one) == doctest::Approx(0));
  CHECK(fidelity_qubit(diag2(0.5, 0.5), diag2(0.5, 0.5)) == doctest::Approx(1));

  Engine g(3);
  for (int trial = 0; trial < 200; ++trial) {
    const CMatrix a = fluxmet::testing::random_density(g, 2);
    const CMatrix b = fluxmet::testing::random_density(g, 2);
    const double f = fidelity(a, b);
    CHECK(std::abs(fidelity_qubit(a, b) - f * f) < 1e-10);
  }
  CHECK_THROWS_AS(fidelity_qubit(CMatrix::identity(4) * 0.25, CMatrix::identity(4) * 0.25),
                  DimensionError);
}

TEST_CASE("sld examples") {
  const CMatrix l = sld(CMatrix::identity(2) * 0.5, 0.5 * pauli::z());
  CHECK(max_abs_diff(l, pauli::z()) < 1e-14);

  CHECK_THROWS_AS(sld(CMatrix::identity(2) * 0.5, CMatrix{{0.0, 1.0}, {0.0, 0.0}}),
                  ContractError);
}

TEST_CASE("sld on pure states gives 4<dψ|dψ>") {
  Engine g(4);
  for (int trial = 0; trial < 100; ++trial) {
    const CVector psi = fluxmet::testing::random_state(g, 4);
    CVector dpsi = fluxmet::testing::random_state(g, 4);
    dpsi = dpsi - qmat::inner(psi, dpsi) * psi;  // <ψ|∂ψ> = 0
    const CMatrix drho = CMatrix::outer(dpsi, psi) + CMatrix::outer(psi, dpsi);
    const double expected = 4 * qmat::inner(dpsi, dpsi).real();
    CHECK(qfi_sld(CMatrix::projector(psi), drho).value == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("sld of the free-evolution state matches the eigenvector form") {
  const double c = std::cos(kB * kT);
  const double s = std::sin(kB * kT);
  const double st = std::sin(kTheta);
  const double ct = std::cos(kTheta);
  const double r = 1 / std::sqrt(2.0);
  const CVector e1 = r * CVector{-ct, st, st, ct};
  const CVector e3 = r * CVector{-1i * s + c * st, c * ct, c * ct, -1i * s - c * st};
  const CVector e4 = r * CVector{c - 1i * s * st, -1i * s * ct, -1i * s * ct, c + 1i * s * st};
  const CMatrix expected = -2 * c * (CMatrix::outer(e1, e3) + CMatrix::outer(e3, e1)) +
                           2i * s * (CMatrix::outer(e1, e4) - CMatrix::outer(e4, e1));

  const CMatrix rho = free_theta_state(kTheta);
  const CMatrix drho = state_derivative([](double x) { return free_theta_state(x); }, kTheta);
  CHECK(max_abs_diff(sld(rho, drho), expected) < 1e-8);
}

TEST_CASE("qfi_sld examples") {
  const CMatrix rho = free_theta_state(kTheta);
  CHECK(qfi_sld(rho, CMatrix(4)).value == 0);

  const double free_oracle = 2 * (1 - std::exp(-0.5) * std::cos(1.0));
  const auto family = [](double x) { return free_theta_state(x); };
  const FisherResult r = qfi_sld_family(family, kTheta);
  CHECK(r.method == FisherMethod::sld);
  CHECK(r.value == doctest::Approx(free_oracle).epsilon(1e-7));
  CHECK(r.value == doctest::Approx(1.34458).epsilon(1e-5));

  // Unitary Bell probe for the field strength.
  const auto b_family = [](double b) {
    return free_theta_state(kTheta, b, 0.0, kT);
  };
  CHECK(qfi_sld_family(b_family, kB).value == doctest::Approx(4 * kT * kT).epsilon(1e-7));
}

TEST_CASE("state_derivative Richardson check rejects jumps") {
  const auto jump = [](double x) { return x < 0 ? diag2(0.3, 0.7) : diag2(0.6, 0.4); };
  CHECK_THROWS_AS(state_derivative(jump, 0.0), NumericError);
}

TEST_CASE("qfi_fidelity_fd examples") {
  const auto constant = [](double) { return diag2(0.3, 0.7); };
  CHECK(qfi_fidelity_fd(constant, 0.2).value == doctest::Approx(0).epsilon(1e-12));

  const CVector plus = CVector{1.0, 1.0}.normalized();
  const auto rotating = [&](double x) {
    return CMatrix::projector(expm(-0.5i * x * pauli::z()) * plus);
  };
  for (double x : {-1.0, 0.0, 0.4, 2.5})
    CHECK(qfi_fidelity_fd(rotating, x).value == doctest::Approx(1).epsilon(1e-6));

  CHECK_THROWS_AS(qfi_fidelity_fd(constant, 0.2, 0), DomainError);
}

TEST_CASE("corrected theta family at the code point") {
  const auto closed = [](double theta) {
    return qec::corrected_state_theta_closed(kB, kGamma, theta, kTheta, kT);
  };
  const auto numeric = [](double theta) {
    return qec::corrected_evolve_theta(kB, kGamma, theta, kTheta, kT, 1e-3);
  };
  CHECK(std::abs(qfi_fidelity_fd(closed, kTheta).value - 2) < 1e-3);
  CHECK(std::abs(qfi_fidelity_fd(numeric, kTheta).value - 2) < 1e-3);
  CHECK(qfi_sld_family(closed, kTheta).value == doctest::Approx(2).epsilon(1e-6));
  CHECK(qfi_sld_family(numeric, kTheta).value == doctest::Approx(2).epsilon(1e-3));

  // Without the rank-change term the pure point only sees the phase part.
  const CMatrix rho = closed(kTheta);
  CHECK(qfi_sld(rho, state_derivative(closed, kTheta)).value ==
        doctest::Approx(4 * kB * kB * kT * kT).epsilon(1e-6));
}

TEST_CASE("route agreement on the corrected theta family") {
  for (int ti = 1; ti <= 10; ++ti) {
    const double t = ti;
    for (double d : {0.0, 0.05, 0.1}) {
      const auto family = [t](double theta) {
        return qec::corrected_state_theta_closed(kB, kGamma, theta, kTheta, t);
      };
      const double x = kTheta + d;
      const double closed = qfi_theta_qec_closed(kB, kGamma, t, d).value;
      const double by_sld = qfi_sld_family(family, x).value;
      const double by_fid = qfi_fidelity_fd(family, x, 1e-4).value;
      INFO("t = " << t << ", dθ = " << d);
      CHECK(std::abs(by_sld - by_fid) < std::max(1e-4, 1e-3 * closed));
      CHECK(by_sld == doctest::Approx(closed).epsilon(1e-3));
      CHECK(by_fid == doctest::Approx(closed).epsilon(1e-3));
    }
  }
}

TEST_CASE("corrected omega family") {
  const double omega_hat = 0.5;
  const auto closed = [&](double omega) {
    return qec::corrected_state_omega_closed(kB, kGamma, omega, omega_hat, kT);
  };
  const double target = kB * kB * std::pow(kT, 4) + 4.0 / 3 * kGamma * std::pow(kT, 3);
  CHECK(target == doctest::Approx(14.58333).epsilon(1e-6));
  CHECK(qfi_sld_family(closed, omega_hat).value == doctest::Approx(target).epsilon(1e-6));
  CHECK(qfi_sld_family(closed, omega_hat - 0.05).value ==
        doctest::Approx(kOmegaQfi005).epsilon(1e-6));
  CHECK(std::abs(qfi_fidelity_fd(closed, omega_hat, 1e-4).value - target) < 1e-2);
}

TEST_CASE("cfi examples") {
  const auto flat = [](double) { return MeasurementDistribution({{"a", 0.25}, {"b", 0.75}}); };
  CHECK(cfi(flat, 0.3).value == 0);

  const auto bell = [](double theta) {
    return born_distribution(free_theta_state(theta), bell_basis());
  };
  const double free_oracle = 2 * (1 - std::exp(-0.5) * std::cos(1.0));
  CHECK(cfi(bell, kTheta).value == doctest::Approx(free_oracle).epsilon(1e-7));

  const double beta = std::numbers::pi / 4 - kB * kT;
  const auto trajectory = [&](double b) {
    return b_trajectory_distribution(b, kGamma, kT, beta);
  };
  CHECK(cfi(trajectory, kB).value == doctest::Approx(100 * std::exp(-1.0)).epsilon(1e-7));
  CHECK(cfi(trajectory, kB).value == doctest::Approx(36.788).epsilon(1e-4));
}

TEST_CASE("MeasurementDistribution validation") {
  CHECK_THROWS_AS(MeasurementDistribution({{"a", 0.5}, {"b", 0.6}}), ContractError);
  CHECK_THROWS_AS(MeasurementDistribution({{"a", -0.1}, {"b", 1.1}}), ContractError);
  const MeasurementDistribution d({{"a", -1e-14}, {"b", 1.0}});
  CHECK(d.probability(0) == 0);
}

TEST_CASE("free-evolution closed form") {
  CHECK(qfi_theta_free_closed(kB, kGamma, kT).value ==
        doctest::Approx(2 * (1 - std::exp(-0.5) * std::cos(1.0))).epsilon(1e-14));
  for (double t : {0.5, 3.0, 11.0}) {
    const double s = std::sin(kB * t);
    CHECK(qfi_theta_free_closed(kB, 0, t).value == doctest::Approx(4 * s * s).epsilon(1e-12));
  }
  for (double t : {0.001, 0.01, 0.05, 0.1}) {
    const double s = std::sin(kB * t);
    const double gap = qfi_theta_free_closed(kB, kGamma, t).value - 4 * s * s;
    CHECK(gap == doctest::Approx(4 * kGamma * t).epsilon(0.01));
  }
  CHECK_THROWS_AS(qfi_theta_free_closed(kB, kGamma, -1), DomainError);
}

TEST_CASE("error-corrected theta closed form") {
  CHECK(qfi_theta_qec_closed(kB, kGamma, kT, 0).value == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(qfi_theta_qec_closed(kB, kGamma, kT, 0.05).value ==
        doctest::Approx(kThetaQfi005).epsilon(1e-12));
  CHECK(qfi_theta_qec_closed(kB, kGamma, 0, 0.05).value == 0);
  for (double d : {0.0, 0.03, 0.1, -0.2}) {
    const double c = std::cos(d);
    CHECK(qfi_theta_qec_closed(kB, 0, kT, d).value ==
          doctest::Approx(4 * kB * kB * kT * kT * c * c).epsilon(1e-12));
  }
  // Second-order expansion; the residual is O(dθ⁴).
  const double coeff = 4 * kB * kB * kT * kT *
                       (1 + 2 * kGamma * kGamma / (kB * kB) + kGamma / (kB * kB * kT) +
                        4 * kGamma * kT);
  for (double d : {0.02, 0.01, 0.005}) {
    const double residual = qfi_theta_qec_closed(kB, kGamma, kT, d).value - (2 - coeff * d * d);
    CHECK(std::abs(residual) < 10 * std::pow(d, 4));
  }
  // Smooth through the removable singularity.
  CHECK(qfi_theta_qec_closed(kB, kGamma, kT, 1e-9).value == doctest::Approx(2).epsilon(1e-12));
}

TEST_CASE("error-corrected omega closed form") {
  CHECK(qfi_omega_qec_closed(kB, kGamma, kT, 0).value ==
        doctest::Approx(6.25 + 25.0 / 3).epsilon(1e-14));
  CHECK(qfi_omega_qec_closed(kB, 0, kT, 0).value == doctest::Approx(6.25).epsilon(1e-14));
  CHECK(qfi_omega_qec_closed(kB, kGamma, kT, 0.05).value ==
        doctest::Approx(kOmegaQfi005).epsilon(1e-12));
  const double t = kT;
  const double coeff = (0.5 * kB * kB * t * t * t + 0.8 * kGamma * t * t +
                        4.0 / 3 * kB * kB * kGamma * std::pow(t, 4) +
                        8.0 / 9 * kGamma * kGamma * t * t * t) *
                       t * t * t;
  const double d = 0.01;
  const double j0 = qfi_omega_qec_closed(kB, kGamma, t, 0).value;
  const double observed = (j0 - qfi_omega_qec_closed(kB, kGamma, t, d).value) / (d * d);
  CHECK(observed == doctest::Approx(coeff).epsilon(0.01));
  // Series and direct branches meet smoothly.
  const double below = qfi_omega_qec_closed(kB, kGamma, t, 0.99e-2 / t).value;
  const double above = qfi_omega_qec_closed(kB, kGamma, t, 1.01e-2 / t).value;
  CHECK(std::abs(below - above) < 1e-4);
}

TEST_CASE("unitary baselines") {
  CHECK(qfi_theta_unitary_controlled(kB, kT, 0).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(qfi_theta_unitary_controlled(kB, kT, 0.1).value < 1.0);
  for (double d : {0.1, 0.05}) {
    const double expected = 1 - std::pow(kB * kT * d, 4) / 3;
    CHECK(std::abs(qfi_theta_unitary_controlled(kB, kT, d).value - expected) <
          std::pow(d, 5));
  }
  CHECK(qfi_omega_unitary_controlled(kB, kT, 0).value == doctest::Approx(6.25).epsilon(1e-14));
  CHECK(qfi_omega_unitary_controlled(kB, 0, 0.3).value == 0);
  CHECK(qfi_omega_unitary_controlled(kB, kT, 0.05).value ==
        doctest::Approx(6.25 * (1 - 25 * 0.0025 / 18)).epsilon(1e-14));
  CHECK(qfi_omega_unitary_controlled(kB, kT, 0.05).value == doctest::Approx(6.2283).epsilon(1e-4));
}

TEST_CASE("fluctuation advantage and penalty") {
  for (double t : {0.5, 1.0, 5.0, 9.0}) {
    for (double g : {0.01, 0.05, 0.3}) {
      CHECK(qfi_theta_qec_closed(kB, g, t, 0).value - qfi_theta_unitary_controlled(kB, t, 0).value ==
            doctest::Approx(4 * g * t).epsilon(1e-12));
      CHECK(qfi_omega_qec_closed(kB, g, t, 0).value - qfi_omega_unitary_controlled(kB, t, 0).value ==
            doctest::Approx(4.0 / 3 * g * t * t * t).epsilon(1e-12));
      CHECK(qfi_B_trajectory_averaged(t, g).value < 4 * t * t);
    }
  }
}

TEST_CASE("averaged-trajectory field-strength information") {
  CHECK(qfi_B_trajectory_averaged(kT, 0).value == doctest::Approx(100).epsilon(1e-14));
  CHECK(qfi_B_trajectory_averaged(kT, kGamma).value == doctest::Approx(36.788).epsilon(1e-4));
  const auto family = [](double b) { return free_theta_state(kTheta, b, kGamma, kT); };
  CHECK(std::abs(qfi_sld_family(family, kB).value - qfi_B_trajectory_averaged(kT, kGamma).value) <
        1e-6);
}

TEST_CASE("code-space measurement information") {
  CHECK(cfi_theta_qec_measurement(kB, kGamma, kT, 0).value == doctest::Approx(2).epsilon(1e-12));
  CHECK(cfi_omega_qec_measurement(kB, kGamma, kT, 0).value ==
        doctest::Approx(6.25 + 25.0 / 3).epsilon(1e-12));
  CHECK(cfi_theta_qec_measurement(kB, kGamma, kT, 0.05).value ==
        doctest::Approx(kThetaCfi005).epsilon(1e-10));
  CHECK(cfi_omega_qec_measurement(kB, kGamma, kT, 0.05).value ==
        doctest::Approx(kOmegaCfi005).epsilon(1e-10));

  // Numerical CFI of the σ_x^C measurement on the closed-form states.
  const auto code = qec::theta_code(kTheta);
  const CVector up = code.logical_plus();
  const CVector down = (1 / std::sqrt(2.0)) * (code.c0(0) - code.c1(0));
  const auto dist = [&](double theta) {
    const CMatrix rho = qec::corrected_state_theta_closed(kB, kGamma, theta, kTheta, kT);
    return MeasurementDistribution({{"+", qmat::inner(up, rho * up).real()},
                                    {"-", qmat::inner(down, rho * down).real()}});
  };
  CHECK(cfi(dist, kTheta + 0.05).value == doctest::Approx(kThetaCfi005).epsilon(1e-6));
}

TEST_CASE("CFI never exceeds QFI") {
  for (int ti = 0; ti <= 20; ++ti) {
    const double t = 0.5 * ti;
    for (double d = -0.3; d <= 0.3001; d += 0.025) {
      CHECK(cfi_theta_qec_measurement(kB, kGamma, t, d).value <=
            qfi_theta_qec_closed(kB, kGamma, t, d).value + 1e-8);
      CHECK(cfi_omega_qec_measurement(kB, kGamma, t, d).value <=
            qfi_omega_qec_closed(kB, kGamma, t, d).value + 1e-8);
    }
  }
}
