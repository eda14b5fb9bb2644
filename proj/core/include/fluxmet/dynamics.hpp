#pragma once

// Physical models of a spin in a fluctuating field (probe ⊗ ancilla) and
// their evolution: deterministic Lindblad flow, stochastic phase
// trajectories, and the equivalent dephasing Kraus channel.

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "fluxmet/qmat.hpp"

namespace fluxmet::dynamics {

using qmat::CMatrix;
using qmat::CVector;
using qmat::DensityMatrix;

using Rng = std::mt19937_64;
using TimeDependentOperator = std::function<CMatrix(double)>;

// First and second derivatives of H and of every E_k with respect to the
// estimated parameter, evaluated at the model's parameter value.
struct ParameterDerivatives {
  CMatrix d_hamiltonian;
  std::vector<CMatrix> d_lindblads;
  CMatrix dd_hamiltonian;
  std::vector<CMatrix> dd_lindblads;
};

struct LindbladModel {
  std::size_t dim = 0;
  TimeDependentOperator hamiltonian;
  std::vector<TimeDependentOperator> lindblads;
  // ∂H/∂x as a function of time; empty when the model does not provide it.
  TimeDependentOperator hamiltonian_derivative;
  std::optional<ParameterDerivatives> derivatives;

  // dρ/dt = -i[H,ρ] + Σ_k (E_k ρ E_k† - ½{E_k†E_k, ρ})
  CMatrix generator(const CMatrix& rho, double t) const;

  // Model with time-independent operators (e.g. loaded from a file).
  static LindbladModel constant(CMatrix hamiltonian, std::vector<CMatrix> lindblads,
                                std::optional<ParameterDerivatives> derivatives = {});
};

// cos θ σ1 + sin θ σ3
CMatrix sigma_theta(double theta);
// cos Ωt σ1 - sin Ωt σ2
CMatrix sigma_omega(double omega, double t);
// A ⊗ I_2, an operator on the probe spin lifted to probe+ancilla.
CMatrix on_probe(const CMatrix& a);
// (|00> + |11>)/√2
CVector bell_state();

// Field of strength B along σ_n(θ) with white-noise fluctuation rate gamma.
// Carries analytic first/second θ-derivatives of H and E.
LindbladModel theta_model(double B, double gamma, double theta);

// Field of strength B rotating in the XY-plane at angular frequency omega.
LindbladModel omega_model(double B, double gamma, double omega);

// One classical RK4 step of size h starting at time t.
CMatrix rk4_step(const LindbladModel& model, const CMatrix& rho, double t, double h);

// Fixed-step RK4 over [0, t]; the step is shrunk to t/ceil(t/dt) so the
// grid lands on t exactly. Hermiticity is restored after every step.
DensityMatrix lindblad_evolve(const LindbladModel& model, const DensityMatrix& rho0,
                              double t, double dt);

// Same as lindblad_evolve but halves dt until successive results agree to
// tol in max-norm.
DensityMatrix lindblad_evolve_converged(const LindbladModel& model,
                                        const DensityMatrix& rho0, double t,
                                        double dt = 1e-3, double tol = 1e-8);

struct TrajectoryPhase {
  double phi = 0;  // accumulated phase Bt + ∫ξ dτ
  double t = 0;
};

// Draws Φ = Bt + N(0, γt).
TrajectoryPhase sample_phase(double B, double gamma, double t, Rng& rng);

// (e^{-iΦσ_n(θ)} ⊗ I)|ψ0> along one realisation of the fluctuation.
CVector phase_trajectory_state(const TrajectoryPhase& phase, double theta,
                               const CVector& psi0);

// Pure-state trajectory of the rotating-field model. Each step applies
// exp(-i(B dt + √(γ dt)·N(0,1)) σ_n(Ω, t_mid)) on the probe.
CVector omega_trajectory(double B, double gamma, double omega, double t, double dt,
                         const CVector& psi0, Rng& rng);

struct KrausPair {
  CMatrix k1;
  CMatrix k2;
};

// Exact single-spin channel of the θ model over time t:
// K1 = √((1+η)/2) e^{-iBσt}, K2 = √((1-η)/2) σ e^{-iBσt}, η = e^{-2γt}.
KrausPair dephasing_kraus(double B, double gamma, double t, double theta);

// Applies a single-spin Kraus pair to the probe of a probe+ancilla state.
DensityMatrix apply_probe_channel(const KrausPair& kraus, const DensityMatrix& rho);

}  // namespace fluxmet::dynamics
