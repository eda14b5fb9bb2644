#pragma once

// Adaptive error correction: the codes built around the current estimate,
// their recovery channels, corrected evolutions (stepwise and closed form),
// and the general engine that expands corrected dynamics to second order
// in the parameter offset.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "fluxmet/dynamics.hpp"
#include "fluxmet/metrology.hpp"
#include "fluxmet/qmat.hpp"

namespace fluxmet::qec {

using qmat::CMatrix;
using qmat::complex;
using qmat::CVector;
using qmat::DensityMatrix;

struct QecCode {
  std::size_t dim = 0;
  std::function<CVector(double)> c0;
  std::function<CVector(double)> c1;
  // Kraus operators of the recovery channel at time t.
  std::function<std::vector<CMatrix>(double)> recovery;
  // K with Ũ(dt) = exp(i K dt) carrying the code at t to the code at t+dt;
  // absent for static codes.
  std::optional<CMatrix> frame_generator;

  CMatrix projector(double t = 0) const;
  // |C0><C0| - |C1><C1|
  CMatrix sigma_z(double t = 0) const;
  // |C0><C1| + |C1><C0|
  CMatrix sigma_x(double t = 0) const;
  // (|C0> + |C1>)/√2
  CVector logical_plus(double t = 0) const;
  // exp(i K dt); identity for static codes.
  CMatrix frame_step(double dt) const;

  // Static code with recovery {Π_C} only; see with_recovery.
  static QecCode fixed(CVector c0, CVector c1);
};

struct SpinPair {
  CVector plus;
  CVector minus;
};

// Eigenvectors of ∂σ_n(θ)/∂θ at θ̂:
// |+> = -cos(θ̂/2)|0> + sin(θ̂/2)|1>, |-> = sin(θ̂/2)|0> + cos(θ̂/2)|1>.
SpinPair theta_eigenbasis(double theta_hat);

// Code {|++>, |-->} of the θ̂-eigenbasis with recovery {Π_C, Π_C σ_n(θ̂)⊗I}.
QecCode theta_code(double theta_hat);

// Time-dependent code |C0(t)> = V(t)|y-⟩|0>, |C1(t)> = V(t)|y+>|1> with
// V(t) = exp(iΩ̂tσ3/2) on the probe, recovery {Π_C(t), Π_C(t)σ_n(Ω̂,t)⊗I},
// frame generator (Ω̂/2)σ3⊗I.
QecCode omega_code(double omega_hat);

// Σ K ρ K† with the code's recovery at time t. Throws LeakageError when
// the trace drops by more than leak_tol.
DensityMatrix apply_recovery(const QecCode& code, const DensityMatrix& rho, double t,
                             double leak_tol = 1e-6);

// Evolves the logical |+> under the θ model and recovers every t/n
// (n_recoveries = 0 selects one recovery per integrator step).
DensityMatrix corrected_evolve_theta(double B, double gamma, double theta, double theta_hat,
                                     double t, double dt, long n_recoveries = 0);

// ½(|C0><C0| + |C1><C1| + e^{-gt}|C0><C1| + h.c.),
// g = 2iB sin(θ-θ̂) + 2γ sin²(θ-θ̂).
DensityMatrix corrected_state_theta_closed(double B, double gamma, double theta,
                                           double theta_hat, double t);

// Same protocol for the rotating field. The code frame follows Ũ(dt) as a
// continuous control term -K during the evolution, and each recovery uses
// the code at the end of its interval. Returns the lab-frame state,
// supported on Π_C(t).
DensityMatrix corrected_evolve_omega(double B, double gamma, double omega, double omega_hat,
                                     double t, double dt, long n_recoveries = 0);

// Lab-frame closed form: V(t) ρ_R V(t)† where ρ_R carries the coherence
// exp(-∫₀ᵗ g(τ) dτ), g(τ) = 2 sin(dΩτ)[iB + γ sin(dΩτ)].
DensityMatrix corrected_state_omega_closed(double B, double gamma, double omega,
                                           double omega_hat, double t);

// ρ_R = V(t)† ρ V(t).
DensityMatrix to_rotating_frame(double omega_hat, const DensityMatrix& rho, double t);

struct QecConditions {
  std::vector<complex> alpha;
  CMatrix beta;
  std::vector<double> d;  // β_kk - |α_k|²
  std::vector<double> alpha_residuals;
  std::vector<std::vector<double>> beta_residuals;
  double max_residual = 0;
};

// Projects Π_C E_k Π_C and Π_C E_k†E_j Π_C onto Π_C. Never throws on a
// failed condition; see check_qec_conditions.
QecConditions evaluate_qec_conditions(const dynamics::LindbladModel& model,
                                      const QecCode& code, double t = 0);

// evaluate_qec_conditions, throwing CodeConditionError naming the worst
// (k) or (k, j) when a residual exceeds tol.
QecConditions check_qec_conditions(const dynamics::LindbladModel& model, const QecCode& code,
                                   double tol = 1e-8, double t = 0);

// Second-order part of the corrected generator, in Kraus-plus-commutator
// form:
// L2(ρ) = -i[G, ρ] + Σ_k (J_k ρ J_k† - ½{N_k, ρ}) + Σ_kj K_kj ρ K_kj†.
struct SecondOrderGenerator {
  CMatrix hamiltonian;              // G
  std::vector<CMatrix> jumps;       // J_k = Π Ė_k Π
  std::vector<CMatrix> jump_norms;  // N_k = Π Ė_k†Ė_k Π
  std::vector<CMatrix> couplings;   // K_kj = Π (E_k† - α_k*) Ė_j Π / √d_kk

  CMatrix apply(const CMatrix& rho) const;
};

struct GeneralQecReport {
  std::vector<complex> alpha;
  CMatrix beta;
  std::vector<double> d;
  // Unitary W recombining the noise operators F_l = Σ_k W_kl E_k so that
  // the error Gram matrix is diagonal (identity when already orthogonal).
  CMatrix mixing;
  bool orthogonalized = false;
  std::vector<CMatrix> isometries;  // U_k; zero for dropped operators
  std::vector<bool> dropped;        // d_kk below the degeneracy threshold
  CMatrix projector;
  CMatrix l0_generator;  // Π_C H Π_C
  CMatrix l1_generator;  // H̃
  SecondOrderGenerator l2;
  CMatrix control_hamiltonian;  // -Π_C H Π_C
};

struct ExpansionOptions {
  double tol = 1e-8;
  double deg_tol = 1e-12;
  // Recombine non-orthogonal noise operators instead of failing.
  bool orthogonalize = true;
};

// Full second-order expansion of the corrected dynamics around the model's
// parameter value. The model must carry first and second derivatives.
GeneralQecReport expansion_superoperators(const dynamics::LindbladModel& model,
                                          const QecCode& code, const ExpansionOptions& options = {});

// Recovery {Π_C, Π_C U_k†} assembled from the report's isometries.
QecCode with_recovery(const QecCode& code, const GeneralQecReport& report);

struct AsymptoticQfiTerms {
  double value = 0;
  double variance = 0;        // Δ²H̃ in the probe
  double l2_expectation = 0;  // <ψ|L2(|ψ><ψ|)|ψ>, never positive
  double l1_expectation = 0;  // <ψ|L1(|ψ><ψ|)|ψ>, always zero
};

// 4t²Δ²H̃ - 4t<ψ|L2(|ψ><ψ|)|ψ>. Throws DomainError for probes outside the
// code space.
AsymptoticQfiTerms asymptotic_qfi_terms(const GeneralQecReport& report, const CVector& psi,
                                        double t);
metrology::FisherResult asymptotic_qfi(const GeneralQecReport& report, const CVector& psi,
                                       double t);

// exp((L1 dx + L2 dx²) t)(|ψ><ψ|), integrated with RK4 at the given step.
DensityMatrix expansion_state(const GeneralQecReport& report, const CVector& psi, double t,
                              double dx, double dt = 1e-2);

}  // namespace fluxmet::qec
