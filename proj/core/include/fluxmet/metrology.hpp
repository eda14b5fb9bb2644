#pragma once

// Fisher information and state-distance computations: numerical routes
// (SLD, fidelity finite differences, classical Fisher information of an
// outcome distribution) and the closed forms for the field models.

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fluxmet/qmat.hpp"

namespace fluxmet::metrology {

using qmat::CMatrix;
using qmat::CVector;
using qmat::DensityMatrix;

enum class FisherMethod { closed_form, sld, fidelity_fd, trajectory_cfi, measurement_cfi };

const char* to_string(FisherMethod method);

struct FisherParams {
  static constexpr double unset = std::numeric_limits<double>::quiet_NaN();
  double B = unset;
  double gamma = unset;
  double t = unset;
  double d_param = unset;
};

struct FisherResult {
  double value = 0;
  FisherMethod method = FisherMethod::closed_form;
  FisherParams params;
};

struct Outcome {
  std::string label;
  double probability = 0;
};

class MeasurementDistribution {
 public:
  MeasurementDistribution() = default;
  // Throws ContractError if a probability is negative beyond 1e-12 or the
  // total differs from 1 by more than 1e-12. Tiny negatives are clamped.
  explicit MeasurementDistribution(std::vector<Outcome> outcomes);

  const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }
  std::size_t size() const noexcept { return outcomes_.size(); }
  double probability(std::size_t i) const { return outcomes_.at(i).probability; }

 private:
  std::vector<Outcome> outcomes_;
};

using StateMap = std::function<DensityMatrix(double)>;
using DistributionMap = std::function<MeasurementDistribution(double)>;

// Uhlmann fidelity F = Tr√(√ρ1 ρ2 √ρ1). The square root is taken on the
// support of whichever state has the smaller numerical rank, which keeps
// F accurate to roundoff for pure and rank-deficient states.
double fidelity(const DensityMatrix& r1, const DensityMatrix& r2);

// Tr(ρ1ρ2) + 2√(det ρ1 det ρ2). For qubits this equals fidelity(r1, r2)²
// (the squared-fidelity convention), not F itself.
double fidelity_qubit(const DensityMatrix& r1, const DensityMatrix& r2);

// Symmetric logarithmic derivative: in the eigenbasis of ρ,
// L_ij = 2 drho_ij / (λ_i + λ_j), zero where λ_i + λ_j <= kernel_tol.
// A negative kernel_tol selects the default 1e-12·λ_max.
CMatrix sld(const DensityMatrix& rho, const CMatrix& drho, double kernel_tol = -1);

// Tr(ρ L²).
FisherResult qfi_sld(const DensityMatrix& rho, const CMatrix& drho, double kernel_tol = -1);

// Central difference (ρ(x+δ) - ρ(x-δ))/(2δ). Also evaluates the difference
// at δ/2 and throws NumericError when the two disagree beyond 1e-6 relative.
CMatrix state_derivative(const StateMap& state_map, double x, double delta = 1e-5);

// qfi_sld on state_map(x) with drho from state_derivative, plus the
// rank-change term 2Σ ∂²λ_i over kernel eigenvalues so the result is the
// Bures metric even where a pure state starts to mix.
FisherResult qfi_sld_family(const StateMap& state_map, double x, double delta = 1e-5);

// 8(1 - F(ρ(x), ρ(x+δ)))/δ². Throws NumericError when F > 1 + 1e-8.
FisherResult qfi_fidelity_fd(const StateMap& state_map, double x, double delta = 1e-3);

// Σ_i (∂_x p_i)²/p_i with central differences; outcomes with p_i < 1e-14
// at x are skipped.
FisherResult cfi(const DistributionMap& dist_map, double x, double delta = 1e-5);

// Born-rule distribution of ρ for a projective measurement on an
// orthonormal basis.
MeasurementDistribution born_distribution(const DensityMatrix& rho,
                                          const std::vector<CVector>& basis,
                                          const std::vector<std::string>& labels = {});

// (|00>±|11>)/√2, (|10>±|01>)/√2 in that order.
std::vector<CVector> bell_basis();

// Outcomes of the adaptive B measurement, averaged over the Gaussian phase:
// p1 = (1 + e^{-2γt} cos(2Bt + 2β))/2, p2 = 1 - p1.
MeasurementDistribution b_trajectory_distribution(double B, double gamma, double t,
                                                  double beta);

// A code-space qubit whose coherence is ½e^{-a-ib}, written in the scaled
// form a = u²·a_hat, b = u·b_hat with ∂a/∂x = u·a_dot, ∂b/∂x = b_dot so
// that every quantity below stays finite as the detuning u → 0.
struct CodeCoherence {
  double u = 0;
  double a_hat = 0;
  double b_hat = 0;
  double a_dot = 0;
  double b_dot = 0;

  double decay() const { return u * u * a_hat; }
  double phase() const { return u * b_hat; }
  // Probability of the σ_x^C outcome -1 (the + outcome is 1 - this).
  double minus_probability() const;
  double plus_probability() const;
  // Fisher information of the σ_x^C measurement; exact at u = 0.
  double measurement_cfi() const;
  // QFI of the qubit family; exact at u = 0.
  double qfi() const;
};

// Corrected θ dynamics: a = 2γt sin²dθ, b = 2Bt sin dθ.
CodeCoherence theta_coherence(double B, double gamma, double t, double dtheta);

// Rotating-frame Ω dynamics: a + ib = ∫₀ᵗ 2 sin(dΩτ)[iB + γ sin(dΩτ)] dτ,
// evaluated from its antiderivative with series near dΩ·t = 0.
CodeCoherence omega_coherence(double B, double gamma, double t, double domega);

// 2(1 - e^{-2γt} cos 2Bt)
FisherResult qfi_theta_free_closed(double B, double gamma, double t);

// 4t²cos²dθ [B² e^{-x} + (γ/t)·x/(e^x - 1)], x = 4γt sin²dθ; equals
// 4B²t² + 4γt at dθ = 0.
FisherResult qfi_theta_qec_closed(double B, double gamma, double t, double dtheta);

// Dephasing-qubit QFI of the rotating-frame corrected state; equals
// B²t⁴ + (4/3)γt³ at dΩ = 0.
FisherResult qfi_omega_qec_closed(double B, double gamma, double t, double domega);

// ½[1 + 4B²t² + 4B²t² cos dθ - cos(2Bt√(2 - 2cos dθ))]
FisherResult qfi_theta_unitary_controlled(double B, double t, double dtheta);

// B²t⁴(1 - t²dΩ²/18), second order in dΩ.
FisherResult qfi_omega_unitary_controlled(double B, double t, double domega);

// 4t² e^{-4γt}
FisherResult qfi_B_trajectory_averaged(double t, double gamma);

// Closed-form CFI of the σ_x^C measurement on the corrected states.
FisherResult cfi_theta_qec_measurement(double B, double gamma, double t, double dtheta);
FisherResult cfi_omega_qec_measurement(double B, double gamma, double t, double domega);

}  // namespace fluxmet::metrology
