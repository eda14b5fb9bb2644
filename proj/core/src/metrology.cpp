#include "fluxmet/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fluxmet/errors.hpp"

namespace fluxmet::metrology {

using qmat::complex;

namespace {

// Crossover below which removable singularities switch to series.
constexpr double kSeriesCutoff = 1e-7;
// |dΩ·t| below which the rotating-frame integrals use their Taylor series.
constexpr double kOmegaSeriesCutoff = 1e-2;

void require_time(double t) {
  if (!(t >= 0)) throw DomainError("evolution time must be >= 0");
}

void require_rate(double gamma) {
  if (!(gamma >= 0)) throw DomainError("fluctuation rate gamma must be >= 0");
}

// -expm1(-x)/x
double relative_decay(double x) {
  if (std::abs(x) < kSeriesCutoff) return 1 - x / 2 + x * x / 6;
  return -std::expm1(-x) / x;
}

// x/expm1(x)
double bernoulli_ratio(double x) {
  if (std::abs(x) < kSeriesCutoff) return 1 - x / 2 + x * x / 12;
  return x / std::expm1(x);
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1 - x * x / 6 + x * x * x * x / 120;
  return std::sin(x) / x;
}

// With f(z) = 1 - sin(2z)/(2z) and q(z) = (1 - cos z)/z:
// f/z², f'/z, q/z and q'.
double f_over_z2(double z) {
  const double z2 = z * z;
  if (std::abs(z) < kOmegaSeriesCutoff)
    return 2.0 / 3 - z2 * (2.0 / 15) + z2 * z2 * (4.0 / 315) - z2 * z2 * z2 * (2.0 / 2835);
  return (1 - std::sin(2 * z) / (2 * z)) / z2;
}

double df_over_z(double z) {
  const double z2 = z * z;
  if (std::abs(z) < kOmegaSeriesCutoff)
    return 4.0 / 3 - z2 * (8.0 / 15) + z2 * z2 * (8.0 / 105) - z2 * z2 * z2 * (16.0 / 2835);
  return (std::sin(2 * z) / (2 * z2) - std::cos(2 * z) / z) / z;
}

double q_over_z(double z) {
  const double z2 = z * z;
  if (std::abs(z) < kOmegaSeriesCutoff)
    return 0.5 - z2 / 24 + z2 * z2 / 720 - z2 * z2 * z2 / 40320;
  return (1 - std::cos(z)) / z2;
}

double dq(double z) {
  const double z2 = z * z;
  if (std::abs(z) < kOmegaSeriesCutoff)
    return 0.5 - z2 / 8 + z2 * z2 / 144 - z2 * z2 * z2 / 5760;
  return std::sin(z) / z - (1 - std::cos(z)) / z2;
}

FisherResult closed(double value, double B, double gamma, double t, double d) {
  return {std::max(value, 0.0), FisherMethod::closed_form, {B, gamma, t, d}};
}

void require_density(const DensityMatrix& rho, const char* what) {
  try {
    qmat::check_density_matrix(rho);
  } catch (const ContractError& e) {
    throw DomainError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

const char* to_string(FisherMethod method) {
  switch (method) {
    case FisherMethod::closed_form: return "closed_form";
    case FisherMethod::sld: return "sld";
    case FisherMethod::fidelity_fd: return "fidelity_fd";
    case FisherMethod::trajectory_cfi: return "trajectory_cfi";
    case FisherMethod::measurement_cfi: return "measurement_cfi";
  }
  return "unknown";
}

MeasurementDistribution::MeasurementDistribution(std::vector<Outcome> outcomes)
    : outcomes_(std::move(outcomes)) {
  double total = 0;
  for (auto& o : outcomes_) {
    if (!std::isfinite(o.probability) || o.probability < -1e-12) {
      std::ostringstream msg;
      msg << "outcome '" << o.label << "' has invalid probability " << o.probability;
      throw ContractError(msg.str());
    }
    o.probability = std::max(o.probability, 0.0);
    total += o.probability;
  }
  if (std::abs(total - 1) > 1e-12) {
    std::ostringstream msg;
    msg << "outcome probabilities sum to " << total;
    throw ContractError(msg.str());
  }
}

double fidelity(const DensityMatrix& r1, const DensityMatrix& r2) {
  if (r1.dim() != r2.dim()) throw DimensionError("fidelity: dimension mismatch");
  require_density(r1, "fidelity");
  require_density(r2, "fidelity");

  const auto e1 = qmat::hermitian_eig(r1.hermitian_part());
  const auto e2 = qmat::hermitian_eig(r2.hermitian_part());
  auto support = [](const qmat::EigenDecomposition& e) {
    const double floor = 1e-13 * std::max(e.values.back(), 0.0);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < e.values.size(); ++i)
      if (e.values[i] > floor) idx.push_back(i);
    return idx;
  };
  const auto s1 = support(e1);
  const auto s2 = support(e2);
  const bool first = s1.size() <= s2.size();
  const auto& e = first ? e1 : e2;
  const auto& idx = first ? s1 : s2;
  const DensityMatrix& other = first ? r2 : r1;

  // √ρ_a ρ_b √ρ_a restricted to supp ρ_a, in the eigenbasis of ρ_a.
  const std::size_t k = idx.size();
  std::vector<CVector> vecs;
  std::vector<double> roots;
  for (std::size_t i : idx) {
    vecs.push_back(e.vectors.column(i));
    roots.push_back(std::sqrt(e.values[i]));
  }
  double value = 0;
  if (k == 1) {
    value = std::sqrt(std::max(e.values[idx[0]] * qmat::expectation(vecs[0], other).real(), 0.0));
  } else {
    CMatrix m(k);
    for (std::size_t i = 0; i < k; ++i) {
      const CVector ov = other * vecs[i];
      for (std::size_t j = 0; j < k; ++j)
        m(j, i) = roots[i] * roots[j] * qmat::inner(vecs[j], ov);
    }
    const auto em = qmat::hermitian_eig(m.hermitian_part());
    for (double mu : em.values) value += std::sqrt(std::max(mu, 0.0));
  }
  return value;
}

double fidelity_qubit(const DensityMatrix& r1, const DensityMatrix& r2) {
  if (r1.dim() != 2 || r2.dim() != 2) throw DimensionError("fidelity_qubit expects qubit states");
  auto det = [](const DensityMatrix& r) {
    return std::max((r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0)).real(), 0.0);
  };
  return (r1 * r2).trace().real() + 2 * std::sqrt(det(r1) * det(r2));
}

CMatrix sld(const DensityMatrix& rho, const CMatrix& drho, double kernel_tol) {
  if (rho.dim() != drho.dim()) throw DimensionError("sld: dimension mismatch");
  if (!drho.is_hermitian(1e-8)) throw ContractError("sld: derivative is not Hermitian");
  if (std::abs(drho.trace()) > 1e-8) throw ContractError("sld: derivative is not traceless");

  const auto e = qmat::hermitian_eig(rho.hermitian_part());
  if (kernel_tol < 0) kernel_tol = 1e-12 * std::max(e.values.back(), 0.0);
  const CMatrix d = e.vectors.adjoint() * drho * e.vectors;
  const std::size_t n = rho.dim();
  CMatrix l(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double sum = e.values[i] + e.values[j];
      if (sum > kernel_tol) l(i, j) = 2.0 * d(i, j) / sum;
    }
  return (e.vectors * l * e.vectors.adjoint()).hermitian_part();
}

FisherResult qfi_sld(const DensityMatrix& rho, const CMatrix& drho, double kernel_tol) {
  const CMatrix l = sld(rho, drho, kernel_tol);
  const double value = (rho * l * l).trace().real();
  return {std::max(value, 0.0), FisherMethod::sld, {}};
}

CMatrix state_derivative(const StateMap& state_map, double x, double delta) {
  if (!(delta > 0)) throw DomainError("finite-difference step must be positive");
  auto central = [&](double h) {
    CMatrix d = state_map(x + h) - state_map(x - h);
    d *= 1 / (2 * h);
    return d;
  };
  const CMatrix d1 = central(delta);
  const CMatrix d2 = central(delta / 2);
  const double scale = std::max(d1.max_abs(), 1.0);
  if (qmat::max_abs_diff(d1, d2) > 1e-6 * scale) {
    std::ostringstream msg;
    msg << "state derivative not converged: steps " << delta << " and " << delta / 2
        << " differ by " << qmat::max_abs_diff(d1, d2);
    throw NumericError(msg.str());
  }
  return d1.hermitian_part();
}

FisherResult qfi_sld_family(const StateMap& state_map, double x, double delta) {
  const DensityMatrix rho = state_map(x);
  CMatrix drho = state_derivative(state_map, x, delta);
  // Remove the trace the integrator may leak into the difference quotient.
  const complex tr = drho.trace() / static_cast<double>(drho.dim());
  drho -= tr * CMatrix::identity(drho.dim());
  FisherResult result = qfi_sld(rho, drho);

  // Where the family changes rank (e.g. a pure state that becomes mixed at
  // second order) Tr(ρL²) misses the Bures metric by 2Σ ∂²λ_i over the
  // kernel eigenvalues; second-order perturbation theory gives
  // ∂²λ_i = <i|∂²ρ|i> - 2Σ_{λ_k>0} |<i|∂ρ|k>|²/λ_k.
  const auto e = qmat::hermitian_eig(rho.hermitian_part());
  const double kernel_tol = 1e-12 * std::max(e.values.back(), 0.0);
  std::vector<std::size_t> kernel;
  for (std::size_t i = 0; i < e.values.size(); ++i)
    if (e.values[i] <= kernel_tol) kernel.push_back(i);
  if (kernel.empty()) return result;

  const double h = std::max(delta * 10, 1e-4);
  CMatrix curvature = state_map(x + h) + state_map(x - h) - 2.0 * rho;
  curvature *= 1 / (h * h);
  const CMatrix d = e.vectors.adjoint() * drho * e.vectors;
  const CMatrix c = e.vectors.adjoint() * curvature.hermitian_part() * e.vectors;
  double correction = 0;
  for (std::size_t i : kernel) {
    double second = c(i, i).real();
    for (std::size_t k = 0; k < e.values.size(); ++k)
      if (e.values[k] > kernel_tol) second -= 2 * std::norm(d(i, k)) / e.values[k];
    correction += 2 * second;
  }
  result.value = std::max(result.value + correction, 0.0);
  return result;
}

FisherResult qfi_fidelity_fd(const StateMap& state_map, double x, double delta) {
  if (!(delta > 0)) throw DomainError("finite-difference step must be positive");
  const double f = fidelity(state_map(x), state_map(x + delta));
  if (f > 1 + 1e-8) {
    std::ostringstream msg;
    msg << "fidelity " << f << " exceeds 1";
    throw NumericError(msg.str());
  }
  const double value = 8 * (1 - std::min(f, 1.0)) / (delta * delta);
  return {std::max(value, 0.0), FisherMethod::fidelity_fd, {}};
}

FisherResult cfi(const DistributionMap& dist_map, double x, double delta) {
  if (!(delta > 0)) throw DomainError("finite-difference step must be positive");
  const auto p = dist_map(x);
  const auto up = dist_map(x + delta);
  const auto down = dist_map(x - delta);
  if (up.size() != p.size() || down.size() != p.size())
    throw DimensionError("cfi: outcome count changes with the parameter");
  double value = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.probability(i) < 1e-14) continue;
    const double dp = (up.probability(i) - down.probability(i)) / (2 * delta);
    value += dp * dp / p.probability(i);
  }
  return {value, FisherMethod::measurement_cfi, {}};
}

MeasurementDistribution born_distribution(const DensityMatrix& rho,
                                          const std::vector<CVector>& basis,
                                          const std::vector<std::string>& labels) {
  if (basis.size() != rho.dim()) throw DimensionError("born_distribution: basis is incomplete");
  if (!labels.empty() && labels.size() != basis.size())
    throw DimensionError("born_distribution: label count mismatch");
  std::vector<Outcome> outcomes;
  double total = 0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double p = qmat::expectation(basis[i], rho).real();
    total += p;
    outcomes.push_back({labels.empty() ? std::to_string(i) : labels[i], p});
  }
  if (std::abs(total - 1) > 1e-8) throw ContractError("born_distribution: state trace != 1");
  for (auto& o : outcomes) o.probability /= total;
  return MeasurementDistribution(std::move(outcomes));
}

std::vector<CVector> bell_basis() {
  const double r = 1 / std::sqrt(2.0);
  return {CVector{r, 0.0, 0.0, r}, CVector{r, 0.0, 0.0, -r}, CVector{0.0, r, r, 0.0},
          CVector{0.0, -r, r, 0.0}};
}

MeasurementDistribution b_trajectory_distribution(double B, double gamma, double t,
                                                  double beta) {
  require_rate(gamma);
  require_time(t);
  const double p1 = 0.5 * (1 + std::exp(-2 * gamma * t) * std::cos(2 * B * t + 2 * beta));
  return MeasurementDistribution({{"1", p1}, {"2", 1 - p1}});
}

double CodeCoherence::minus_probability() const {
  const double a = decay();
  const double b = phase();
  const double s = std::sin(b / 2);
  return 0.5 * (-std::expm1(-a) + std::exp(-a) * 2 * s * s);
}

double CodeCoherence::plus_probability() const {
  return 0.5 * (1 + std::exp(-decay()) * std::cos(phase()));
}

double CodeCoherence::measurement_cfi() const {
  const double a = decay();
  const double b = phase();
  const double half = sinc(b / 2);
  // p_-/u² and (∂p_-/∂x)/u, both finite at u = 0.
  const double minus_scaled =
      0.5 * (a_hat * relative_decay(a) + std::exp(-a) * 0.5 * b_hat * b_hat * half * half);
  const double slope = 0.5 * std::exp(-a) * (a_dot * std::cos(b) + b_dot * b_hat * sinc(b));
  double value = 0;
  if (minus_scaled > 0) value += slope * slope / minus_scaled;
  const double plus = plus_probability();
  if (plus >= 1e-14) value += u * u * slope * slope / plus;
  return value;
}

double CodeCoherence::qfi() const {
  const double a = decay();
  double bracket = b_dot * b_dot;
  if (a_hat > 0) bracket += a_dot * a_dot / (2 * a_hat * relative_decay(2 * a));
  return std::exp(-2 * a) * bracket;
}

CodeCoherence theta_coherence(double B, double gamma, double t, double dtheta) {
  require_rate(gamma);
  require_time(t);
  const double c = std::cos(dtheta);
  return {std::sin(dtheta), 2 * gamma * t, 2 * B * t, 4 * gamma * t * c, 2 * B * t * c};
}

CodeCoherence omega_coherence(double B, double gamma, double t, double domega) {
  require_rate(gamma);
  require_time(t);
  const double z = domega * t;
  return {z, gamma * t * f_over_z2(z), 2 * B * t * q_over_z(z), gamma * t * t * df_over_z(z),
          2 * B * t * t * dq(z)};
}

FisherResult qfi_theta_free_closed(double B, double gamma, double t) {
  require_rate(gamma);
  require_time(t);
  return closed(2 * (1 - std::exp(-2 * gamma * t) * std::cos(2 * B * t)), B, gamma, t, 0);
}

FisherResult qfi_theta_qec_closed(double B, double gamma, double t, double dtheta) {
  require_rate(gamma);
  require_time(t);
  if (t == 0) return closed(0, B, gamma, t, dtheta);
  const double s = std::sin(dtheta);
  const double c = std::cos(dtheta);
  const double x = 4 * gamma * t * s * s;
  const double value = 4 * t * t * c * c * (B * B * std::exp(-x) + gamma / t * bernoulli_ratio(x));
  return closed(value, B, gamma, t, dtheta);
}

FisherResult qfi_omega_qec_closed(double B, double gamma, double t, double domega) {
  return closed(omega_coherence(B, gamma, t, domega).qfi(), B, gamma, t, domega);
}

FisherResult qfi_theta_unitary_controlled(double B, double t, double dtheta) {
  require_time(t);
  // ½[1 - cos(2Bt√(2-2cos dθ))] rewritten as sin²(2Bt|sin(dθ/2)|) to avoid
  // cancellation near dθ = 0.
  const double y = std::sin(2 * B * t * std::abs(std::sin(dtheta / 2)));
  const double value = 2 * B * B * t * t * (1 + std::cos(dtheta)) + y * y;
  return closed(value, B, std::nan(""), t, dtheta);
}

FisherResult qfi_omega_unitary_controlled(double B, double t, double domega) {
  require_time(t);
  const double t4 = t * t * t * t;
  return closed(B * B * t4 * (1 - t * t * domega * domega / 18), B, std::nan(""), t, domega);
}

FisherResult qfi_B_trajectory_averaged(double t, double gamma) {
  require_rate(gamma);
  require_time(t);
  return closed(4 * t * t * std::exp(-4 * gamma * t), std::nan(""), gamma, t, 0);
}

FisherResult cfi_theta_qec_measurement(double B, double gamma, double t, double dtheta) {
  return {theta_coherence(B, gamma, t, dtheta).measurement_cfi(), FisherMethod::measurement_cfi,
          {B, gamma, t, dtheta}};
}

FisherResult cfi_omega_qec_measurement(double B, double gamma, double t, double domega) {
  return {omega_coherence(B, gamma, t, domega).measurement_cfi(), FisherMethod::measurement_cfi,
          {B, gamma, t, domega}};
}

}  // namespace fluxmet::metrology
