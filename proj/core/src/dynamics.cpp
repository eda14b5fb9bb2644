#include "fluxmet/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "fluxmet/errors.hpp"

namespace fluxmet::dynamics {

using qmat::complex;
using namespace std::complex_literals;

namespace {

void require_rate(double gamma) {
  if (!(gamma >= 0)) throw DomainError("fluctuation rate gamma must be >= 0");
}

// exp(-i φ σ) for a Pauli-vector operator σ with σ² = I.
CMatrix pauli_rotation(double phi, const CMatrix& sigma) {
  return std::cos(phi) * CMatrix::identity(sigma.dim()) - 1i * std::sin(phi) * sigma;
}

}  // namespace

CMatrix LindbladModel::generator(const CMatrix& rho, double t) const {
  const CMatrix h = hamiltonian(t);
  CMatrix out = -1i * qmat::commutator(h, rho);
  for (const auto& lindblad : lindblads) {
    const CMatrix e = lindblad(t);
    const CMatrix ed = e.adjoint();
    out += e * rho * ed;
    out -= 0.5 * qmat::anticommutator(ed * e, rho);
  }
  return out;
}

LindbladModel LindbladModel::constant(CMatrix hamiltonian, std::vector<CMatrix> lindblads,
                                      std::optional<ParameterDerivatives> derivatives) {
  LindbladModel model;
  model.dim = hamiltonian.dim();
  for (const auto& e : lindblads)
    if (e.dim() != model.dim) throw DimensionError("Lindblad operator dimension mismatch");
  if (derivatives) {
    if (derivatives->d_lindblads.size() != lindblads.size() ||
        derivatives->dd_lindblads.size() != lindblads.size())
      throw DimensionError("derivative lists must match the Lindblad operator count");
  }
  model.hamiltonian = [h = std::move(hamiltonian)](double) { return h; };
  for (auto& e : lindblads) model.lindblads.push_back([e](double) { return e; });
  model.derivatives = std::move(derivatives);
  return model;
}

CMatrix sigma_theta(double theta) {
  return std::cos(theta) * qmat::pauli::x() + std::sin(theta) * qmat::pauli::z();
}

CMatrix sigma_omega(double omega, double t) {
  return std::cos(omega * t) * qmat::pauli::x() - std::sin(omega * t) * qmat::pauli::y();
}

CMatrix on_probe(const CMatrix& a) { return qmat::kron(a, qmat::pauli::identity()); }

CVector bell_state() {
  const double r = 1 / std::sqrt(2.0);
  return CVector{r, 0.0, 0.0, r};
}

LindbladModel theta_model(double B, double gamma, double theta) {
  require_rate(gamma);
  const double rg = std::sqrt(gamma);
  const CMatrix sn = on_probe(sigma_theta(theta));
  // ∂σ_n(θ)/∂θ = -sin θ σ1 + cos θ σ3
  const CMatrix dsn = on_probe(-std::sin(theta) * qmat::pauli::x() +
                               std::cos(theta) * qmat::pauli::z());

  LindbladModel model;
  model.dim = 4;
  model.hamiltonian = [h = complex(B) * sn](double) { return h; };
  model.lindblads.push_back([e = complex(rg) * sn](double) { return e; });
  model.hamiltonian_derivative = [dh = complex(B) * dsn](double) { return dh; };
  model.derivatives = ParameterDerivatives{
      complex(B) * dsn,
      {complex(rg) * dsn},
      complex(-B) * sn,
      {complex(-rg) * sn},
  };
  return model;
}

LindbladModel omega_model(double B, double gamma, double omega) {
  require_rate(gamma);
  const double rg = std::sqrt(gamma);
  LindbladModel model;
  model.dim = 4;
  model.hamiltonian = [=](double t) { return complex(B) * on_probe(sigma_omega(omega, t)); };
  model.lindblads.push_back(
      [=](double t) { return complex(rg) * on_probe(sigma_omega(omega, t)); });
  model.hamiltonian_derivative = [=](double t) {
    const CMatrix d = std::sin(omega * t) * qmat::pauli::x() +
                      std::cos(omega * t) * qmat::pauli::y();
    return complex(-B * t) * on_probe(d);
  };
  return model;
}

CMatrix rk4_step(const LindbladModel& model, const CMatrix& rho, double t, double h) {
  const CMatrix k1 = model.generator(rho, t);
  const CMatrix k2 = model.generator(rho + (h / 2) * k1, t + h / 2);
  const CMatrix k3 = model.generator(rho + (h / 2) * k2, t + h / 2);
  const CMatrix k4 = model.generator(rho + h * k3, t + h);
  return rho + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

DensityMatrix lindblad_evolve(const LindbladModel& model, const DensityMatrix& rho0,
                              double t, double dt) {
  if (!(dt > 0)) throw StepError("time step must be positive");
  if (!(t >= 0)) throw DomainError("evolution time must be >= 0");
  if (rho0.dim() != model.dim) throw DimensionError("initial state does not match model");
  qmat::check_density_matrix(rho0);
  if (t == 0) return rho0;
  if (dt > t) {
    std::ostringstream msg;
    msg << "time step " << dt << " exceeds evolution time " << t;
    throw StepError(msg.str());
  }

  const auto steps = static_cast<long>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  CMatrix rho = rho0;
  for (long k = 0; k < steps; ++k) {
    rho = rk4_step(model, rho, static_cast<double>(k) * h, h).hermitian_part();
  }
  const double drift = std::abs(rho.trace() - 1.0);
  if (drift > 1e-6) {
    std::ostringstream msg;
    msg << "trace drifted by " << drift << " during integration";
    throw InstabilityError(msg.str());
  }
  return rho;
}

DensityMatrix lindblad_evolve_converged(const LindbladModel& model,
                                        const DensityMatrix& rho0, double t, double dt,
                                        double tol) {
  DensityMatrix coarse = lindblad_evolve(model, rho0, t, std::min(dt, t > 0 ? t : dt));
  for (int halvings = 0; halvings < 12 && t > 0; ++halvings) {
    dt /= 2;
    DensityMatrix fine = lindblad_evolve(model, rho0, t, dt);
    const double change = qmat::max_abs_diff(coarse, fine);
    coarse = std::move(fine);
    if (change < tol) return coarse;
  }
  if (t == 0) return coarse;
  throw InstabilityError("step halving did not converge");
}

TrajectoryPhase sample_phase(double B, double gamma, double t, Rng& rng) {
  require_rate(gamma);
  if (!(t >= 0)) throw DomainError("trajectory time must be >= 0");
  TrajectoryPhase phase{B * t, t};
  if (gamma > 0 && t > 0) {
    std::normal_distribution<double> normal(0.0, std::sqrt(gamma * t));
    phase.phi += normal(rng);
  }
  return phase;
}

CVector phase_trajectory_state(const TrajectoryPhase& phase, double theta,
                               const CVector& psi0) {
  CMatrix u = pauli_rotation(phase.phi, sigma_theta(theta));
  if (psi0.dim() == 4) u = on_probe(u);
  return u * psi0;
}

CVector omega_trajectory(double B, double gamma, double omega, double t, double dt,
                         const CVector& psi0, Rng& rng) {
  require_rate(gamma);
  if (!(dt > 0)) throw StepError("time step must be positive");
  if (!(t >= 0)) throw DomainError("trajectory time must be >= 0");
  if (t == 0) return psi0;
  const auto steps = static_cast<long>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  const double noise_scale = std::sqrt(gamma * h);
  std::normal_distribution<double> normal(0.0, 1.0);

  CVector psi = psi0;
  for (long k = 0; k < steps; ++k) {
    const double mid = (static_cast<double>(k) + 0.5) * h;
    const double increment = B * h + (gamma > 0 ? noise_scale * normal(rng) : 0.0);
    CMatrix u = pauli_rotation(increment, sigma_omega(omega, mid));
    if (psi.dim() == 4) u = on_probe(u);
    psi = u * psi;
  }
  return psi;
}

KrausPair dephasing_kraus(double B, double gamma, double t, double theta) {
  require_rate(gamma);
  if (!(t >= 0)) throw DomainError("channel time must be >= 0");
  const double eta = std::exp(-2 * gamma * t);
  const CMatrix sn = sigma_theta(theta);
  const CMatrix u = pauli_rotation(B * t, sn);
  return {std::sqrt((1 + eta) / 2) * u, std::sqrt((1 - eta) / 2) * (sn * u)};
}

DensityMatrix apply_probe_channel(const KrausPair& kraus, const DensityMatrix& rho) {
  if (rho.dim() != 4) throw DimensionError("probe channel expects a probe+ancilla state");
  const CMatrix k1 = on_probe(kraus.k1);
  const CMatrix k2 = on_probe(kraus.k2);
  return k1 * rho * k1.adjoint() + k2 * rho * k2.adjoint();
}

}  // namespace fluxmet::dynamics
