#include "fluxmet/qec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fluxmet/errors.hpp"

namespace fluxmet::qec {

using namespace std::complex_literals;
using dynamics::LindbladModel;

namespace {

struct Cadence {
  long intervals = 0;
  long substeps = 0;
  double h = 0;
};

Cadence plan_cadence(double t, double dt, long n_recoveries) {
  if (!(dt > 0)) throw StepError("time step must be positive");
  if (!(t >= 0)) throw DomainError("evolution time must be >= 0");
  if (n_recoveries < 0) throw DomainError("recovery count must be >= 0");
  if (t == 0) return {};
  if (n_recoveries == 0) {
    const auto n = std::max(1L, static_cast<long>(std::ceil(t / dt - 1e-9)));
    return {n, 1, t / static_cast<double>(n)};
  }
  const double interval = t / static_cast<double>(n_recoveries);
  const long substeps = std::lround(interval / dt);
  if (substeps < 1 ||
      std::abs(static_cast<double>(substeps) * dt - interval) > 1e-9 * std::max(interval, dt)) {
    std::ostringstream msg;
    msg << "time step " << dt << " does not divide the recovery interval " << interval;
    throw StepError(msg.str());
  }
  return {n_recoveries, substeps, interval / static_cast<double>(substeps)};
}

CMatrix evolve_interval(const LindbladModel& model, CMatrix rho, double t0, const Cadence& c) {
  for (long k = 0; k < c.substeps; ++k)
    rho = dynamics::rk4_step(model, rho, t0 + static_cast<double>(k) * c.h, c.h).hermitian_part();
  return rho;
}

// exp(iΩ̂tσ3/2) ⊗ I
CMatrix frame_rotation(double omega_hat, double t) {
  const complex phase = std::exp(1i * (omega_hat * t / 2));
  const CMatrix v{{phase, 0.0}, {0.0, std::conj(phase)}};
  return dynamics::on_probe(v);
}

// ½(|C0><C0| + |C1><C1|) + ½e^{-a-ib}|C0><C1| + h.c.
DensityMatrix code_qubit_state(const CVector& c0, const CVector& c1,
                               const metrology::CodeCoherence& coh) {
  const complex coherence = 0.5 * std::exp(complex(-coh.decay(), -coh.phase()));
  CMatrix rho = 0.5 * (CMatrix::projector(c0) + CMatrix::projector(c1));
  const CMatrix up = CMatrix::outer(c0, c1);
  rho += coherence * up;
  rho += std::conj(coherence) * up.adjoint();
  return rho;
}

double code_rank(const CMatrix& projector) { return projector.trace().real(); }

QecConditions conditions_for(const std::vector<CMatrix>& ops, const CMatrix& p) {
  const double rank = code_rank(p);
  const std::size_t m = ops.size();
  QecConditions out;
  out.beta = CMatrix(m);
  out.beta_residuals.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t k = 0; k < m; ++k) {
    const CMatrix pep = p * ops[k] * p;
    const complex alpha = pep.trace() / rank;
    out.alpha.push_back(alpha);
    const double residual = qmat::max_abs_diff(pep, alpha * p);
    out.alpha_residuals.push_back(residual);
    out.max_residual = std::max(out.max_residual, residual);
  }
  for (std::size_t k = 0; k < m; ++k) {
    const CMatrix ekd = ops[k].adjoint();
    for (std::size_t j = 0; j < m; ++j) {
      const CMatrix block = p * ekd * ops[j] * p;
      const complex beta = block.trace() / rank;
      out.beta(k, j) = beta;
      const double residual = qmat::max_abs_diff(block, beta * p);
      out.beta_residuals[k][j] = residual;
      out.max_residual = std::max(out.max_residual, residual);
    }
  }
  for (std::size_t k = 0; k < m; ++k)
    out.d.push_back(out.beta(k, k).real() - std::norm(out.alpha[k]));
  return out;
}

void require_code_matches(const LindbladModel& model, const QecCode& code, double t) {
  if (code.dim != model.dim) throw DimensionError("code dimension does not match the model");
  const CVector c0 = code.c0(t);
  const CVector c1 = code.c1(t);
  if (std::abs(qmat::inner(c0, c1)) > 1e-10 || std::abs(c0.norm() - 1) > 1e-10 ||
      std::abs(c1.norm() - 1) > 1e-10)
    throw ContractError("code basis is not orthonormal");
}

std::vector<CMatrix> mix(const std::vector<CMatrix>& ops, const CMatrix& w) {
  std::vector<CMatrix> out;
  for (std::size_t l = 0; l < ops.size(); ++l) {
    CMatrix f(ops.front().dim());
    for (std::size_t k = 0; k < ops.size(); ++k) f += w(k, l) * ops[k];
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

CMatrix QecCode::projector(double t) const {
  return CMatrix::projector(c0(t)) + CMatrix::projector(c1(t));
}

CMatrix QecCode::sigma_z(double t) const {
  return CMatrix::projector(c0(t)) - CMatrix::projector(c1(t));
}

CMatrix QecCode::sigma_x(double t) const {
  const CMatrix up = CMatrix::outer(c0(t), c1(t));
  return up + up.adjoint();
}

CVector QecCode::logical_plus(double t) const {
  return (1 / std::sqrt(2.0)) * (c0(t) + c1(t));
}

CMatrix QecCode::frame_step(double dt) const {
  if (!frame_generator) return CMatrix::identity(dim);
  return qmat::expm(1i * dt * *frame_generator);
}

QecCode QecCode::fixed(CVector c0, CVector c1) {
  if (c0.dim() != c1.dim()) throw DimensionError("code vectors differ in dimension");
  QecCode code;
  code.dim = c0.dim();
  code.c0 = [c0](double) { return c0; };
  code.c1 = [c1](double) { return c1; };
  const CMatrix p = CMatrix::projector(c0) + CMatrix::projector(c1);
  code.recovery = [p](double) { return std::vector<CMatrix>{p}; };
  return code;
}

SpinPair theta_eigenbasis(double theta_hat) {
  const double c = std::cos(theta_hat / 2);
  const double s = std::sin(theta_hat / 2);
  return {CVector{-c, s}, CVector{s, c}};
}

QecCode theta_code(double theta_hat) {
  const SpinPair spin = theta_eigenbasis(theta_hat);
  QecCode code = QecCode::fixed(qmat::kron(spin.plus, spin.plus),
                                qmat::kron(spin.minus, spin.minus));
  const CMatrix p = code.projector();
  const CMatrix flip = p * dynamics::on_probe(dynamics::sigma_theta(theta_hat));
  code.recovery = [p, flip](double) { return std::vector<CMatrix>{p, flip}; };
  return code;
}

QecCode omega_code(double omega_hat) {
  const double r = 1 / std::sqrt(2.0);
  const CVector y_minus{r, -1i * r};
  const CVector y_plus{r, 1i * r};
  const CVector c0 = qmat::kron(y_minus, CVector::basis(2, 0));
  const CVector c1 = qmat::kron(y_plus, CVector::basis(2, 1));

  QecCode code;
  code.dim = 4;
  code.c0 = [=](double t) { return frame_rotation(omega_hat, t) * c0; };
  code.c1 = [=](double t) { return frame_rotation(omega_hat, t) * c1; };
  code.recovery = [code_c0 = code.c0, code_c1 = code.c1, omega_hat](double t) {
    const CMatrix p = CMatrix::projector(code_c0(t)) + CMatrix::projector(code_c1(t));
    return std::vector<CMatrix>{
        p, p * dynamics::on_probe(dynamics::sigma_omega(omega_hat, t))};
  };
  code.frame_generator = (omega_hat / 2) * dynamics::on_probe(qmat::pauli::z());
  return code;
}

DensityMatrix apply_recovery(const QecCode& code, const DensityMatrix& rho, double t,
                             double leak_tol) {
  if (rho.dim() != code.dim) throw DimensionError("state does not match the code dimension");
  CMatrix out(rho.dim());
  for (const auto& k : code.recovery(t)) out += k * rho * k.adjoint();
  const double loss = (rho.trace() - out.trace()).real();
  if (loss > leak_tol) {
    std::ostringstream msg;
    msg << "recovery lost trace " << loss << " at t = " << t;
    throw LeakageError(msg.str());
  }
  return out.hermitian_part();
}

DensityMatrix corrected_evolve_theta(double B, double gamma, double theta, double theta_hat,
                                     double t, double dt, long n_recoveries) {
  const Cadence cadence = plan_cadence(t, dt, n_recoveries);
  const LindbladModel model = dynamics::theta_model(B, gamma, theta);
  const QecCode code = theta_code(theta_hat);
  CMatrix rho = CMatrix::projector(code.logical_plus());
  for (long i = 0; i < cadence.intervals; ++i) {
    const double t0 = static_cast<double>(i * cadence.substeps) * cadence.h;
    rho = apply_recovery(code, evolve_interval(model, rho, t0, cadence), t0);
  }
  return rho;
}

DensityMatrix corrected_state_theta_closed(double B, double gamma, double theta,
                                           double theta_hat, double t) {
  const QecCode code = theta_code(theta_hat);
  return code_qubit_state(code.c0(0), code.c1(0),
                          metrology::theta_coherence(B, gamma, t, theta - theta_hat));
}

DensityMatrix corrected_evolve_omega(double B, double gamma, double omega, double omega_hat,
                                     double t, double dt, long n_recoveries) {
  const Cadence cadence = plan_cadence(t, dt, n_recoveries);
  const QecCode code = omega_code(omega_hat);
  // The frame rotation Ũ is applied as the continuous control Hamiltonian
  // -K alongside the field, and recovery uses the code at the end of each
  // interval. Snapping the frame once per interval instead leaves an O(dt)
  // phase even at Ω = Ω̂.
  LindbladModel model = dynamics::omega_model(B, gamma, omega);
  model.hamiltonian = [field = model.hamiltonian, k = *code.frame_generator](double t) {
    return field(t) - k;
  };
  CMatrix rho = CMatrix::projector(code.logical_plus(0));
  for (long i = 0; i < cadence.intervals; ++i) {
    const double t0 = static_cast<double>(i * cadence.substeps) * cadence.h;
    const double t1 = static_cast<double>((i + 1) * cadence.substeps) * cadence.h;
    rho = apply_recovery(code, evolve_interval(model, rho, t0, cadence), t1);
  }
  return rho;
}

DensityMatrix corrected_state_omega_closed(double B, double gamma, double omega,
                                           double omega_hat, double t) {
  const QecCode code = omega_code(omega_hat);
  const DensityMatrix rotating = code_qubit_state(
      code.c0(0), code.c1(0), metrology::omega_coherence(B, gamma, t, omega - omega_hat));
  const CMatrix v = frame_rotation(omega_hat, t);
  return v * rotating * v.adjoint();
}

DensityMatrix to_rotating_frame(double omega_hat, const DensityMatrix& rho, double t) {
  if (rho.dim() != 4) throw DimensionError("rotating frame expects a probe+ancilla state");
  const CMatrix v = frame_rotation(omega_hat, t);
  return v.adjoint() * rho * v;
}

QecConditions evaluate_qec_conditions(const LindbladModel& model, const QecCode& code, double t) {
  require_code_matches(model, code, t);
  std::vector<CMatrix> ops;
  for (const auto& e : model.lindblads) ops.push_back(e(t));
  return conditions_for(ops, code.projector(t));
}

QecConditions check_qec_conditions(const LindbladModel& model, const QecCode& code, double tol,
                                   double t) {
  QecConditions c = evaluate_qec_conditions(model, code, t);
  if (c.max_residual <= tol) return c;
  std::ostringstream msg;
  msg << "code violates the error-correction conditions:";
  for (std::size_t k = 0; k < c.alpha.size(); ++k) {
    if (c.alpha_residuals[k] > tol)
      msg << " alpha[" << k << "] residual " << c.alpha_residuals[k] << ";";
    for (std::size_t j = 0; j < c.alpha.size(); ++j)
      if (c.beta_residuals[k][j] > tol)
        msg << " beta[" << k << "][" << j << "] residual " << c.beta_residuals[k][j] << ";";
  }
  throw CodeConditionError(msg.str());
}

CMatrix SecondOrderGenerator::apply(const CMatrix& rho) const {
  CMatrix out = -1i * qmat::commutator(hamiltonian, rho);
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    out += jumps[k] * rho * jumps[k].adjoint();
    out -= 0.5 * qmat::anticommutator(jump_norms[k], rho);
  }
  for (const auto& k : couplings) out += k * rho * k.adjoint();
  return out;
}

GeneralQecReport expansion_superoperators(const LindbladModel& model, const QecCode& code,
                                          const ExpansionOptions& options) {
  if (!model.derivatives) throw ContractError("model lacks parameter derivatives");
  const auto& deriv = *model.derivatives;
  if (deriv.d_lindblads.size() != model.lindblads.size() ||
      deriv.dd_lindblads.size() != model.lindblads.size())
    throw DimensionError("derivative lists must match the Lindblad operator count");
  check_qec_conditions(model, code, options.tol);

  const std::size_t m = model.lindblads.size();
  const std::size_t n = model.dim;
  const CMatrix p = code.projector();
  const CMatrix complement = CMatrix::identity(n) - p;

  std::vector<CMatrix> e;
  for (const auto& op : model.lindblads) e.push_back(op(0));
  std::vector<CMatrix> de = deriv.d_lindblads;
  std::vector<CMatrix> dde = deriv.dd_lindblads;

  GeneralQecReport report;
  report.projector = p;
  report.mixing = CMatrix::identity(std::max<std::size_t>(m, 1));

  if (m > 0) {
    QecConditions c = conditions_for(e, p);
    CMatrix gram(m);
    double off_diagonal = 0;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t j = 0; j < m; ++j) {
        gram(k, j) = c.beta(k, j) - std::conj(c.alpha[k]) * c.alpha[j];
        if (k != j) off_diagonal = std::max(off_diagonal, std::abs(gram(k, j)));
      }
    if (off_diagonal > options.tol) {
      if (!options.orthogonalize) {
        std::ostringstream msg;
        msg << "noise operators are not orthogonal on the code (off-diagonal Gram entry "
            << off_diagonal << ")";
        throw OrthogonalityError(msg.str());
      }
      const auto eig = qmat::hermitian_eig(gram.hermitian_part());
      report.mixing = eig.vectors;
      report.orthogonalized = true;
      e = mix(e, eig.vectors);
      de = mix(de, eig.vectors);
      dde = mix(dde, eig.vectors);
    }
    c = conditions_for(e, p);
    report.alpha = c.alpha;
    report.beta = c.beta;
    report.d = c.d;
  } else {
    report.beta = CMatrix(1);
  }

  // Error isometries M_k = (I - Π_C) E_k Π_C = √d_kk U_k Π_C.
  std::vector<CMatrix> errors;
  for (std::size_t k = 0; k < m; ++k) {
    const bool drop = report.d[k] < options.deg_tol;
    report.dropped.push_back(drop);
    errors.push_back(complement * e[k] * p);
    if (drop) {
      for (std::size_t j = 0; j < m; ++j) {
        const CMatrix coupling =
            p * (e[k].adjoint() * de[j] - std::conj(report.alpha[k]) * de[j]) * p;
        if (coupling.max_abs() > options.tol) {
          std::ostringstream msg;
          msg << "noise operator " << k << " has d_kk = " << report.d[k]
              << " but couples to derivative " << j;
          throw DegenerateError(msg.str());
        }
      }
      report.isometries.push_back(CMatrix(n));
      continue;
    }
    const auto polar = qmat::polar_isometry(errors[k], p, options.tol);
    report.isometries.push_back(polar.isometry);
  }
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < m; ++j) {
      if (k == j || report.dropped[k] || report.dropped[j]) continue;
      const double overlap = (errors[k].adjoint() * errors[j]).max_abs();
      if (overlap > options.tol) {
        std::ostringstream msg;
        msg << "error operators " << k << " and " << j << " overlap by " << overlap;
        throw OrthogonalityError(msg.str());
      }
    }

  const CMatrix h = model.hamiltonian(0);
  report.l0_generator = p * h * p;
  report.control_hamiltonian = -report.l0_generator;

  CMatrix first = deriv.d_hamiltonian;
  CMatrix second = deriv.dd_hamiltonian;
  for (std::size_t k = 0; k < m; ++k) {
    const CMatrix ed = e[k].adjoint();
    first += (0.5i) * (ed * de[k] - de[k].adjoint() * e[k]);
    second += (0.5i) * (ed * dde[k] - dde[k].adjoint() * e[k]);
  }
  report.l1_generator = (p * first * p).hermitian_part();
  report.l2.hamiltonian = (0.5 * (p * second * p)).hermitian_part();
  for (std::size_t k = 0; k < m; ++k) {
    report.l2.jumps.push_back(p * de[k] * p);
    report.l2.jump_norms.push_back(p * de[k].adjoint() * de[k] * p);
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (report.dropped[k]) continue;
    const double inv = 1 / std::sqrt(report.d[k]);
    for (std::size_t j = 0; j < m; ++j) {
      CMatrix coupling = p * (e[k].adjoint() * de[j] - std::conj(report.alpha[k]) * de[j]) * p;
      coupling *= inv;
      report.l2.couplings.push_back(std::move(coupling));
    }
  }
  return report;
}

QecCode with_recovery(const QecCode& code, const GeneralQecReport& report) {
  QecCode out = code;
  std::vector<CMatrix> kraus{report.projector};
  for (std::size_t k = 0; k < report.isometries.size(); ++k)
    if (!report.dropped[k]) kraus.push_back(report.projector * report.isometries[k].adjoint());
  out.recovery = [kraus](double) { return kraus; };
  return out;
}

AsymptoticQfiTerms asymptotic_qfi_terms(const GeneralQecReport& report, const CVector& psi,
                                        double t) {
  if (!(t >= 0)) throw DomainError("evolution time must be >= 0");
  if (psi.dim() != report.projector.dim()) throw DimensionError("probe dimension mismatch");
  if (qmat::max_abs_diff(report.projector * psi, psi) > 1e-8)
    throw DomainError("probe lies outside the code space");
  const CVector v = psi.normalized();
  const CMatrix rho = CMatrix::projector(v);

  AsymptoticQfiTerms terms;
  const double mean = qmat::expectation(v, report.l1_generator).real();
  const double square =
      qmat::expectation(v, report.l1_generator * report.l1_generator).real();
  terms.variance = std::max(square - mean * mean, 0.0);
  terms.l1_expectation =
      qmat::expectation(v, -1i * qmat::commutator(report.l1_generator, rho)).real();
  terms.l2_expectation = qmat::expectation(v, report.l2.apply(rho)).real();
  if (std::abs(terms.l1_expectation) > 1e-10)
    throw NumericError("first-order generator has a nonzero probe expectation");
  terms.value = 4 * t * t * terms.variance - 4 * t * terms.l2_expectation;
  return terms;
}

metrology::FisherResult asymptotic_qfi(const GeneralQecReport& report, const CVector& psi,
                                       double t) {
  const auto terms = asymptotic_qfi_terms(report, psi, t);
  metrology::FisherResult r;
  r.value = std::max(terms.value, 0.0);
  r.method = metrology::FisherMethod::closed_form;
  r.params.t = t;
  return r;
}

DensityMatrix expansion_state(const GeneralQecReport& report, const CVector& psi, double t,
                              double dx, double dt) {
  if (!(dt > 0)) throw StepError("time step must be positive");
  if (!(t >= 0)) throw DomainError("evolution time must be >= 0");
  CMatrix rho = CMatrix::projector(psi.normalized());
  if (t == 0) return rho;
  auto generator = [&](const CMatrix& r) {
    CMatrix out = (-1i * dx) * qmat::commutator(report.l1_generator, r);
    out += (dx * dx) * report.l2.apply(r);
    return out;
  };
  const auto steps = static_cast<long>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  for (long s = 0; s < steps; ++s) {
    const CMatrix k1 = generator(rho);
    const CMatrix k2 = generator(rho + (h / 2) * k1);
    const CMatrix k3 = generator(rho + (h / 2) * k2);
    const CMatrix k4 = generator(rho + h * k3);
    rho = (rho + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).hermitian_part();
  }
  return rho;
}

}  // namespace fluxmet::qec
