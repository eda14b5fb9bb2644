#include "fluxmet/qmat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fluxmet/errors.hpp"

namespace fluxmet::qmat {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionError(msg.str());
  }
}

void require_dim(std::size_t dim) {
  if (dim == 0 || dim > kMaxDim) {
    std::ostringstream msg;
    msg << "matrix dimension " << dim << " outside [1, " << kMaxDim << "]";
    throw DimensionError(msg.str());
  }
}

}  // namespace

// --- CVector -------------------------------------------------------------

CVector::CVector(std::size_t dim) : data_(dim) { require_dim(dim); }

CVector::CVector(std::initializer_list<complex> entries) : data_(entries) {
  require_dim(data_.size());
}

double CVector::norm() const {
  double sum = 0;
  for (const auto& z : data_) sum += std::norm(z);
  return std::sqrt(sum);
}

CVector CVector::normalized() const {
  const double n = norm();
  if (n == 0) throw DomainError("cannot normalize the zero vector");
  CVector out = *this;
  out *= 1.0 / n;
  return out;
}

CVector& CVector::operator+=(const CVector& rhs) {
  require_same_dim(dim(), rhs.dim(), "vector +");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

CVector& CVector::operator-=(const CVector& rhs) {
  require_same_dim(dim(), rhs.dim(), "vector -");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

CVector& CVector::operator*=(complex s) {
  for (auto& z : data_) z *= s;
  return *this;
}

CVector CVector::basis(std::size_t dim, std::size_t index) {
  CVector v(dim);
  v[index] = 1.0;
  return v;
}

CVector operator+(CVector a, const CVector& b) { return a += b; }
CVector operator-(CVector a, const CVector& b) { return a -= b; }
CVector operator*(complex s, CVector v) { return v *= s; }

complex inner(const CVector& a, const CVector& b) {
  require_same_dim(a.dim(), b.dim(), "inner");
  complex sum = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += std::conj(a[i]) * b[i];
  return sum;
}

// --- CMatrix -------------------------------------------------------------

CMatrix::CMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) { require_dim(dim); }

CMatrix::CMatrix(std::initializer_list<std::initializer_list<complex>> rows)
    : dim_(rows.size()) {
  require_dim(dim_);
  data_.reserve(dim_ * dim_);
  for (const auto& row : rows) {
    if (row.size() != dim_) throw DimensionError("matrix rows must form a square");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

CMatrix CMatrix::identity(std::size_t dim) {
  CMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::diagonal(std::span<const double> values) {
  CMatrix m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

CMatrix CMatrix::outer(const CVector& a, const CVector& b) {
  require_same_dim(a.dim(), b.dim(), "outer");
  CMatrix m(a.dim());
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) m(r, c) = a[r] * std::conj(b[c]);
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(dim_);
  for (std::size_t r = 0; r < dim_; ++r)
    for (std::size_t c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

complex CMatrix::trace() const {
  complex sum = 0;
  for (std::size_t i = 0; i < dim_; ++i) sum += (*this)(i, i);
  return sum;
}

double CMatrix::max_abs() const {
  double m = 0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

bool CMatrix::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const complex& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

bool CMatrix::is_hermitian(double tol) const {
  for (std::size_t r = 0; r < dim_; ++r)
    for (std::size_t c = r; c < dim_; ++c)
      if (std::abs((*this)(r, c) - std::conj((*this)(c, r))) > tol) return false;
  return true;
}

CMatrix CMatrix::hermitian_part() const {
  CMatrix out(dim_);
  for (std::size_t r = 0; r < dim_; ++r)
    for (std::size_t c = 0; c < dim_; ++c)
      out(r, c) = 0.5 * ((*this)(r, c) + std::conj((*this)(c, r)));
  return out;
}

CVector CMatrix::column(std::size_t c) const {
  CVector v(dim_);
  for (std::size_t r = 0; r < dim_; ++r) v[r] = (*this)(r, c);
  return v;
}

CMatrix& CMatrix::operator+=(const CMatrix& rhs) {
  require_same_dim(dim_, rhs.dim_, "matrix +");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& rhs) {
  require_same_dim(dim_, rhs.dim_, "matrix -");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

CMatrix& CMatrix::operator*=(complex s) {
  for (auto& z : data_) z *= s;
  return *this;
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator-(CMatrix a) { return a *= -1.0; }
CMatrix operator*(complex s, CMatrix a) { return a *= s; }
CMatrix operator*(CMatrix a, complex s) { return a *= s; }

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  require_same_dim(a.dim(), b.dim(), "matrix *");
  const std::size_t n = a.dim();
  CMatrix out(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k) {
      const complex ark = a(r, k);
      if (ark == complex{}) continue;
      for (std::size_t c = 0; c < n; ++c) out(r, c) += ark * b(k, c);
    }
  return out;
}

CVector operator*(const CMatrix& a, const CVector& v) {
  require_same_dim(a.dim(), v.dim(), "matrix-vector *");
  CVector out(v.dim());
  for (std::size_t r = 0; r < a.dim(); ++r) {
    complex sum = 0;
    for (std::size_t c = 0; c < a.dim(); ++c) sum += a(r, c) * v[c];
    out[r] = sum;
  }
  return out;
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  require_same_dim(a.dim(), b.dim(), "max_abs_diff");
  double m = 0;
  for (std::size_t i = 0; i < a.entries().size(); ++i)
    m = std::max(m, std::abs(a.entries()[i] - b.entries()[i]));
  return m;
}

double max_abs_diff(const CVector& a, const CVector& b) {
  require_same_dim(a.dim(), b.dim(), "max_abs_diff");
  double m = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }
CMatrix anticommutator(const CMatrix& a, const CMatrix& b) { return a * b + b * a; }

complex expectation(const CVector& v, const CMatrix& a) { return inner(v, a * v); }

void check_density_matrix(const DensityMatrix& rho, double tol) {
  if (!rho.is_finite()) throw ContractError("density matrix has non-finite entries");
  if (!rho.is_hermitian(tol)) throw ContractError("density matrix is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > tol) throw ContractError("density matrix trace != 1");
  const auto eig = hermitian_eig(rho.hermitian_part());
  if (eig.values.front() < -tol) throw ContractError("density matrix is not PSD");
}

namespace pauli {
using namespace std::complex_literals;
CMatrix identity() { return CMatrix::identity(2); }
CMatrix x() { return CMatrix{{0.0, 1.0}, {1.0, 0.0}}; }
CMatrix y() { return CMatrix{{0.0, -1i}, {1i, 0.0}}; }
CMatrix z() { return CMatrix{{1.0, 0.0}, {0.0, -1.0}}; }
}  // namespace pauli

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  const std::size_t n = a.dim() * b.dim();
  if (n > kMaxDim) throw DimensionError("kron: result dimension exceeds 16");
  CMatrix out(n);
  for (std::size_t ar = 0; ar < a.dim(); ++ar)
    for (std::size_t ac = 0; ac < a.dim(); ++ac) {
      const complex s = a(ar, ac);
      for (std::size_t br = 0; br < b.dim(); ++br)
        for (std::size_t bc = 0; bc < b.dim(); ++bc)
          out(ar * b.dim() + br, ac * b.dim() + bc) = s * b(br, bc);
    }
  return out;
}

CVector kron(const CVector& a, const CVector& b) {
  const std::size_t n = a.dim() * b.dim();
  if (n > kMaxDim) throw DimensionError("kron: result dimension exceeds 16");
  CVector out(n);
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) out[i * b.dim() + j] = a[i] * b[j];
  return out;
}

EigenDecomposition hermitian_eig(const CMatrix& h) {
  const std::size_t n = h.dim();
  if (!h.is_finite()) throw ContractError("hermitian_eig: non-finite input");
  if (!h.is_hermitian(1e-10)) throw ContractError("hermitian_eig: input is not Hermitian");

  CMatrix a = h.hermitian_part();
  CMatrix v = CMatrix::identity(n);

  double scale = 0;
  for (const auto& z : a.entries()) scale += std::norm(z);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off <= 1e-32 * scale || off == 0) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0) continue;
        const complex phase = std::conj(apq) / mag;  // e^{-i arg a_pq}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2 * mag);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;

        // Rotation J = diag-phase · real Givens, restricted to (p, q).
        const complex jpp = c, jpq = s, jqp = -s * phase, jqq = c * phase;

        for (std::size_t k = 0; k < n; ++k) {
          const complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = 0;
        a(q, p) = 0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * jpp + vkq * jqp;
          v(k, q) = vkp * jpq + vkq * jqq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i).real() < a(j, j).real();
  });

  EigenDecomposition out{std::vector<double>(n), CMatrix(n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]).real();
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

CMatrix expm(const CMatrix& a) {
  if (!a.is_finite()) throw DomainError("expm: non-finite input");
  const std::size_t n = a.dim();

  double norm1 = 0;
  for (std::size_t c = 0; c < n; ++c) {
    double col = 0;
    for (std::size_t r = 0; r < n; ++r) col += std::abs(a(r, c));
    norm1 = std::max(norm1, col);
  }
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const CMatrix x = std::ldexp(1.0, -squarings) * a;

  CMatrix result = CMatrix::identity(n);
  CMatrix term = CMatrix::identity(n);
  for (int k = 1; k <= 30; ++k) {
    term = (term * x) * complex(1.0 / k);
    result += term;
    if (term.max_abs() < 1e-18 * result.max_abs()) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

CMatrix sqrtm_psd(const CMatrix& rho) {
  const auto eig = hermitian_eig(rho);
  if (eig.values.front() < -1e-8) {
    std::ostringstream msg;
    msg << "sqrtm_psd: eigenvalue " << eig.values.front() << " below -1e-8";
    throw NotPsdError(msg.str());
  }
  const std::size_t n = rho.dim();
  // Eigenvalues at roundoff level are zeros of the exact spectrum; taking
  // their square root would amplify 1e-17 noise to 1e-9.
  const double floor = 64 * std::numeric_limits<double>::epsilon() *
                       std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
  CMatrix out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double value = eig.values[k] <= floor ? 0.0 : eig.values[k];
    const double root = std::sqrt(value);
    if (root == 0) continue;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        out(r, c) += root * eig.vectors(r, k) * std::conj(eig.vectors(c, k));
  }
  return out;
}

CMatrix partial_trace(const CMatrix& rho, Subsystem keep) {
  if (rho.dim() != 4) throw DimensionError("partial_trace expects a two-qubit operator");
  CMatrix out(2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        if (keep == Subsystem::first)
          out(i, j) += rho(2 * i + k, 2 * j + k);
        else
          out(i, j) += rho(2 * k + i, 2 * k + j);
      }
  return out;
}

PolarIsometry polar_isometry(const CMatrix& m, const CMatrix& code_projector, double tol) {
  require_same_dim(m.dim(), code_projector.dim(), "polar_isometry");
  const double rank = code_projector.trace().real();
  if (rank < 0.5) throw DomainError("polar_isometry: empty code projector");

  const CMatrix gram = m.adjoint() * m;
  const double scale2 = gram.trace().real() / rank;
  const double residual = max_abs_diff(gram, complex(scale2) * code_projector);
  if (residual > tol) {
    std::ostringstream msg;
    msg << "polar_isometry: m†m deviates from a multiple of the code projector by "
        << residual << " (tol " << tol << ")";
    throw NonIsotropicError(msg.str());
  }

  const double scale = std::sqrt(std::max(scale2, 0.0));
  if (scale <= tol) return {CMatrix::zero(m.dim()), 0.0, true};
  return {m * complex(1.0 / scale), scale, false};
}

}  // namespace fluxmet::qmat
