#pragma once

// Dense complex linear algebra for the tiny Hilbert spaces used throughout
// the library (qubit, qubit+ancilla, and small general-engine models).

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fluxmet::qmat {

using complex = std::complex<double>;

inline constexpr std::size_t kMaxDim = 16;

class CVector {
 public:
  CVector() = default;
  explicit CVector(std::size_t dim);
  CVector(std::initializer_list<complex> entries);

  std::size_t dim() const noexcept { return data_.size(); }
  complex& operator[](std::size_t i) { return data_[i]; }
  const complex& operator[](std::size_t i) const { return data_[i]; }

  std::span<const complex> entries() const noexcept { return data_; }

  double norm() const;
  CVector normalized() const;

  CVector& operator+=(const CVector& rhs);
  CVector& operator-=(const CVector& rhs);
  CVector& operator*=(complex s);

  static CVector basis(std::size_t dim, std::size_t index);

 private:
  std::vector<complex> data_;
};

CVector operator+(CVector a, const CVector& b);
CVector operator-(CVector a, const CVector& b);
CVector operator*(complex s, CVector v);

// <a|b>, conjugate-linear in the first argument.
complex inner(const CVector& a, const CVector& b);

// Square complex matrix stored row-major.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(std::size_t dim);
  CMatrix(std::initializer_list<std::initializer_list<complex>> rows);

  static CMatrix identity(std::size_t dim);
  static CMatrix zero(std::size_t dim) { return CMatrix(dim); }
  static CMatrix diagonal(std::span<const double> values);
  // |a><b|
  static CMatrix outer(const CVector& a, const CVector& b);
  static CMatrix projector(const CVector& v) { return outer(v, v); }

  std::size_t dim() const noexcept { return dim_; }
  complex& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  const complex& operator()(std::size_t r, std::size_t c) const {
    return data_[r * dim_ + c];
  }
  std::span<const complex> entries() const noexcept { return data_; }

  CMatrix adjoint() const;
  complex trace() const;
  double max_abs() const;
  bool is_finite() const;
  bool is_hermitian(double tol) const;
  CMatrix hermitian_part() const;
  CVector column(std::size_t c) const;

  CMatrix& operator+=(const CMatrix& rhs);
  CMatrix& operator-=(const CMatrix& rhs);
  CMatrix& operator*=(complex s);

 private:
  std::size_t dim_ = 0;
  std::vector<complex> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator*(complex s, CMatrix a);
CMatrix operator*(CMatrix a, complex s);
CVector operator*(const CMatrix& a, const CVector& v);

double max_abs_diff(const CMatrix& a, const CMatrix& b);
double max_abs_diff(const CVector& a, const CVector& b);

CMatrix commutator(const CMatrix& a, const CMatrix& b);
CMatrix anticommutator(const CMatrix& a, const CMatrix& b);
// <v|A|v>
complex expectation(const CVector& v, const CMatrix& a);

// Density matrices share the CMatrix representation; validity is checked
// at API boundaries with check_density_matrix.
using DensityMatrix = CMatrix;

// Throws ContractError unless rho is Hermitian, unit trace, and has no
// eigenvalue below -tol.
void check_density_matrix(const DensityMatrix& rho, double tol = 1e-8);

namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
}  // namespace pauli

// Kronecker product; throws DimensionError past kMaxDim.
CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron(const CVector& a, const CVector& b);

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // column i pairs with values[i]
};

// Cyclic complex Jacobi rotations. Throws ContractError if h is not
// Hermitian within 1e-10.
EigenDecomposition hermitian_eig(const CMatrix& h);

// Scaling and squaring around a truncated Taylor series.
CMatrix expm(const CMatrix& a);

// Principal square root of a PSD matrix. Eigenvalues above -1e-8 are
// clamped to zero; anything more negative raises NotPsdError.
CMatrix sqrtm_psd(const CMatrix& rho);

enum class Subsystem { first, second };

// Reduced state of a two-qubit (dim 4) operator, keeping the named factor.
CMatrix partial_trace(const CMatrix& rho, Subsystem keep);

struct PolarIsometry {
  CMatrix isometry;  // u with u·Π_C = m / scale; zero off the code space
  double scale = 0;  // sqrt of the isotropic factor in m†m = scale²·Π_C
  bool degenerate = false;
};

// Splits an operator m supported on a code space into scale·u·Π_C with u
// acting isometrically on the code. Throws NonIsotropicError when m†m is
// not a multiple of the projector within tol.
PolarIsometry polar_isometry(const CMatrix& m, const CMatrix& code_projector,
                             double tol);

}  // namespace fluxmet::qmat
