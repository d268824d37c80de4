#pragma once

// Dense complex linear algebra sized for small quantum systems (N up to a few
// hundred). Everything is expressed in the energy eigenbasis of the system.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "heatstat/error.hpp"

namespace heatstat {

using Complex = std::complex<double>;

namespace detail {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

template <class T>
inline T conj_if_complex(const T& x) {
  if constexpr (is_complex<T>::value) {
    return std::conj(x);
  } else {
    return x;
  }
}

template <class T>
inline bool is_finite(const T& x) {
  if constexpr (is_complex<T>::value) {
    return std::isfinite(x.real()) && std::isfinite(x.imag());
  } else {
    return std::isfinite(x);
  }
}

}  // namespace detail

/// Row-major dense matrix. A default-constructed matrix is empty (0x0) and
/// only serves as a placeholder; every operation requires rows, cols >= 1.
template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
      throw Error(Errc::invalid_argument, "matrix dimensions must be >= 1");
    }
  }

  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    if (rows_ == 0 || cols_ == 0) {
      throw Error(Errc::invalid_argument, "matrix dimensions must be >= 1");
    }
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) {
        throw Error(Errc::dimension_mismatch, "ragged matrix literal");
      }
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  std::vector<T> column(std::size_t j) const {
    std::vector<T> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const T& x) { return detail::is_finite(x); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using ComplexMatrix = Matrix<Complex>;
using RealMatrix = Matrix<double>;

template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw Error(Errc::dimension_mismatch, "matmul: " + std::to_string(a.rows()) + "x" +
                                              std::to_string(a.cols()) + " times " +
                                              std::to_string(b.rows()) + "x" +
                                              std::to_string(b.cols()));
  }
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

template <class T>
std::vector<T> matvec(const Matrix<T>& a, std::span<const T> x) {
  if (a.cols() != x.size()) throw Error(Errc::dimension_mismatch, "matvec");
  std::vector<T> y(a.rows(), T{});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T acc{};
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

template <class T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// Conjugate transpose (plain transpose for real matrices).
template <class T>
Matrix<T> adjoint(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = detail::conj_if_complex(a(i, j));
  return t;
}

template <class T>
T trace(const Matrix<T>& a) {
  if (!a.is_square()) throw Error(Errc::dimension_mismatch, "trace of non-square matrix");
  T acc{};
  for (std::size_t i = 0; i < a.rows(); ++i) acc += a(i, i);
  return acc;
}

template <class T>
Matrix<T> operator+(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(Errc::dimension_mismatch, "add");
  Matrix<T> c = a;
  auto cv = c.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] += bv[i];
  return c;
}

template <class T>
Matrix<T> operator-(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(Errc::dimension_mismatch, "sub");
  Matrix<T> c = a;
  auto cv = c.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] -= bv[i];
  return c;
}

template <class T, class S>
Matrix<T> scaled(const Matrix<T>& a, S factor) {
  Matrix<T> c = a;
  for (auto& x : c.values()) x *= factor;
  return c;
}

/// a^exponent by repeated squaring; a^0 is the identity.
template <class T>
Matrix<T> matrix_power(const Matrix<T>& a, long long exponent) {
  if (!a.is_square()) throw Error(Errc::dimension_mismatch, "matrix_power of non-square matrix");
  if (exponent < 0) throw Error(Errc::invalid_argument, "matrix_power exponent must be >= 0");
  Matrix<T> result = Matrix<T>::identity(a.rows());
  Matrix<T> base = a;
  while (exponent > 0) {
    if (exponent & 1) result = matmul(result, base);
    exponent >>= 1;
    if (exponent > 0) base = matmul(base, base);
  }
  return result;
}

template <class T>
double max_abs(const Matrix<T>& a) {
  double m = 0.0;
  for (const auto& x : a.values()) m = std::max(m, static_cast<double>(std::abs(x)));
  return m;
}

template <class T>
double max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(Errc::dimension_mismatch, "diff");
  double m = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i)
    m = std::max(m, static_cast<double>(std::abs(av[i] - bv[i])));
  return m;
}

/// ||A - A^dagger||_max
inline double hermitian_deviation(const ComplexMatrix& a) {
  if (!a.is_square()) throw Error(Errc::dimension_mismatch, "hermitian check of non-square matrix");
  return max_abs_diff(a, adjoint(a));
}

/// ||W^dagger W - I||_max
inline double unitarity_deviation(const ComplexMatrix& w) {
  if (!w.is_square()) throw Error(Errc::dimension_mismatch, "unitarity check of non-square matrix");
  return max_abs_diff(matmul(adjoint(w), w), ComplexMatrix::identity(w.rows()));
}

/// Spectral data of a Hermitian operator: ascending real eigenvalues and a
/// unitary whose columns are the matching eigenvectors.
struct HermitianSpec {
  std::vector<double> eigenvalues;
  ComplexMatrix eigenvectors;

  std::size_t dimension() const noexcept { return eigenvalues.size(); }

  /// Operator already diagonal: the eigenvector matrix is the identity.
  static HermitianSpec from_energies(std::vector<double> energies) {
    if (energies.empty()) throw Error(Errc::invalid_argument, "energies must be non-empty");
    for (std::size_t k = 0; k < energies.size(); ++k) {
      if (!std::isfinite(energies[k])) throw Error(Errc::invalid_argument, "energies must be finite");
      if (k > 0 && energies[k] < energies[k - 1]) {
        throw Error(Errc::invalid_argument, "energies must be sorted ascending");
      }
    }
    const std::size_t n = energies.size();
    return HermitianSpec{std::move(energies), ComplexMatrix::identity(n)};
  }

  void validate(double tol = 1e-10) const {
    if (eigenvectors.rows() != dimension() || eigenvectors.cols() != dimension()) {
      throw Error(Errc::dimension_mismatch, "eigenvector matrix does not match eigenvalue count");
    }
    if (!std::is_sorted(eigenvalues.begin(), eigenvalues.end())) {
      throw Error(Errc::invalid_argument, "eigenvalues must be ascending");
    }
    if (unitarity_deviation(eigenvectors) > tol) {
      throw Error(Errc::not_unitary, "eigenvector matrix is not unitary");
    }
  }
};

/// Cyclic complex Jacobi diagonalization of a Hermitian matrix.
inline HermitianSpec jacobi_eigh(const ComplexMatrix& input, double tol = 1e-12,
                                 int max_sweeps = 100) {
  if (!input.is_square()) throw Error(Errc::dimension_mismatch, "jacobi_eigh needs a square matrix");
  if (input.rows() > 1024) throw Error(Errc::too_large, "jacobi_eigh supports N <= 1024");
  if (!input.all_finite()) throw Error(Errc::invalid_argument, "matrix has non-finite entries");
  if (hermitian_deviation(input) > tol) {
    throw Error(Errc::not_hermitian, "||A - A^dagger||_max exceeds tolerance");
  }
  const std::size_t n = input.rows();

  // Symmetrize so the rotations act on an exactly Hermitian matrix.
  ComplexMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + std::conj(input(j, i)));
    a(i, i) = a(i, i).real();
  }
  ComplexMatrix v = ComplexMatrix::identity(n);

  double frob = 0.0;
  for (const auto& x : a.values()) frob += std::norm(x);
  frob = std::sqrt(frob);
  const double stop = std::max(frob, 1e-300) * 1e-16;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += std::norm(a(p, q));
    return std::sqrt(2.0 * s);
  };

  int sweep = 0;
  while (off_norm() > stop) {
    if (++sweep > max_sweeps) {
      throw Error(Errc::no_convergence, "jacobi_eigh: sweep cap reached");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag <= 1e-300) continue;
        const Complex phase = apq / mag;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double zeta = (aqq - app) / (2.0 * mag);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // G = diag(1, e^{-i phi}) * [[c, s], [-s, c]]
        const Complex gpp = c;
        const Complex gpq = s;
        const Complex gqp = -s * std::conj(phase);
        const Complex gqq = c * std::conj(phase);

        for (std::size_t k = 0; k < n; ++k) {
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();

        for (std::size_t k = 0; k < n; ++k) {
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = vkp * gpp + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * gqq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

  HermitianSpec out;
  out.eigenvalues.resize(n);
  out.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    out.eigenvalues[col] = a(order[col], order[col]).real();
    for (std::size_t row = 0; row < n; ++row) out.eigenvectors(row, col) = v(row, order[col]);
  }
  return out;
}

/// e^{-iH tau} in the energy basis, stored as its diagonal.
struct UnitaryPropagator {
  std::vector<Complex> phases;

  std::size_t dimension() const noexcept { return phases.size(); }

  ComplexMatrix matrix() const {
    ComplexMatrix m(phases.size(), phases.size());
    for (std::size_t k = 0; k < phases.size(); ++k) m(k, k) = phases[k];
    return m;
  }
};

inline UnitaryPropagator propagator(const HermitianSpec& h, double tau) {
  if (!std::isfinite(tau)) throw Error(Errc::invalid_argument, "propagator time must be finite");
  UnitaryPropagator u;
  u.phases.reserve(h.dimension());
  for (double e : h.eigenvalues) u.phases.push_back(std::polar(1.0, -e * tau));
  return u;
}

/// H written in another orthonormal basis W (columns): W^dagger diag(E) W.
inline ComplexMatrix hamiltonian_in_basis(const HermitianSpec& h, const ComplexMatrix& w) {
  const std::size_t n = h.dimension();
  if (w.rows() != n || w.cols() != n) throw Error(Errc::dimension_mismatch, "basis dimension");
  ComplexMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Complex acc{};
      for (std::size_t k = 0; k < n; ++k) acc += std::conj(w(k, i)) * h.eigenvalues[k] * w(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace heatstat
