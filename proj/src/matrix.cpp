#include "sdp/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace sdp {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw DimMismatch("matmul: inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
  return out;
}

Vector matvec(const Matrix& m, const Vector& x) {
  if (m.cols != x.size()) throw DimMismatch("matvec: dimension mismatch");
  Vector y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double acc = 0.0;
    const double* row = &m.data[i * m.cols];
    for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vector matvec_t(const Matrix& m, const Vector& x) {
  if (m.rows != x.size()) throw DimMismatch("matvec_t: dimension mismatch");
  Vector y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = &m.data[i * m.cols];
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * xi;
  }
  return y;
}

Vector add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimMismatch("add: dimension mismatch");
  Vector y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data) v = std::max(v, std::fabs(x));
  return v;
}

bool all_finite(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Matrix& m) { return all_finite(m.data); }

PsdMatrix::PsdMatrix(Matrix mat) {
  if (mat.rows != mat.cols) throw NotPsd("PsdMatrix: not square");
  if (!all_finite(mat)) throw NotPsd("PsdMatrix: non-finite entries");
  const double scale = std::max(1.0, max_abs(mat));
  for (std::size_t i = 0; i < mat.rows; ++i)
    for (std::size_t j = i + 1; j < mat.cols; ++j) {
      if (std::fabs(mat(i, j) - mat(j, i)) > 1e-9 * scale)
        throw NotPsd("PsdMatrix: not symmetric");
      const double s = 0.5 * (mat(i, j) + mat(j, i));
      mat(i, j) = s;
      mat(j, i) = s;
    }
  m = std::move(mat);
}

PsdMatrix PsdMatrix::diagonal(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return PsdMatrix(std::move(m));
}

PsdMatrix PsdMatrix::zero(std::size_t n) { return PsdMatrix(Matrix(n, n)); }

namespace {

// Plain Cholesky; returns false on a negative pivot beyond tolerance.
bool try_cholesky(const Matrix& a, Matrix& l) {
  const std::size_t n = a.rows;
  l = Matrix(n, n);
  const double tol = 1e-12 * std::max(1.0, max_abs(a));
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol) return false;
    d = std::max(d, 0.0);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = (ljj > 0.0) ? s / ljj : 0.0;
    }
  }
  // Rank-deficient columns leave zero pivots; verify the reconstruction.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += l(i, k) * l(j, k);
      if (std::fabs(s - a(i, j)) > 1e-7 * (1.0 + max_abs(a))) return false;
    }
  return true;
}

}  // namespace

Matrix psd_factor(const PsdMatrix& psd) {
  const std::size_t n = psd.dim();
  Matrix l;
  if (try_cholesky(psd.m, l)) return l;
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += psd.m(i, i);
  double jitter = 1e-9 * std::max(trace, 1.0) / static_cast<double>(n);
  Matrix a = psd.m;
  for (int attempt = 0; attempt < 3; ++attempt) {
    for (std::size_t i = 0; i < n; ++i) a(i, i) = psd.m(i, i) + jitter;
    if (try_cholesky(a, l)) return l;
    jitter *= 10.0;
  }
  throw NotPsd("psd_factor: factorization failed after jitter retries");
}

}  // namespace sdp
