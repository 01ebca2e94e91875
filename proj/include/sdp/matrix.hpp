#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdp {

using Vector = std::vector<double>;

struct DimMismatch : std::runtime_error {
  explicit DimMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct NotPsd : std::runtime_error {
  explicit NotPsd(const std::string& what) : std::runtime_error(what) {}
};

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t n);
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
// y = m x
Vector matvec(const Matrix& m, const Vector& x);
// y = m^T x
Vector matvec_t(const Matrix& m, const Vector& x);
Vector add(const Vector& a, const Vector& b);
double max_abs(const Matrix& m);
bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

/// Square symmetric positive semi-definite matrix (checked on construction).
struct PsdMatrix {
  Matrix m;

  PsdMatrix() = default;
  explicit PsdMatrix(Matrix mat);

  std::size_t dim() const { return m.rows; }
  double operator()(std::size_t i, std::size_t j) const { return m(i, j); }

  static PsdMatrix diagonal(const Vector& d);
  static PsdMatrix zero(std::size_t n);
};

// Lower-triangular L with L L^T ~= m.  Near-singular inputs get diagonal
// jitter 1e-9*trace/n, retried up to 3 times with jitter x10.
Matrix psd_factor(const PsdMatrix& m);

}  // namespace sdp
