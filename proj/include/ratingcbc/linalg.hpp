#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ratingcbc {

/// Small dense row-major matrix. Sizes here are tiny (p <= a few dozen), so
/// plain elimination is all that is needed.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// X'X.
Matrix cross_product(const Matrix& x);

double dot(std::span<const double> a, std::span<const double> b);

/// Result of partial-pivot LU elimination on a square matrix.
struct LuResult {
  double determinant = 0.0;
  /// Index of the first column whose pivot fell below tolerance.
  std::optional<std::size_t> singular_column;
};

/// Determinant by partial-pivot elimination. A pivot below
/// `rel_tol * max|a_ij|` marks the matrix singular (determinant 0).
LuResult lu_determinant(const Matrix& a, double rel_tol = 1e-12);

/// Gauss-Jordan inverse with partial pivoting; nullopt when singular.
std::optional<Matrix> invert(const Matrix& a, double rel_tol = 1e-12);

/// Solves A x = b; nullopt when singular.
std::optional<std::vector<double>> solve(const Matrix& a, std::span<const double> b,
                                         double rel_tol = 1e-12);

} // namespace ratingcbc
