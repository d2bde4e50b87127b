#include "ratingcbc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ratingcbc {

namespace {

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) m = std::max(m, std::abs(a(r, c)));
  return m;
}

std::size_t pivot_row(const Matrix& a, std::size_t col, std::size_t from) {
  std::size_t best = from;
  for (std::size_t r = from + 1; r < a.rows(); ++r)
    if (std::abs(a(r, col)) > std::abs(a(best, col))) best = r;
  return best;
}

void swap_rows(Matrix& a, std::size_t i, std::size_t j) {
  if (i == j) return;
  auto ri = a.row(i);
  auto rj = a.row(j);
  std::swap_ranges(ri.begin(), ri.end(), rj.begin());
}

} // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix cross_product(const Matrix& x) {
  Matrix out(x.cols(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t i = 0; i < x.cols(); ++i) {
      if (row[i] == 0.0) continue;
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += row[i] * row[j];
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

LuResult lu_determinant(const Matrix& input, double rel_tol) {
  Matrix a = input;
  const std::size_t n = a.rows();
  const double tol = rel_tol * max_abs(a);
  LuResult result;
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = pivot_row(a, k, k);
    if (std::abs(a(p, k)) <= tol) {
      result.singular_column = k;
      return result;
    }
    if (p != k) {
      swap_rows(a, p, k);
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t c = k; c < n; ++c) a(r, c) -= f * a(k, c);
    }
  }
  result.determinant = det;
  return result;
}

std::optional<Matrix> invert(const Matrix& input, double rel_tol) {
  Matrix a = input;
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  const double tol = rel_tol * max_abs(a);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = pivot_row(a, k, k);
    if (std::abs(a(p, k)) <= tol) return std::nullopt;
    swap_rows(a, p, k);
    swap_rows(inv, p, k);
    const double piv = a(k, k);
    for (std::size_t c = 0; c < n; ++c) {
      a(k, c) /= piv;
      inv(k, c) /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == k) continue;
      const double f = a(r, k);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a(r, c) -= f * a(k, c);
        inv(r, c) -= f * inv(k, c);
      }
    }
  }
  return inv;
}

std::optional<std::vector<double>> solve(const Matrix& a, std::span<const double> b,
                                         double rel_tol) {
  auto inv = invert(a, rel_tol);
  if (!inv) return std::nullopt;
  std::vector<double> x(a.rows(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) x[r] = dot(inv->row(r), b);
  return x;
}

} // namespace ratingcbc
