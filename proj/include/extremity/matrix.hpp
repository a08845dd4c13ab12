#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace extremity {

// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int rows, int cols);
  Matrix(int rows, int cols, std::vector<double> values);

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  std::span<double> row(int r) { return {v.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
  std::span<const double> row(int r) const {
    return {v.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  size_t size() const { return v.size(); }
  void fill(double x);
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a[m×k] · b[k×n]
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ · b, a[k×m], b[k×n]
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a · bᵀ, a[m×k], b[n×k]

void add_inplace(Matrix& a, const Matrix& b);
std::vector<double> column_sums(const Matrix& a);

}  // namespace extremity
