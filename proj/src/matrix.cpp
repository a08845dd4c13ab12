#include "extremity/matrix.hpp"

#include <stdexcept>
#include <string>

namespace extremity {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                              std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                              std::to_string(b.cols) + ")");
}

}  // namespace

Matrix::Matrix(int rows_, int cols_) : rows(rows_), cols(cols_), v(static_cast<size_t>(rows_) * cols_, 0.0) {
  if (rows_ < 0 || cols_ < 0) throw std::invalid_argument("Matrix: negative dimension");
}

Matrix::Matrix(int rows_, int cols_, std::vector<double> values) : rows(rows_), cols(cols_), v(std::move(values)) {
  if (v.size() != static_cast<size_t>(rows_) * cols_) throw std::invalid_argument("Matrix: values size mismatch");
}

void Matrix::fill(double x) {
  for (auto& t : v) t = x;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) shape_error("matmul", a, b);
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.v.data() + static_cast<size_t>(i) * a.cols;
    double* crow = c.v.data() + static_cast<size_t>(i) * c.cols;
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = b.v.data() + static_cast<size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) shape_error("matmul_tn", a, b);
  Matrix c(a.cols, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.v.data() + static_cast<size_t>(i) * a.cols;
    const double* brow = b.v.data() + static_cast<size_t>(i) * b.cols;
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      double* crow = c.v.data() + static_cast<size_t>(k) * c.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) shape_error("matmul_nt", a, b);
  Matrix c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.v.data() + static_cast<size_t>(i) * a.cols;
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.v.data() + static_cast<size_t>(j) * b.cols;
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      c.at(i, j) = s;
    }
  }
  return c;
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("add_inplace", a, b);
  for (size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

std::vector<double> column_sums(const Matrix& a) {
  std::vector<double> s(a.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.v.data() + static_cast<size_t>(i) * a.cols;
    for (int j = 0; j < a.cols; ++j) s[j] += arow[j];
  }
  return s;
}

}  // namespace extremity
