#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace whft {

// Small dense row-major matrix of doubles. Products go through the
// ISA-dispatched kernels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& src);
  Matrix transpose() const;
  std::vector<std::vector<double>> to_rows() const;

  bool all_finite() const;
  double max_abs() const;
  // Infinity norm (max absolute row sum).
  double norm_inf() const;

  Matrix& operator+=(const Matrix& rhs);
  Matrix& operator-=(const Matrix& rhs);
  Matrix& operator*=(double s);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

// c = a * b into preallocated storage (resized if needed).
void multiply_into(const Matrix& a, const Matrix& b, Matrix& c);

// Matrix exponential by scaling and squaring of a truncated Taylor series.
Matrix expm(const Matrix& a);

// Largest eigenvalue magnitude (dense QR iteration).
double spectral_radius(const Matrix& a);
// Induced 2-norm (largest singular value).
double norm2(const Matrix& a);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace whft
