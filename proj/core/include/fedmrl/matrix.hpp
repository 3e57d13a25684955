#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fedmrl {

/// Dense row-major matrix of doubles. The only numeric carrier in the
/// library: vectors are 1xN matrices and batches are stacked rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
  static Matrix identity(std::size_t n);
  static Matrix row(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  void fill(double value);

  /// Bitwise equality of shape and contents.
  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materialising the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// a^T * b without materialising the transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
/// a += s * b
void axpy(Matrix& a, double s, const Matrix& b);

/// Adds a 1xC row to every row of a.
void add_row_broadcast(Matrix& a, const Matrix& row);
/// Column sums as a 1xC row.
Matrix column_sums(const Matrix& a);

/// [a | b], row counts must match.
Matrix hconcat(const Matrix& a, const Matrix& b);
/// Columns [begin, end).
Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t end);
/// Rows selected by index, in the given order.
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> rows);

double frobenius_norm(const Matrix& a);
bool all_finite(const Matrix& a) noexcept;
/// Throws NumericError naming `what` if any entry is NaN/Inf.
void require_finite(const Matrix& a, const char* what);

}  // namespace fedmrl
