#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "swamp/error.hpp"

namespace swamp {

// Dense row-major 2-D array of doubles. The universal carrier for features,
// costs, transport plans and parameters.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  std::string shape_str() const;

  void fill(double v) { data_.assign(data_.size(), v); }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// --- shape checks -----------------------------------------------------------

void require_same_shape(const Matrix& a, const Matrix& b, const char* context);
void require_finite(const Matrix& m, const char* context);

// --- raw kernels (shared by tape ops and gradient-free evaluation paths) ----

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double c);
void add_in_place(Matrix& dst, const Matrix& src);

// dst_row(i) += row broadcast of b (1 x cols).
Matrix add_row_broadcast(const Matrix& a, const Matrix& b);

std::vector<double> row_sums(const Matrix& m);
std::vector<double> col_sums(const Matrix& m);

// Value-level versions of the differentiable row ops. The tape wraps these so
// the training path and the gradient-free evaluation path share one kernel.
inline constexpr double kNormFloor = 1e-12;

Matrix l2_normalize_rows_value(const Matrix& x);
Matrix log_softmax_rows_value(const Matrix& logits, double temperature);
Matrix softmax_rows_value(const Matrix& logits, double temperature);

// Divides each row by its sum. Throws NumericError on rows with
// non-positive mass (degenerate assignment targets).
Matrix renormalize_rows(const Matrix& m);

}  // namespace swamp
