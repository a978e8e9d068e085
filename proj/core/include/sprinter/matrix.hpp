#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sprinter {

/// Read-only view of a dense column-major matrix.
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(const double* data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const double* data() const { return data_; }

  std::span<const double> col(std::size_t j) const {
    return {data_ + j * rows_, rows_};
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[j * rows_ + i];
  }

 private:
  const double* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// Owning dense column-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const {
    return {data_.data() + j * rows_, rows_};
  }
  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  MatrixView view() const { return {data_.data(), rows_, cols_}; }
  operator MatrixView() const { return view(); }

  /// Appends columns to the right; `extra` must have the same row count.
  void append_cols(MatrixView extra);

  /// Copy of the given rows, in order.
  static Matrix select_rows(MatrixView m, std::span<const std::size_t> rows);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Per-column centering and scaling. A constant column gets scale 1 and
/// therefore maps to an all-zero standardized column.
struct Standardizer {
  std::vector<double> center;
  std::vector<double> scale;

  /// Sample mean and population standard deviation (1/n) of each column.
  static Standardizer fit(MatrixView x);
  static Standardizer identity(std::size_t p);

  std::size_t size() const { return center.size(); }
  Matrix apply(MatrixView x) const;
};

/// Throws InputError naming the first non-finite cell.
void require_finite(MatrixView x, const char* what);
void require_finite(std::span<const double> v, const char* what);

}  // namespace sprinter
