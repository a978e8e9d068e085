#include "sprinter/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sprinter/errors.hpp"

namespace sprinter {

void Matrix::append_cols(MatrixView extra) {
  if (cols_ == 0 && rows_ == 0) rows_ = extra.rows();
  if (extra.rows() != rows_) {
    throw DimensionError("append_cols: row count " + std::to_string(extra.rows()) +
                         " != " + std::to_string(rows_));
  }
  data_.insert(data_.end(), extra.data(), extra.data() + extra.rows() * extra.cols());
  cols_ += extra.cols();
}

Matrix Matrix::select_rows(MatrixView m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    auto src = m.col(j);
    auto dst = out.col(j);
    for (std::size_t r = 0; r < rows.size(); ++r) dst[r] = src[rows[r]];
  }
  return out;
}

Standardizer Standardizer::fit(MatrixView x) {
  Standardizer s;
  const std::size_t n = x.rows();
  s.center.resize(x.cols());
  s.scale.resize(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto c = x.col(j);
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : c) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(n));
    s.center[j] = mean;
    s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t p) {
  return Standardizer{std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)};
}

Matrix Standardizer::apply(MatrixView x) const {
  if (x.cols() != center.size()) {
    throw DimensionError("Standardizer::apply: expected " + std::to_string(center.size()) +
                         " columns, got " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto src = x.col(j);
    auto dst = out.col(j);
    const double c = center[j], inv = 1.0 / scale[j];
    for (std::size_t i = 0; i < x.rows(); ++i) dst[i] = (src[i] - c) * inv;
  }
  return out;
}

void require_finite(MatrixView x, const char* what) {
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto c = x.col(j);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!std::isfinite(c[i])) {
        throw InputError(std::string(what) + ": non-finite value at row " + std::to_string(i) +
                         ", column " + std::to_string(j));
      }
    }
  }
}

void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw InputError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

}  // namespace sprinter
