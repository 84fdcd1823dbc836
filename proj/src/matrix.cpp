#include "swamp/matrix.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace swamp {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw ShapeError("from_rows: ragged initializer");
    }
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Matrix::shape_str() const {
  return fmt::format("{}x{}", rows_, cols_);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* context) {
  if (!a.same_shape(b)) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", context,
                                 a.shape_str(), b.shape_str()));
  }
}

void require_finite(const Matrix& m, const char* context) {
  if (!m.all_finite()) {
    throw NumericError(fmt::format("{}: non-finite entry in {} matrix", context,
                                   m.shape_str()));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError(fmt::format("matmul: inner dimensions disagree, {} vs {}",
                                 a.shape_str(), b.shape_str()));
  }
  Matrix out(a.rows(), b.cols(), 0.0);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out.data() + i * m;
    const double* a_row = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aik = a_row[p];
      const double* b_row = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError(fmt::format("matmul_nt: column dimensions disagree, {} vs {}",
                                 a.shape_str(), b.shape_str()));
  }
  Matrix out(a.rows(), b.rows());
  const std::size_t d = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* a_row = a.data() + i * d;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* b_row = b.data() + j * d;
      double acc = 0.0;
      for (std::size_t p = 0; p < d; ++p) acc += a_row[p] * b_row[p];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError(fmt::format("matmul_tn: row dimensions disagree, {} vs {}",
                                 a.shape_str(), b.shape_str()));
  }
  Matrix out(a.cols(), b.cols(), 0.0);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* a_row = a.data() + i * k;
    const double* b_row = b.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a_row[p];
      double* out_row = out.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += aip * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
  return out;
}

Matrix scaled(const Matrix& a, double c) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
  return out;
}

void add_in_place(Matrix& dst, const Matrix& src) {
  require_same_shape(dst, src, "add_in_place");
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& b) {
  if (b.rows() != 1 || b.cols() != a.cols()) {
    throw ShapeError(fmt::format("add_row_broadcast: bias {} incompatible with {}",
                                 b.shape_str(), a.shape_str()));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += b(0, j);
  return out;
}

std::vector<double> row_sums(const Matrix& m) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (double v : m.row(i)) acc += v;
    out[i] = acc;
  }
  return out;
}

std::vector<double> col_sums(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.data() + i * m.cols();
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[j];
  }
  return out;
}

Matrix l2_normalize_rows_value(const Matrix& x) {
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (double v : x.row(i)) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!(norm > kNormFloor)) {
      throw NumericError(fmt::format(
          "l2_normalize_rows: degenerate embedding, row {} has norm {:.3e} (floor {:.0e})",
          i, norm, kNormFloor));
    }
    const double inv = 1.0 / norm;
    for (double& v : out.row(i)) v *= inv;
  }
  return out;
}

Matrix log_softmax_rows_value(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw ConfigError(fmt::format("log_softmax_rows: temperature must be > 0, got {}",
                                  temperature));
  }
  const double inv_tau = 1.0 / temperature;
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double* in_row = logits.data() + i * logits.cols();
    double* out_row = out.data() + i * logits.cols();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      out_row[j] = in_row[j] * inv_tau;
      mx = std::max(mx, out_row[j]);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) acc += std::exp(out_row[j] - mx);
    const double lse = mx + std::log(acc);
    for (std::size_t j = 0; j < logits.cols(); ++j) out_row[j] -= lse;
  }
  return out;
}

Matrix softmax_rows_value(const Matrix& logits, double temperature) {
  Matrix out = log_softmax_rows_value(logits, temperature);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out.data()[i]);
  return out;
}

Matrix renormalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double mass = 0.0;
    for (double v : m.row(i)) mass += v;
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      throw NumericError(fmt::format(
          "renormalize_rows: degenerate target, row {} has mass {:.3e}", i, mass));
    }
    const double inv = 1.0 / mass;
    for (double& v : out.row(i)) v *= inv;
  }
  return out;
}

}  // namespace swamp
