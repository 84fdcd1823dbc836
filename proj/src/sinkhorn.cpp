#include "swamp/sinkhorn.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace swamp {

namespace {

// Below this, an accumulated kernel sum is recomputed with an exact
// shifted log-sum-exp (the fast path's hoisted shifts can underflow when the
// scaling vectors drift far from the kernel's own row/column maxima).
constexpr double kUnderflowFloor = 1e-280;

struct Workspace {
  std::size_t n = 0, k = 0;
  Matrix m;       // -eta * C
  Matrix kernel;  // exp(m_ij - row_max_i), entries in (0, 1]
  std::vector<double> row_max;
  std::vector<double> log_u, log_v;
  std::vector<double> row_lse;  // S_i = lse_j(m_ij + log_v_j)
  std::vector<double> col_lse;  // T_j = lse_i(m_ij + log_u_i)
  std::vector<double> weights;  // scratch, max(n, k)
  int iterations_used = 0;
};

// S_i = lse_j(m_ij + log_v_j) for all rows.
void row_lse_pass(Workspace& ws) {
  const double shift = *std::max_element(ws.log_v.begin(), ws.log_v.end());
  for (std::size_t j = 0; j < ws.k; ++j)
    ws.weights[j] = std::exp(ws.log_v[j] - shift);
  for (std::size_t i = 0; i < ws.n; ++i) {
    const double* krow = ws.kernel.data() + i * ws.k;
    double acc = 0.0;
    for (std::size_t j = 0; j < ws.k; ++j) acc += krow[j] * ws.weights[j];
    if (acc > kUnderflowFloor) {
      ws.row_lse[i] = ws.row_max[i] + shift + std::log(acc);
    } else {
      const double* mrow = ws.m.data() + i * ws.k;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < ws.k; ++j)
        mx = std::max(mx, mrow[j] + ws.log_v[j]);
      double exact = 0.0;
      for (std::size_t j = 0; j < ws.k; ++j)
        exact += std::exp(mrow[j] + ws.log_v[j] - mx);
      ws.row_lse[i] = mx + std::log(exact);
    }
  }
}

// T_j = lse_i(m_ij + log_u_i) for all columns. Uses the row-shifted kernel:
// m_ij + log_u_i = (m_ij - row_max_i) + (row_max_i + log_u_i).
void col_lse_pass(Workspace& ws) {
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ws.n; ++i)
    shift = std::max(shift, ws.row_max[i] + ws.log_u[i]);
  std::vector<double>& acc = ws.col_lse;  // reused as the accumulator
  std::fill(acc.begin(), acc.end(), 0.0);
  for (std::size_t i = 0; i < ws.n; ++i) {
    const double gi = std::exp(ws.row_max[i] + ws.log_u[i] - shift);
    if (gi == 0.0) continue;
    const double* krow = ws.kernel.data() + i * ws.k;
    for (std::size_t j = 0; j < ws.k; ++j) acc[j] += gi * krow[j];
  }
  for (std::size_t j = 0; j < ws.k; ++j) {
    if (acc[j] > kUnderflowFloor) {
      ws.col_lse[j] = shift + std::log(acc[j]);
    } else {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < ws.n; ++i)
        mx = std::max(mx, ws.m(i, j) + ws.log_u[i]);
      double exact = 0.0;
      for (std::size_t i = 0; i < ws.n; ++i)
        exact += std::exp(ws.m(i, j) + ws.log_u[i] - mx);
      ws.col_lse[j] = mx + std::log(exact);
    }
  }
}

Workspace solve_scalings(const Matrix& cost, double eta, int max_iters, double tol,
                         const std::vector<double>* warm_log_v) {
  if (cost.rows() == 0 || cost.cols() == 0) {
    throw ShapeError("sinkhorn_solve: empty cost matrix");
  }
  if (!(eta > 0.0)) {
    throw ConfigError(fmt::format("sinkhorn_solve: eta must be > 0, got {}", eta));
  }
  if (max_iters < 0) {
    throw ConfigError("sinkhorn_solve: max_iters must be >= 0");
  }

  Workspace ws;
  ws.n = cost.rows();
  ws.k = cost.cols();
  ws.m = Matrix(ws.n, ws.k);
  for (std::size_t i = 0; i < cost.size(); ++i)
    ws.m.data()[i] = -eta * cost.data()[i];
  ws.row_max.resize(ws.n);
  for (std::size_t i = 0; i < ws.n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : ws.m.row(i)) mx = std::max(mx, v);
    ws.row_max[i] = mx;
  }
  ws.kernel = Matrix(ws.n, ws.k);
  for (std::size_t i = 0; i < ws.n; ++i) {
    const double* mrow = ws.m.data() + i * ws.k;
    double* krow = ws.kernel.data() + i * ws.k;
    for (std::size_t j = 0; j < ws.k; ++j) krow[j] = std::exp(mrow[j] - ws.row_max[i]);
  }

  ws.log_u.assign(ws.n, 0.0);
  if (warm_log_v != nullptr && warm_log_v->size() == ws.k) {
    ws.log_v = *warm_log_v;
  } else {
    ws.log_v.assign(ws.k, 0.0);
  }
  ws.row_lse.resize(ws.n);
  ws.col_lse.resize(ws.k);
  ws.weights.resize(std::max(ws.n, ws.k));

  const double log_r = -std::log(static_cast<double>(ws.n));
  const double log_c = -std::log(static_cast<double>(ws.k));
  const double row_target = std::exp(log_r);

  for (int round = 1; round <= max_iters; ++round) {
    row_lse_pass(ws);
    if (round > 1) {
      // After the previous round's column update the column sums are exact;
      // the row deviation alone decides convergence.
      double row_err = 0.0;
      for (std::size_t i = 0; i < ws.n; ++i) {
        const double arg = ws.log_u[i] + ws.row_lse[i];
        const double sum = arg < 700.0 ? std::exp(arg)
                                       : std::numeric_limits<double>::infinity();
        row_err = std::max(row_err, std::abs(sum - row_target));
      }
      if (row_err < tol) break;
    }
    for (std::size_t i = 0; i < ws.n; ++i) ws.log_u[i] = log_r - ws.row_lse[i];
    col_lse_pass(ws);
    for (std::size_t j = 0; j < ws.k; ++j) ws.log_v[j] = log_c - ws.col_lse[j];
    ws.iterations_used = round;
  }
  return ws;
}

Matrix materialize_plan(const Workspace& ws) {
  Matrix q(ws.n, ws.k);
  for (std::size_t i = 0; i < ws.n; ++i) {
    const double* mrow = ws.m.data() + i * ws.k;
    double* qrow = q.data() + i * ws.k;
    const double ui = ws.log_u[i];
    for (std::size_t j = 0; j < ws.k; ++j)
      qrow[j] = std::exp(mrow[j] + ui + ws.log_v[j]);
  }
  return q;
}

}  // namespace

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
  require_finite(values_, "CostMatrix");
}

SinkhornResult sinkhorn_solve(const CostMatrix& cost, double eta, int max_iters,
                              double tol, const std::vector<double>* warm_log_v) {
  Workspace ws = solve_scalings(cost.values(), eta, max_iters, tol, warm_log_v);
  SinkhornResult result;
  result.plan.q = materialize_plan(ws);
  result.state.log_u = std::move(ws.log_u);
  result.state.log_v = std::move(ws.log_v);
  result.state.iterations_used = ws.iterations_used;
  const auto [row_err, col_err] = marginal_residual(result.plan);
  result.state.final_residual = std::max(row_err, col_err);
  return result;
}

SinkhornRowsResult sinkhorn_solve_rows(const CostMatrix& cost, double eta,
                                       int max_iters, double tol,
                                       std::span<const std::uint32_t> row_indices,
                                       const std::vector<double>* warm_log_v) {
  Workspace ws = solve_scalings(cost.values(), eta, max_iters, tol, warm_log_v);
  SinkhornRowsResult result;
  result.rows = Matrix(row_indices.size(), ws.k);
  for (std::size_t r = 0; r < row_indices.size(); ++r) {
    const std::uint32_t i = row_indices[r];
    if (i >= ws.n) {
      throw ShapeError(fmt::format("sinkhorn_solve_rows: row index {} out of range {}",
                                   i, ws.n));
    }
    const double* mrow = ws.m.data() + static_cast<std::size_t>(i) * ws.k;
    double* out = result.rows.data() + r * ws.k;
    for (std::size_t j = 0; j < ws.k; ++j)
      out[j] = std::exp(mrow[j] + ws.log_u[i] + ws.log_v[j]);
  }
  // Residual from the scaling identities (no full-plan materialization).
  row_lse_pass(ws);
  col_lse_pass(ws);
  const double row_target = 1.0 / static_cast<double>(ws.n);
  const double col_target = 1.0 / static_cast<double>(ws.k);
  double err = 0.0;
  for (std::size_t i = 0; i < ws.n; ++i)
    err = std::max(err, std::abs(std::exp(ws.log_u[i] + ws.row_lse[i]) - row_target));
  for (std::size_t j = 0; j < ws.k; ++j)
    err = std::max(err, std::abs(std::exp(ws.log_v[j] + ws.col_lse[j]) - col_target));
  result.state.final_residual = err;
  result.state.iterations_used = ws.iterations_used;
  result.state.log_u = std::move(ws.log_u);
  result.state.log_v = std::move(ws.log_v);
  return result;
}

std::pair<double, double> marginal_residual(const TransportPlan& plan) {
  const Matrix& q = plan.q;
  const double row_target = plan.row_marginal();
  const double col_target = plan.col_marginal();
  double row_err = 0.0;
  for (double s : row_sums(q)) row_err = std::max(row_err, std::abs(s - row_target));
  double col_err = 0.0;
  for (double s : col_sums(q)) col_err = std::max(col_err, std::abs(s - col_target));
  return {row_err, col_err};
}

Matrix harden_rows(const Matrix& plan_rows) {
  Matrix out(plan_rows.rows(), plan_rows.cols(), 0.0);
  for (std::size_t i = 0; i < plan_rows.rows(); ++i) {
    std::size_t arg = 0;
    double best = plan_rows(i, 0);
    double mass = plan_rows(i, 0);
    for (std::size_t j = 1; j < plan_rows.cols(); ++j) {
      mass += plan_rows(i, j);
      if (plan_rows(i, j) > best) {  // strict: ties keep the lowest index
        best = plan_rows(i, j);
        arg = j;
      }
    }
    out(i, arg) = mass;
  }
  return out;
}

TransportPlan harden(const TransportPlan& plan) {
  // Row mass is pinned to the target marginal (1/N), not the possibly
  // slightly-off achieved sum, so hardening is idempotent and exact.
  Matrix out(plan.q.rows(), plan.q.cols(), 0.0);
  const double mass = plan.row_marginal();
  for (std::size_t i = 0; i < plan.q.rows(); ++i) {
    std::size_t arg = 0;
    double best = plan.q(i, 0);
    for (std::size_t j = 1; j < plan.q.cols(); ++j) {
      if (plan.q(i, j) > best) {
        best = plan.q(i, j);
        arg = j;
      }
    }
    out(i, arg) = mass;
  }
  return TransportPlan{std::move(out)};
}

}  // namespace swamp
