#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "swamp/matrix.hpp"

namespace swamp {

// Nonnegative N x K cost matrix for an entropic OT problem. Construction
// rejects non-finite entries.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix values);
  const Matrix& values() const { return values_; }
  std::size_t n() const { return values_.rows(); }
  std::size_t k() const { return values_.cols(); }

 private:
  Matrix values_;
};

// Soft assignment plan: q(i, y) >= 0 with uniform prescribed marginals
// (rows sum to 1/N, columns to 1/K).
struct TransportPlan {
  Matrix q;
  double row_marginal() const { return 1.0 / static_cast<double>(q.rows()); }
  double col_marginal() const { return 1.0 / static_cast<double>(q.cols()); }
};

// Log-domain scaling vectors plus solve diagnostics. The residual is the max
// L1 deviation of a row/column sum from its target marginal.
struct SinkhornState {
  std::vector<double> log_u;
  std::vector<double> log_v;
  int iterations_used = 0;
  double final_residual = 0.0;
};

struct SinkhornResult {
  TransportPlan plan;
  SinkhornState state;
};

// Entropy-regularized OT via log-domain Sinkhorn-Knopp on the kernel
// A_iy = exp(-eta * C_iy). Stops when the marginal residual drops below tol
// or after max_iters row/column rounds (whichever comes first); the achieved
// residual is reported either way. The log-sum-exp evaluations are organized
// around a once-exponentiated row-shifted kernel so each round is two
// matrix-vector passes; rows/columns whose accumulated sum underflows fall
// back to an exact shifted log-sum-exp scan.
//
// warm_log_v, when given, seeds the column scaling (the fixed point is
// unique, so this affects iteration count only).
SinkhornResult sinkhorn_solve(const CostMatrix& cost, double eta, int max_iters = 100,
                              double tol = 1e-6,
                              const std::vector<double>* warm_log_v = nullptr);

// Same solve, but materializes only the requested plan rows (scaled so the
// full-plan row mass is preserved: each returned row sums to ~1/N).
struct SinkhornRowsResult {
  Matrix rows;  // |row_indices| x K
  SinkhornState state;
};
SinkhornRowsResult sinkhorn_solve_rows(const CostMatrix& cost, double eta,
                                       int max_iters, double tol,
                                       std::span<const std::uint32_t> row_indices,
                                       const std::vector<double>* warm_log_v = nullptr);

// (max |row_sum - 1/N|, max |col_sum - 1/K|).
std::pair<double, double> marginal_residual(const TransportPlan& plan);

// Ablation arm: each row's mass moved onto its argmax column (ties break to
// the lowest index). Row marginals are preserved; column marginals generally
// are not.
TransportPlan harden(const TransportPlan& plan);

// Row-level version used on minibatch slices; rows keep their input mass.
Matrix harden_rows(const Matrix& plan_rows);

}  // namespace swamp
