#include "swamp/tape.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace swamp {

NodeRef Tape::push(Matrix value, BackwardFn backward_fn, ParamTensor* leaf) {
  Node n;
  n.value = std::move(value);
  n.grad = Matrix(n.value.rows(), n.value.cols());
  n.leaf = leaf;
  n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return NodeRef{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(NodeRef n) {
  if (!n.valid() || n.index >= nodes_.size()) {
    throw ShapeError("tape: invalid node reference");
  }
  return nodes_[n.index];
}

const Tape::Node& Tape::node(NodeRef n) const {
  if (!n.valid() || n.index >= nodes_.size()) {
    throw ShapeError("tape: invalid node reference");
  }
  return nodes_[n.index];
}

NodeRef Tape::constant(Matrix value) { return push(std::move(value)); }

NodeRef Tape::param(ParamTensor& p) { return push(p.value, {}, &p); }

const Matrix& Tape::value(NodeRef n) const { return node(n).value; }
const Matrix& Tape::grad(NodeRef n) const { return node(n).grad; }

void Tape::clear() { nodes_.clear(); }

void Tape::backward(NodeRef loss) {
  Node& top = node(loss);
  if (top.value.rows() != 1 || top.value.cols() != 1) {
    throw ShapeError(fmt::format("backward: loss must be a 1x1 scalar, got {}",
                                 top.value.shape_str()));
  }
  top.grad(0, 0) += 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward_fn) n.backward_fn(*this, static_cast<std::uint32_t>(i));
    if (n.leaf) add_in_place(n.leaf->grad, n.grad);
  }
}

NodeRef Tape::affine(NodeRef x, NodeRef w, NodeRef b) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  const Matrix& bv = value(b);
  Matrix out = add_row_broadcast(swamp::matmul(xv, wv), bv);
  const auto xi = x.index, wi = w.index, bi = b.index;
  return push(std::move(out), [xi, wi, bi](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    add_in_place(t.grad_at(xi), swamp::matmul_nt(g, t.value_at(wi)));
    add_in_place(t.grad_at(wi), swamp::matmul_tn(t.value_at(xi), g));
    Matrix& db = t.grad_at(bi);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) db(0, j) += g(i, j);
  });
}

NodeRef Tape::activation(NodeRef x, Activation kind) {
  const Matrix& xv = value(x);
  Matrix out = xv;
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = out.data()[i] > 0.0 ? out.data()[i] : 0.0;
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = std::tanh(out.data()[i]);
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = 1.0 / (1.0 + std::exp(-out.data()[i]));
      break;
  }
  const auto xi = x.index;
  return push(std::move(out), [xi, kind](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    const Matrix& y = t.value_at(self);
    Matrix& dx = t.grad_at(xi);
    switch (kind) {
      case Activation::kRelu:
        for (std::size_t i = 0; i < g.size(); ++i)
          if (y.data()[i] > 0.0) dx.data()[i] += g.data()[i];
        break;
      case Activation::kTanh:
        for (std::size_t i = 0; i < g.size(); ++i)
          dx.data()[i] += g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
        break;
      case Activation::kSigmoid:
        for (std::size_t i = 0; i < g.size(); ++i)
          dx.data()[i] += g.data()[i] * y.data()[i] * (1.0 - y.data()[i]);
        break;
    }
  });
}

NodeRef Tape::l2_normalize_rows(NodeRef x) {
  Matrix out = l2_normalize_rows_value(value(x));
  // Recover the norms for backward: inv_norm_i = out_ij / x_ij at the largest
  // |x| entry would be unstable; store them explicitly instead.
  const Matrix& xv = value(x);
  std::vector<double> inv_norms(xv.rows());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    double sq = 0.0;
    for (double v : xv.row(i)) sq += v * v;
    inv_norms[i] = 1.0 / std::sqrt(sq);
  }
  const auto xi = x.index;
  return push(std::move(out),
              [xi, inv_norms = std::move(inv_norms)](Tape& t, std::uint32_t self) {
                const Matrix& g = t.grad_at(self);
                const Matrix& y = t.value_at(self);
                Matrix& dx = t.grad_at(xi);
                for (std::size_t i = 0; i < g.rows(); ++i) {
                  double gy = 0.0;
                  for (std::size_t j = 0; j < g.cols(); ++j) gy += g(i, j) * y(i, j);
                  for (std::size_t j = 0; j < g.cols(); ++j)
                    dx(i, j) += inv_norms[i] * (g(i, j) - y(i, j) * gy);
                }
              });
}

NodeRef Tape::log_softmax_rows(NodeRef logits, double temperature) {
  Matrix out = log_softmax_rows_value(value(logits), temperature);
  const auto xi = logits.index;
  return push(std::move(out), [xi, temperature](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    const Matrix& y = t.value_at(self);  // log-probabilities
    Matrix& dx = t.grad_at(xi);
    const double inv_tau = 1.0 / temperature;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) gsum += g(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j)
        dx(i, j) += inv_tau * (g(i, j) - std::exp(y(i, j)) * gsum);
    }
  });
}

NodeRef Tape::softmax_rows(NodeRef logits, double temperature) {
  Matrix out = softmax_rows_value(value(logits), temperature);
  const auto xi = logits.index;
  return push(std::move(out), [xi, temperature](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    const Matrix& y = t.value_at(self);  // probabilities
    Matrix& dx = t.grad_at(xi);
    const double inv_tau = 1.0 / temperature;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j)
        dx(i, j) += inv_tau * y(i, j) * (g(i, j) - dot);
    }
  });
}

NodeRef Tape::matmul(NodeRef a, NodeRef b) {
  Matrix out = swamp::matmul(value(a), value(b));
  const auto ai = a.index, bi = b.index;
  return push(std::move(out), [ai, bi](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    add_in_place(t.grad_at(ai), swamp::matmul_nt(g, t.value_at(bi)));
    add_in_place(t.grad_at(bi), swamp::matmul_tn(t.value_at(ai), g));
  });
}

NodeRef Tape::matmul_nt(NodeRef a, NodeRef b) {
  Matrix out = swamp::matmul_nt(value(a), value(b));
  const auto ai = a.index, bi = b.index;
  return push(std::move(out), [ai, bi](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    add_in_place(t.grad_at(ai), swamp::matmul(g, t.value_at(bi)));
    add_in_place(t.grad_at(bi), swamp::matmul_tn(g, t.value_at(ai)));
  });
}

NodeRef Tape::add(NodeRef a, NodeRef b) {
  Matrix out = swamp::add(value(a), value(b));
  const auto ai = a.index, bi = b.index;
  return push(std::move(out), [ai, bi](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    add_in_place(t.grad_at(ai), g);
    add_in_place(t.grad_at(bi), g);
  });
}

NodeRef Tape::scale(NodeRef x, double c) {
  Matrix out = scaled(value(x), c);
  const auto xi = x.index;
  return push(std::move(out), [xi, c](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    Matrix& dx = t.grad_at(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dx.data()[i] += c * g.data()[i];
  });
}

NodeRef Tape::sum(NodeRef x) {
  const Matrix& xv = value(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv.data()[i];
  Matrix out(1, 1);
  out(0, 0) = acc;
  const auto xi = x.index;
  return push(std::move(out), [xi](Tape& t, std::uint32_t self) {
    const double g = t.grad_at(self)(0, 0);
    Matrix& dx = t.grad_at(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += g;
  });
}

NodeRef Tape::mean(NodeRef x) {
  const Matrix& xv = value(x);
  if (xv.size() == 0) throw ShapeError("mean: empty matrix");
  const double inv_n = 1.0 / static_cast<double>(xv.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv.data()[i];
  Matrix out(1, 1);
  out(0, 0) = acc * inv_n;
  const auto xi = x.index;
  return push(std::move(out), [xi, inv_n](Tape& t, std::uint32_t self) {
    const double g = t.grad_at(self)(0, 0) * inv_n;
    Matrix& dx = t.grad_at(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += g;
  });
}

NodeRef Tape::square(NodeRef x) {
  const Matrix& xv = value(x);
  Matrix out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= out.data()[i];
  const auto xi = x.index;
  return push(std::move(out), [xi](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    const Matrix& xin = t.value_at(xi);
    Matrix& dx = t.grad_at(xi);
    for (std::size_t i = 0; i < g.size(); ++i)
      dx.data()[i] += 2.0 * xin.data()[i] * g.data()[i];
  });
}

NodeRef Tape::reshape(NodeRef x, std::size_t rows, std::size_t cols) {
  const Matrix& xv = value(x);
  if (rows * cols != xv.size()) {
    throw ShapeError(fmt::format("reshape: cannot view {} as {}x{}", xv.shape_str(),
                                 rows, cols));
  }
  Matrix out(rows, cols);
  std::copy(xv.data(), xv.data() + xv.size(), out.data());
  const auto xi = x.index;
  return push(std::move(out), [xi](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad_at(self);
    Matrix& dx = t.grad_at(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dx.data()[i] += g.data()[i];
  });
}

NodeRef Tape::contrastive_loss(NodeRef similarity, double margin) {
  const Matrix& s = value(similarity);
  if (s.rows() != s.cols()) {
    throw ShapeError(fmt::format("contrastive_loss: similarity must be square, got {}",
                                 s.shape_str()));
  }
  const std::size_t n = s.rows();
  if (n == 0) throw ShapeError("contrastive_loss: empty similarity matrix");

  // Per-anchor active hinge terms: (diag index, hardest negative index, axis).
  struct Term {
    std::uint32_t i, j;
    bool row_axis;
  };
  std::vector<Term> active;
  double loss = 0.0;
  if (n > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      double row_max = -std::numeric_limits<double>::infinity();
      double col_max = -std::numeric_limits<double>::infinity();
      std::size_t row_arg = 0, col_arg = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (s(i, j) > row_max) {
          row_max = s(i, j);
          row_arg = j;
        }
        if (s(j, i) > col_max) {
          col_max = s(j, i);
          col_arg = j;
        }
      }
      const double row_hinge = margin - (s(i, i) - row_max);
      if (row_hinge > 0.0) {
        loss += row_hinge;
        active.push_back({static_cast<std::uint32_t>(i),
                          static_cast<std::uint32_t>(row_arg), true});
      }
      const double col_hinge = margin - (s(i, i) - col_max);
      if (col_hinge > 0.0) {
        loss += col_hinge;
        active.push_back({static_cast<std::uint32_t>(i),
                          static_cast<std::uint32_t>(col_arg), false});
      }
    }
    loss /= static_cast<double>(n);
  }
  Matrix out(1, 1);
  out(0, 0) = loss;
  const auto si = similarity.index;
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  return push(std::move(out),
              [si, inv_n, active = std::move(active)](Tape& t, std::uint32_t self) {
                const double g = t.grad_at(self)(0, 0) * inv_n;
                Matrix& ds = t.grad_at(si);
                for (const auto& term : active) {
                  ds(term.i, term.i) -= g;
                  if (term.row_axis) {
                    ds(term.i, term.j) += g;
                  } else {
                    ds(term.j, term.i) += g;
                  }
                }
              });
}

NodeRef Tape::swamp_loss(NodeRef log_post_a, NodeRef log_post_b, Matrix targets_a,
                         Matrix targets_b) {
  const Matrix& la = value(log_post_a);
  const Matrix& lb = value(log_post_b);
  require_same_shape(la, targets_a, "swamp_loss (modality A)");
  require_same_shape(lb, targets_b, "swamp_loss (modality B)");
  if (la.rows() != lb.rows()) {
    throw ShapeError("swamp_loss: modality batch sizes disagree");
  }
  const std::size_t batch = la.rows();
  if (batch == 0) throw ShapeError("swamp_loss: empty batch");

  auto check_targets = [](const Matrix& q, const char* which) {
    for (std::size_t i = 0; i < q.rows(); ++i) {
      double mass = 0.0;
      for (double v : q.row(i)) mass += v;
      if (!(mass > 1e-12)) {
        throw NumericError(fmt::format(
            "swamp_loss: degenerate target, {} row {} has mass {:.3e}", which, i, mass));
      }
    }
  };
  check_targets(targets_a, "q^A");
  check_targets(targets_b, "q^B");

  const double inv_b = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (std::size_t i = 0; i < la.size(); ++i)
    loss -= targets_a.data()[i] * la.data()[i];
  for (std::size_t i = 0; i < lb.size(); ++i)
    loss -= targets_b.data()[i] * lb.data()[i];
  loss *= inv_b;

  Matrix out(1, 1);
  out(0, 0) = loss;
  const auto ai = log_post_a.index, bi = log_post_b.index;
  return push(std::move(out),
              [ai, bi, inv_b, qa = std::move(targets_a), qb = std::move(targets_b)](
                  Tape& t, std::uint32_t self) {
                const double g = t.grad_at(self)(0, 0) * inv_b;
                Matrix& da = t.grad_at(ai);
                Matrix& db = t.grad_at(bi);
                for (std::size_t i = 0; i < da.size(); ++i)
                  da.data()[i] -= g * qa.data()[i];
                for (std::size_t i = 0; i < db.size(); ++i)
                  db.data()[i] -= g * qb.data()[i];
              });
}

}  // namespace swamp
