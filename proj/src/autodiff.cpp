#include "semparse/autodiff.hpp"

#include <cmath>
#include <limits>

#include "semparse/error.hpp"

namespace semparse::ad {

namespace {

thread_local std::optional<std::string> g_fault;

double fault_sign(const char* op) { return g_fault && *g_fault == op ? -1.0 : 1.0; }

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

}  // namespace

void set_backward_fault(std::optional<std::string> op) { g_fault = std::move(op); }

Var Tape::push(Matrix value, bool requires_grad) {
  Node node;
  node.own = std::move(value);
  node.requires_grad = record_ && requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false); }

Var Tape::parameter(const Matrix& value, bool requires_grad) {
  Node node;
  node.external = &value;
  node.requires_grad = record_ && requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(Var v) const { return nodes_[v.id].value(); }

const Matrix* Tape::grad(Var v) const {
  const auto& node = nodes_[v.id];
  return node.has_grad ? &node.grad : nullptr;
}

Matrix& Tape::grad_ref(Var v) {
  auto& node = nodes_[v.id];
  if (!node.has_grad) {
    const auto& val = node.value();
    node.grad = Matrix::Zero(val.rows(), val.cols());
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::accumulate(Var v, const Matrix& g) { grad_ref(v) += g; }

template <typename Expr>
void Tape::accumulate_expr(Var v, const Expr& g) {
  grad_ref(v).noalias() += g;
}

template <typename F>
void Tape::on_backward(Var out, F&& f) {
  if (nodes_[out.id].requires_grad) nodes_[out.id].back = std::forward<F>(f);
}

Var Tape::matmul(Var a, Var b) {
  Var out = push(value(a) * value(b), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const double s = fault_sign("matmul");
    const Matrix& g = nodes_[out.id].grad;
    if (needs(a)) accumulate_expr(a, s * g * value(b).transpose());
    if (needs(b)) accumulate_expr(b, s * value(a).transpose() * g);
  });
  return out;
}

Var Tape::matmul_nt(Var a, Var b) {
  Var out = push(value(a) * value(b).transpose(), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const double s = fault_sign("matmul_nt");
    const Matrix& g = nodes_[out.id].grad;
    if (needs(a)) accumulate_expr(a, s * g * value(b));
    if (needs(b)) accumulate_expr(b, s * g.transpose() * value(a));
  });
  return out;
}

Var Tape::add(Var a, Var b) {
  Var out = push(value(a) + value(b), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const double s = fault_sign("add");
    const Matrix& g = nodes_[out.id].grad;
    if (needs(a)) accumulate_expr(a, s * g);
    if (needs(b)) accumulate_expr(b, s * g);
  });
  return out;
}

Var Tape::add_row(Var a, Var row) {
  Matrix v = value(a);
  v.rowwise() += value(row).row(0);
  Var out = push(std::move(v), needs(a) || needs(row));
  on_backward(out, [this, a, row, out] {
    const double s = fault_sign("add_row");
    const Matrix& g = nodes_[out.id].grad;
    if (needs(a)) accumulate_expr(a, s * g);
    if (needs(row)) accumulate_expr(row, s * g.colwise().sum());
  });
  return out;
}

Var Tape::scale(Var a, double factor) {
  Var out = push(value(a) * factor, needs(a));
  on_backward(out, [this, a, out, factor] {
    accumulate_expr(a, fault_sign("scale") * factor * nodes_[out.id].grad);
  });
  return out;
}

Var Tape::gather_rows(Var table, std::span<const int> rows) {
  const Matrix& t = value(table);
  Matrix v(static_cast<Eigen::Index>(rows.size()), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= t.rows()) {
      throw Error(Errc::IdOutOfRange, "row " + std::to_string(rows[i]) + " outside table of " +
                                          std::to_string(t.rows()) + " rows");
    }
    v.row(static_cast<Eigen::Index>(i)) = t.row(rows[i]);
  }
  Var out = push(std::move(v), needs(table));
  on_backward(out, [this, table, out, idx = std::vector<int>(rows.begin(), rows.end())] {
    const double s = fault_sign("gather_rows");
    const Matrix& g = nodes_[out.id].grad;
    Matrix& dt = grad_ref(table);
    for (std::size_t i = 0; i < idx.size(); ++i) dt.row(idx[i]) += s * g.row(static_cast<Eigen::Index>(i));
  });
  return out;
}

Var Tape::concat_rows(Var top, Var bottom) {
  const Matrix& a = value(top);
  const Matrix& b = value(bottom);
  Matrix v(a.rows() + b.rows(), b.cols());
  v.topRows(a.rows()) = a;
  v.bottomRows(b.rows()) = b;
  Var out = push(std::move(v), needs(top) || needs(bottom));
  on_backward(out, [this, top, bottom, out] {
    const double s = fault_sign("concat_rows");
    const Matrix& g = nodes_[out.id].grad;
    const auto n_top = value(top).rows();
    if (needs(top)) accumulate_expr(top, s * g.topRows(n_top));
    if (needs(bottom)) accumulate_expr(bottom, s * g.bottomRows(g.rows() - n_top));
  });
  return out;
}

Var Tape::slice_cols(Var a, int start, int count) {
  Var out = push(value(a).middleCols(start, count), needs(a));
  on_backward(out, [this, a, out, start, count] {
    grad_ref(a).middleCols(start, count) += fault_sign("slice_cols") * nodes_[out.id].grad;
  });
  return out;
}

Var Tape::slice_rows(Var a, int start, int count) {
  Var out = push(value(a).middleRows(start, count), needs(a));
  on_backward(out, [this, a, out, start, count] {
    grad_ref(a).middleRows(start, count) += fault_sign("slice_rows") * nodes_[out.id].grad;
  });
  return out;
}

Var Tape::concat_cols(std::span<const Var> parts) {
  Eigen::Index cols = 0;
  bool req = false;
  for (Var p : parts) {
    cols += value(p).cols();
    req = req || needs(p);
  }
  Matrix v(value(parts.front()).rows(), cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    v.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  Var out = push(std::move(v), req);
  on_backward(out, [this, out, ps = std::vector<Var>(parts.begin(), parts.end())] {
    const double s = fault_sign("concat_cols");
    const Matrix& g = nodes_[out.id].grad;
    Eigen::Index at = 0;
    for (Var p : ps) {
      const auto c = value(p).cols();
      if (needs(p)) accumulate_expr(p, s * g.middleCols(at, c));
      at += c;
    }
  });
  return out;
}

Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Matrix& xv = value(x);
  const auto n = xv.cols();
  Matrix xhat(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix y = xhat.array().rowwise() * value(gamma).row(0).array();
  y.rowwise() += value(beta).row(0);
  Var out = push(std::move(y), needs(x) || needs(gamma) || needs(beta));
  on_backward(out, [this, x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
    const double s = fault_sign("layer_norm");
    const Matrix& g = nodes_[out.id].grad;
    if (needs(gamma)) accumulate_expr(gamma, s * (g.array() * xhat.array()).colwise().sum().matrix());
    if (needs(beta)) accumulate_expr(beta, s * g.colwise().sum());
    if (needs(x)) {
      const Matrix dxhat = g.array().rowwise() * value(gamma).row(0).array();
      Matrix& dx = grad_ref(x);
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double m1 = dxhat.row(r).mean();
        const double m2 = (dxhat.row(r).array() * xhat.row(r).array()).mean();
        dx.row(r).array() += s * inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
      }
    }
  });
  return out;
}

Var Tape::gelu(Var x) {
  const Matrix& xv = value(x);
  Matrix y = xv.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))); });
  Var out = push(std::move(y), needs(x));
  on_backward(out, [this, x, out] {
    const double s = fault_sign("gelu");
    const Matrix d = value(x).unaryExpr([](double v) {
      const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
    });
    accumulate_expr(x, s * (nodes_[out.id].grad.array() * d.array()).matrix());
  });
  return out;
}

Var Tape::softmax_rows(Var x, bool causal) {
  const Matrix& xv = value(x);
  Matrix y = Matrix::Zero(xv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const Eigen::Index n = causal ? std::min<Eigen::Index>(r + 1, xv.cols()) : xv.cols();
    const double mx = xv.row(r).head(n).maxCoeff();
    auto e = (xv.row(r).head(n).array() - mx).exp();
    y.row(r).head(n) = e / e.sum();
  }
  Var out = push(std::move(y), needs(x));
  on_backward(out, [this, x, out] {
    const double s = fault_sign("softmax_rows");
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& yv = value(out);
    Matrix& dx = grad_ref(x);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double dot = (g.row(r).array() * yv.row(r).array()).sum();
      dx.row(r).array() += s * yv.row(r).array() * (g.row(r).array() - dot);
    }
  });
  return out;
}

Var Tape::cross_entropy_sum(Var logits, std::span<const int> targets) {
  const Matrix& lv = value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != lv.rows()) {
    throw Error(Errc::LengthMismatch, "cross entropy: one target per row required");
  }
  Matrix probs(lv.rows(), lv.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < lv.rows(); ++r) {
    const double mx = lv.row(r).maxCoeff();
    const auto e = (lv.row(r).array() - mx).exp();
    const double z = e.sum();
    probs.row(r) = e / z;
    total -= lv(r, targets[r]) - mx - std::log(z);
  }
  Matrix v(1, 1);
  v(0, 0) = total;
  Var out = push(std::move(v), needs(logits));
  on_backward(out, [this, logits, out, probs = std::move(probs), t = std::vector<int>(targets.begin(), targets.end())] {
    const double g = fault_sign("cross_entropy") * nodes_[out.id].grad(0, 0);
    Matrix d = probs;
    for (std::size_t r = 0; r < t.size(); ++r) d(static_cast<Eigen::Index>(r), t[r]) -= 1.0;
    accumulate_expr(logits, g * d);
  });
  return out;
}

Var Tape::sum(std::span<const Var> scalars) {
  Matrix v = Matrix::Zero(1, 1);
  bool req = false;
  for (Var s : scalars) {
    v(0, 0) += value(s)(0, 0);
    req = req || needs(s);
  }
  Var out = push(std::move(v), req);
  on_backward(out, [this, out, ss = std::vector<Var>(scalars.begin(), scalars.end())] {
    const Matrix& g = nodes_[out.id].grad;
    for (Var s : ss) {
      if (needs(s)) accumulate(s, fault_sign("sum") * g);
    }
  });
  return out;
}

void Tape::backward(Var loss, double scale) {
  if (!record_) throw Error(Errc::InvalidArgument, "backward on a tape that does not record");
  const auto& lv = value(loss);
  grad_ref(loss) = Matrix::Constant(lv.rows(), lv.cols(), scale);
  for (int i = loss.id; i >= 0; --i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.back && node.has_grad) node.back();
  }
}

}  // namespace semparse::ad
