#pragma once

// A small reverse-mode differentiation tape over dense row-major matrices.
// Every op records its output value and, when any input requires a
// gradient, a closure that pushes the output gradient back to its inputs.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semparse::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

struct Var {
  int id = -1;
};

class Tape {
 public:
  /// With `record == false` no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf that refers to external storage; `value` must outlive the tape.
  Var parameter(const Matrix& value, bool requires_grad);

  const Matrix& value(Var v) const;
  /// Accumulated gradient, or nullptr if nothing flowed into `v`.
  const Matrix* grad(Var v) const;

  Var matmul(Var a, Var b);      // a * b
  Var matmul_nt(Var a, Var b);   // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);   // broadcast a 1xN row over every row of a
  Var scale(Var a, double s);
  Var gather_rows(Var table, std::span<const int> rows);
  Var concat_rows(Var top, Var bottom);
  Var slice_cols(Var a, int start, int count);
  Var concat_cols(std::span<const Var> parts);
  Var slice_rows(Var a, int start, int count);
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
  Var gelu(Var x);
  /// Row-wise softmax; with `causal`, entry (i, j) for j > i is masked out.
  Var softmax_rows(Var x, bool causal);
  /// Sum over rows of -log softmax(logits)[row, target[row]] as a 1x1 value.
  Var cross_entropy_sum(Var logits, std::span<const int> targets);
  Var sum(std::span<const Var> scalars);

  /// Seeds d(loss)/d(loss) = scale and runs every recorded closure in reverse.
  void backward(Var loss, double scale = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix own;
    const Matrix* external = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::function<void()> back;

    const Matrix& value() const { return external ? *external : own; }
  };

  Var push(Matrix value, bool requires_grad);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Matrix& grad_ref(Var v);
  void accumulate(Var v, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(Var v, const Expr& g);
  template <typename F>
  void on_backward(Var out, F&& f);

  bool record_;
  std::vector<Node> nodes_;
};

/// Flips the sign of one op's backward rule on the current thread, e.g.
/// "gelu" or "layer_norm". Used to prove that gradient checks catch bugs.
void set_backward_fault(std::optional<std::string> op);

}  // namespace semparse::ad
