#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "graphrec/sparse.hpp"

namespace graphrec::ad {

enum class Op : std::uint8_t {
  input,
  sparse_matmul,    // S * X, S fixed
  weighted_spmm,    // pattern(S) with per-entry weights w (nnz x 1) times X
  dense_matmul,     // X * Y or X * Y^T
  add,
  hadamard,
  leaky_relu,
  sigmoid,
  tanh,
  exp,
  log,
  softplus,
  inv_sqrt,         // x^{-1/2} for x > 0, else 0
  l2norm_rows,
  softmax_rows,
  concat_cols,
  slice_cols,
  gather_rows,
  scale,
  div_scalar,
  row_sum,          // n x m -> n x 1
  reduce_sum,       // -> 1 x 1
};

inline constexpr double kLeakyReluSlope = 0.2;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

using IndexList = std::shared_ptr<const std::vector<std::int32_t>>;

/// Define-by-run tape. Nodes are appended in evaluation order, so every node's
/// parents precede it; `replay()` re-evaluates the recorded graph from the
/// current leaf values.
class Tape {
 public:
  struct Node {
    Op op = Op::input;
    std::vector<int> parents;
    Matrix value;
    Matrix grad;
    bool trainable = false;
    bool needs_grad = false;
    std::shared_ptr<const SparseMatrix> sparse;
    IndexList indices;
    double scalar = 0.0;
    Eigen::Index offset = 0;
    Eigen::Index width = 0;
    bool transpose_rhs = false;
  };

  Var input(Matrix value, bool trainable = false);
  Var constant(Matrix value) { return input(std::move(value), false); }
  Var parameter(Matrix value) { return input(std::move(value), true); }

  /// Reverse sweep from a 1x1 loss. Throws NumericalError for non-scalar losses.
  void backward(Var loss);

  const Matrix& value(Var v) const { return node(v).value; }
  /// Gradient of the last backward() loss w.r.t. v; zero when v does not influence it.
  const Matrix& grad(Var v) const { return node(v).grad; }
  std::vector<Var> trainable();

  /// Mutable access to an input leaf; call replay() after editing.
  Matrix& leaf_value(Var leaf);
  void replay();
  /// Hash of the activation pattern of every leaky_relu input (used to skip
  /// finite-difference points that cross the kink).
  std::uint64_t kink_signature() const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }

  /// Appends an operation node and evaluates it. Used by the primitive builders.
  Var record(Node n);

 private:
  void evaluate(Node& n);
  void propagate(const Node& n);

  std::vector<Node> nodes_;
};

// Primitives. Shapes are checked eagerly; mismatches throw DataError.
Var sparse_matmul(std::shared_ptr<const SparseMatrix> s, Var x);
Var weighted_spmm(std::shared_ptr<const SparseMatrix> pattern, Var weights, Var x);
Var matmul(Var a, Var b, bool transpose_b = false);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var leaky_relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var exp(Var x);
Var log(Var x);
Var softplus(Var x);
Var inv_sqrt(Var x);
Var l2norm_rows(Var x);
Var softmax_rows(Var x);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var x, Eigen::Index offset, Eigen::Index width);
Var gather_rows(Var x, IndexList rows);
Var scale(Var x, double factor);
Var div_scalar(Var x, double divisor);
Var row_sum(Var x);
Var reduce_sum(Var x);
Var mean(Var x);

/// Central-difference check over every trainable scalar. Returns the maximum of
/// |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|). Coordinates whose perturbation
/// flips a leaky_relu activation are skipped. Throws NumericalError on NaN.
struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};
GradientCheck check_gradients(Tape& tape, Var loss, double eps = 1e-4);

}  // namespace graphrec::ad
