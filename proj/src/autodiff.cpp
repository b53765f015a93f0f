#include "graphrec/autodiff.hpp"

#include <cmath>
#include <limits>

#include "graphrec/error.hpp"

namespace graphrec::ad {

namespace {

constexpr double kNormFloor = 1e-12;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw DataError("variable is not attached to a tape");
  return *a.tape;
}

Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw DataError("variables live on different tapes");
  return tape_of(a);
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError(std::string(op) + ": shape mismatch");
}

Tape::Node make(Op op, std::initializer_list<Var> parents) {
  Tape::Node n;
  n.op = op;
  for (auto p : parents) n.parents.push_back(p.id);
  return n;
}

Var unary(Op op, Var x) { return tape_of(x).record(make(op, {x})); }

}  // namespace

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::input(Matrix value, bool trainable) {
  Node n;
  n.op = Op::input;
  n.value = std::move(value);
  n.trainable = trainable;
  n.needs_grad = trainable;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Node n) {
  for (int p : n.parents) n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(p)].needs_grad;
  evaluate(n);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

std::vector<Var> Tape::trainable() {
  std::vector<Var> out;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (nodes_[k].trainable) out.push_back(Var{this, static_cast<int>(k)});
  }
  return out;
}

Matrix& Tape::leaf_value(Var leaf) {
  auto& n = nodes_.at(static_cast<std::size_t>(leaf.id));
  if (n.op != Op::input) throw DataError("leaf_value: not an input node");
  return n.value;
}

void Tape::replay() {
  for (auto& n : nodes_) {
    if (n.op != Op::input) evaluate(n);
  }
}

std::uint64_t Tape::kink_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : nodes_) {
    if (n.op != Op::leaky_relu) continue;
    const Matrix& x = nodes_[static_cast<std::size_t>(n.parents[0])].value;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      h ^= x.data()[k] > 0.0 ? 1u : 2u;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void Tape::evaluate(Node& n) {
  auto in = [&](std::size_t k) -> const Matrix& { return nodes_[static_cast<std::size_t>(n.parents[k])].value; };
  switch (n.op) {
    case Op::input:
      break;
    case Op::sparse_matmul:
      n.value = n.sparse->multiply(in(0));
      break;
    case Op::weighted_spmm: {
      const auto& s = *n.sparse;
      const Matrix& w = in(0);
      const Matrix& x = in(1);
      n.value = Matrix::Zero(s.rows(), x.cols());
      auto offsets = s.row_offsets();
      auto cols = s.col_indices();
      for (std::int64_t r = 0; r < s.rows(); ++r) {
        for (std::int64_t k = offsets[r]; k < offsets[r + 1]; ++k) n.value.row(r).noalias() += w(k, 0) * x.row(cols[k]);
      }
      break;
    }
    case Op::dense_matmul:
      if (n.transpose_rhs) {
        n.value.noalias() = in(0) * in(1).transpose();
      } else {
        n.value.noalias() = in(0) * in(1);
      }
      break;
    case Op::add:
      n.value = in(0) + in(1);
      break;
    case Op::hadamard:
      n.value = in(0).cwiseProduct(in(1));
      break;
    case Op::leaky_relu:
      n.value = in(0).unaryExpr([](double x) { return x > 0.0 ? x : kLeakyReluSlope * x; });
      break;
    case Op::sigmoid:
      n.value = in(0).unaryExpr([](double x) { return stable_sigmoid(x); });
      break;
    case Op::tanh:
      n.value = in(0).array().tanh().matrix();
      break;
    case Op::exp:
      n.value = in(0).array().exp().matrix();
      break;
    case Op::log:
      n.value = in(0).array().log().matrix();
      break;
    case Op::softplus:
      n.value = in(0).unaryExpr([](double x) { return stable_softplus(x); });
      break;
    case Op::inv_sqrt:
      n.value = in(0).unaryExpr([](double x) { return x > 0.0 ? 1.0 / std::sqrt(x) : 0.0; });
      break;
    case Op::l2norm_rows: {
      const Matrix& x = in(0);
      n.value.resize(x.rows(), x.cols());
      for (Eigen::Index r = 0; r < x.rows(); ++r) n.value.row(r) = x.row(r) / std::max(x.row(r).norm(), kNormFloor);
      break;
    }
    case Op::softmax_rows: {
      const Matrix& x = in(0);
      n.value.resize(x.rows(), x.cols());
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double m = x.row(r).maxCoeff();
        auto e = (x.row(r).array() - m).exp();
        n.value.row(r) = (e / e.sum()).matrix();
      }
      break;
    }
    case Op::concat_cols: {
      Eigen::Index rows = in(0).rows();
      Eigen::Index cols = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) cols += in(k).cols();
      n.value.resize(rows, cols);
      Eigen::Index at = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        n.value.middleCols(at, in(k).cols()) = in(k);
        at += in(k).cols();
      }
      break;
    }
    case Op::slice_cols:
      n.value = in(0).middleCols(n.offset, n.width);
      break;
    case Op::gather_rows: {
      const Matrix& x = in(0);
      const auto& idx = *n.indices;
      n.value.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
      for (std::size_t r = 0; r < idx.size(); ++r) n.value.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
      break;
    }
    case Op::scale:
      n.value = n.scalar * in(0);
      break;
    case Op::div_scalar:
      n.value = in(0) / n.scalar;
      break;
    case Op::row_sum:
      n.value = in(0).rowwise().sum();
      break;
    case Op::reduce_sum:
      n.value = Matrix::Constant(1, 1, in(0).sum());
      break;
  }
}

void Tape::propagate(const Node& n) {
  auto in = [&](std::size_t k) -> const Matrix& { return nodes_[static_cast<std::size_t>(n.parents[k])].value; };
  auto accum = [&](std::size_t k) -> Matrix* {
    auto& p = nodes_[static_cast<std::size_t>(n.parents[k])];
    return p.needs_grad ? &p.grad : nullptr;
  };
  const Matrix& g = n.grad;
  switch (n.op) {
    case Op::input:
      break;
    case Op::sparse_matmul:
      if (auto* dx = accum(0)) *dx += n.sparse->transpose_multiply(g);
      break;
    case Op::weighted_spmm: {
      const auto& s = *n.sparse;
      const Matrix& w = in(0);
      const Matrix& x = in(1);
      Matrix* dw = accum(0);
      Matrix* dx = accum(1);
      auto offsets = s.row_offsets();
      auto cols = s.col_indices();
      for (std::int64_t r = 0; r < s.rows(); ++r) {
        for (std::int64_t k = offsets[r]; k < offsets[r + 1]; ++k) {
          if (dw) (*dw)(k, 0) += g.row(r).dot(x.row(cols[k]));
          if (dx) dx->row(cols[k]).noalias() += w(k, 0) * g.row(r);
        }
      }
      break;
    }
    case Op::dense_matmul:
      if (n.transpose_rhs) {
        if (auto* da = accum(0)) da->noalias() += g * in(1);
        if (auto* db = accum(1)) db->noalias() += g.transpose() * in(0);
      } else {
        if (auto* da = accum(0)) da->noalias() += g * in(1).transpose();
        if (auto* db = accum(1)) db->noalias() += in(0).transpose() * g;
      }
      break;
    case Op::add:
      if (auto* da = accum(0)) *da += g;
      if (auto* db = accum(1)) *db += g;
      break;
    case Op::hadamard:
      if (auto* da = accum(0)) *da += g.cwiseProduct(in(1));
      if (auto* db = accum(1)) *db += g.cwiseProduct(in(0));
      break;
    case Op::leaky_relu:
      if (auto* dx = accum(0)) {
        *dx += g.cwiseProduct(in(0).unaryExpr([](double x) { return x > 0.0 ? 1.0 : kLeakyReluSlope; }));
      }
      break;
    case Op::sigmoid:
      if (auto* dx = accum(0)) *dx += g.cwiseProduct(n.value.cwiseProduct((1.0 - n.value.array()).matrix()));
      break;
    case Op::tanh:
      if (auto* dx = accum(0)) *dx += g.cwiseProduct((1.0 - n.value.array().square()).matrix());
      break;
    case Op::exp:
      if (auto* dx = accum(0)) *dx += g.cwiseProduct(n.value);
      break;
    case Op::log:
      if (auto* dx = accum(0)) *dx += g.cwiseQuotient(in(0));
      break;
    case Op::softplus:
      if (auto* dx = accum(0)) *dx += g.cwiseProduct(in(0).unaryExpr([](double x) { return stable_sigmoid(x); }));
      break;
    case Op::inv_sqrt:
      if (auto* dx = accum(0)) {
        *dx += g.cwiseProduct(in(0).unaryExpr([](double x) { return x > 0.0 ? -0.5 * std::pow(x, -1.5) : 0.0; }));
      }
      break;
    case Op::l2norm_rows:
      if (auto* dx = accum(0)) {
        const Matrix& x = in(0);
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          double norm = x.row(r).norm();
          if (norm > kNormFloor) {
            auto y = n.value.row(r);
            dx->row(r) += (g.row(r) - y * y.dot(g.row(r))) / norm;
          } else {
            dx->row(r) += g.row(r) / kNormFloor;
          }
        }
      }
      break;
    case Op::softmax_rows:
      if (auto* dx = accum(0)) {
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          auto y = n.value.row(r);
          double inner = y.dot(g.row(r));
          dx->row(r) += y.cwiseProduct((g.row(r).array() - inner).matrix());
        }
      }
      break;
    case Op::concat_cols: {
      Eigen::Index at = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        Eigen::Index w = in(k).cols();
        if (auto* dx = accum(k)) *dx += g.middleCols(at, w);
        at += w;
      }
      break;
    }
    case Op::slice_cols:
      if (auto* dx = accum(0)) dx->middleCols(n.offset, n.width) += g;
      break;
    case Op::gather_rows:
      if (auto* dx = accum(0)) {
        const auto& idx = *n.indices;
        for (std::size_t r = 0; r < idx.size(); ++r) dx->row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
      }
      break;
    case Op::scale:
      if (auto* dx = accum(0)) *dx += n.scalar * g;
      break;
    case Op::div_scalar:
      if (auto* dx = accum(0)) *dx += g / n.scalar;
      break;
    case Op::row_sum:
      if (auto* dx = accum(0)) dx->colwise() += g.col(0);
      break;
    case Op::reduce_sum:
      if (auto* dx = accum(0)) dx->array() += g(0, 0);
      break;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw DataError("backward: loss belongs to another tape");
  auto& root = nodes_.at(static_cast<std::size_t>(loss.id));
  if (root.value.rows() != 1 || root.value.cols() != 1) throw NumericalError("backward: loss must be a 1x1 scalar");
  for (auto& n : nodes_) {
    if (n.needs_grad) {
      n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    } else {
      n.grad.resize(0, 0);
    }
  }
  if (!root.needs_grad) {
    // Constant loss: every trainable leaf gets a zero gradient.
    for (auto& n : nodes_) {
      if (n.trainable) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    }
    return;
  }
  root.grad(0, 0) = 1.0;
  for (int k = loss.id; k >= 0; --k) {
    const auto& n = nodes_[static_cast<std::size_t>(k)];
    if (n.needs_grad && n.op != Op::input) propagate(n);
  }
}

Var sparse_matmul(std::shared_ptr<const SparseMatrix> s, Var x) {
  if (s->cols() != x.rows()) throw DataError("sparse_matmul: shape mismatch");
  auto n = make(Op::sparse_matmul, {x});
  n.sparse = std::move(s);
  return tape_of(x).record(std::move(n));
}

Var weighted_spmm(std::shared_ptr<const SparseMatrix> pattern, Var weights, Var x) {
  if (pattern->cols() != x.rows()) throw DataError("weighted_spmm: shape mismatch");
  if (weights.rows() != pattern->nnz() || weights.cols() != 1) throw DataError("weighted_spmm: weights must be nnz x 1");
  auto n = make(Op::weighted_spmm, {weights, x});
  n.sparse = std::move(pattern);
  return same_tape(weights, x).record(std::move(n));
}

Var matmul(Var a, Var b, bool transpose_b) {
  if (a.cols() != (transpose_b ? b.cols() : b.rows())) throw DataError("matmul: shape mismatch");
  auto n = make(Op::dense_matmul, {a, b});
  n.transpose_rhs = transpose_b;
  return same_tape(a, b).record(std::move(n));
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  return same_tape(a, b).record(make(Op::add, {a, b}));
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var hadamard(Var a, Var b) {
  require_same_shape(a, b, "hadamard");
  return same_tape(a, b).record(make(Op::hadamard, {a, b}));
}

Var leaky_relu(Var x) { return unary(Op::leaky_relu, x); }
Var sigmoid(Var x) { return unary(Op::sigmoid, x); }
Var tanh(Var x) { return unary(Op::tanh, x); }
Var exp(Var x) { return unary(Op::exp, x); }
Var log(Var x) { return unary(Op::log, x); }
Var softplus(Var x) { return unary(Op::softplus, x); }
Var inv_sqrt(Var x) { return unary(Op::inv_sqrt, x); }
Var l2norm_rows(Var x) { return unary(Op::l2norm_rows, x); }
Var softmax_rows(Var x) { return unary(Op::softmax_rows, x); }
Var row_sum(Var x) { return unary(Op::row_sum, x); }
Var reduce_sum(Var x) { return unary(Op::reduce_sum, x); }

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DataError("concat_cols: no inputs");
  Tape::Node n;
  n.op = Op::concat_cols;
  for (auto p : parts) {
    if (p.tape != parts.front().tape || p.rows() != parts.front().rows()) throw DataError("concat_cols: row mismatch");
    n.parents.push_back(p.id);
  }
  return tape_of(parts.front()).record(std::move(n));
}

Var slice_cols(Var x, Eigen::Index offset, Eigen::Index width) {
  if (offset < 0 || width < 0 || offset + width > x.cols()) throw DataError("slice_cols: out of range");
  auto n = make(Op::slice_cols, {x});
  n.offset = offset;
  n.width = width;
  return tape_of(x).record(std::move(n));
}

Var gather_rows(Var x, IndexList rows) {
  for (auto r : *rows) {
    if (r < 0 || r >= x.rows()) throw DataError("gather_rows: index out of range");
  }
  auto n = make(Op::gather_rows, {x});
  n.indices = std::move(rows);
  return tape_of(x).record(std::move(n));
}

Var scale(Var x, double factor) {
  auto n = make(Op::scale, {x});
  n.scalar = factor;
  return tape_of(x).record(std::move(n));
}

Var div_scalar(Var x, double divisor) {
  if (divisor == 0.0) throw DataError("div_scalar: division by zero");
  auto n = make(Op::div_scalar, {x});
  n.scalar = divisor;
  return tape_of(x).record(std::move(n));
}

Var mean(Var x) { return scale(reduce_sum(x), 1.0 / static_cast<double>(x.value().size())); }

GradientCheck check_gradients(Tape& tape, Var loss, double eps) {
  auto scalar = [&]() {
    double v = tape.value(loss)(0, 0);
    if (!std::isfinite(v)) throw NumericalError("check_gradients: non-finite loss in forward pass");
    return v;
  };
  tape.replay();
  scalar();
  tape.backward(loss);
  const std::uint64_t base_signature = tape.kink_signature();

  GradientCheck result;
  for (Var leaf : tape.trainable()) {
    Matrix analytic = tape.grad(leaf);
    Matrix& value = tape.leaf_value(leaf);
    for (Eigen::Index k = 0; k < value.size(); ++k) {
      const double original = value.data()[k];
      value.data()[k] = original + eps;
      tape.replay();
      const double plus = scalar();
      const bool plus_ok = tape.kink_signature() == base_signature;
      value.data()[k] = original - eps;
      tape.replay();
      const double minus = scalar();
      const bool minus_ok = tape.kink_signature() == base_signature;
      value.data()[k] = original;
      if (!plus_ok || !minus_ok) {
        ++result.skipped;
        continue;
      }
      const double fd = (plus - minus) / (2.0 * eps);
      const double ad = analytic.data()[k];
      const double rel = std::abs(ad - fd) / std::max(1e-8, std::abs(ad) + std::abs(fd));
      result.max_relative_error = std::max(result.max_relative_error, rel);
      ++result.checked;
    }
  }
  tape.replay();
  tape.backward(loss);
  return result;
}

}  // namespace graphrec::ad
