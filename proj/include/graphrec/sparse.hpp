#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "graphrec/ingest.hpp"

namespace graphrec {

// Row-major dense storage; embedding tables are accessed row by row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Triplet {
  std::int64_t row;
  std::int64_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted within each row and
/// duplicates never appear. Immutable after construction.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::int64_t rows, std::int64_t cols, std::vector<std::int64_t> row_offsets,
               std::vector<std::int32_t> col_indices, std::vector<double> values);

  /// Duplicate coordinates are summed.
  static SparseMatrix from_triplets(std::int64_t rows, std::int64_t cols, std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const Matrix& dense, double drop_tolerance = 0.0);

  std::int64_t rows() const noexcept { return rows_; }
  std::int64_t cols() const noexcept { return cols_; }
  std::int64_t nnz() const noexcept { return static_cast<std::int64_t>(values_.size()); }

  std::span<const std::int64_t> row_offsets() const noexcept { return offsets_; }
  std::span<const std::int32_t> col_indices() const noexcept { return cols_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::int32_t> row_cols(std::int64_t r) const noexcept {
    return {cols_idx_.data() + offsets_[r], static_cast<std::size_t>(offsets_[r + 1] - offsets_[r])};
  }
  std::span<const double> row_values(std::int64_t r) const noexcept {
    return {values_.data() + offsets_[r], static_cast<std::size_t>(offsets_[r + 1] - offsets_[r])};
  }
  double coeff(std::int64_t r, std::int64_t c) const;

  Matrix to_dense() const;
  SparseMatrix transpose() const;
  /// Same sparsity pattern, values replaced.
  SparseMatrix with_values(std::vector<double> values) const;

  Matrix multiply(const Matrix& dense) const;            // this * dense
  Matrix transpose_multiply(const Matrix& dense) const;  // this^T * dense
  Vector multiply(const Vector& v) const;
  Vector transpose_multiply(const Vector& v) const;
  SparseMatrix multiply(const SparseMatrix& other) const;

  Vector row_sums() const;
  Vector col_sums() const;
  /// diag(row_scale) * this * diag(col_scale)
  SparseMatrix scaled(const Vector& row_scale, const Vector& col_scale) const;

  /// Coordinate dump, one "row col value" line per stored entry.
  void write_coordinate(std::ostream& out) const;

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<std::int64_t> offsets_{0};
  std::vector<std::int32_t> cols_idx_;
  std::vector<double> values_;
};

/// Row-at-a-time sparse product (left * right) with a dense accumulator, for
/// callers that post-process each row (top-k, thresholds) without storing the
/// full product. visit(col, value) is called in first-touch order.
class SparseRowProduct {
 public:
  explicit SparseRowProduct(std::int64_t width)
      : acc_(static_cast<std::size_t>(width), 0.0), used_(static_cast<std::size_t>(width), 0) {}

  template <typename Visit>
  void run(const SparseMatrix& left, const SparseMatrix& right, std::int64_t r, Visit&& visit) {
    touched_.clear();
    auto lc = left.row_cols(r);
    auto lv = left.row_values(r);
    for (std::size_t k = 0; k < lc.size(); ++k) {
      auto rc = right.row_cols(lc[k]);
      auto rv = right.row_values(lc[k]);
      for (std::size_t q = 0; q < rc.size(); ++q) {
        auto c = static_cast<std::size_t>(rc[q]);
        if (!used_[c]) {
          used_[c] = 1;
          touched_.push_back(rc[q]);
        }
        acc_[c] += lv[k] * rv[q];
      }
    }
    for (auto c : touched_) {
      visit(c, acc_[static_cast<std::size_t>(c)]);
      acc_[static_cast<std::size_t>(c)] = 0.0;
      used_[static_cast<std::size_t>(c)] = 0;
    }
  }

 private:
  std::vector<double> acc_;
  std::vector<char> used_;
  std::vector<std::int32_t> touched_;
};

struct DegreeVectors {
  Vector users;
  Vector items;
};

/// Binary |U| x |I| matrix R from the interaction pairs.
SparseMatrix build_interaction_matrix(const InteractionSet& train);

/// Symmetric block adjacency [[0, R], [R^T, 0]]; users occupy the first |U| nodes.
SparseMatrix build_adjacency(const SparseMatrix& interactions);

/// D^{-1/2} A D^{-1/2}; zero-degree rows stay zero.
SparseMatrix sym_normalize(const SparseMatrix& adjacency);

/// D_U^{-1/2} R D_I^{-1/2} on the rectangular block.
SparseMatrix normalize_bipartite(const SparseMatrix& interactions);

DegreeVectors degrees(const SparseMatrix& interactions);

/// x^{-1/2} for x > 0, zero otherwise.
Vector inv_sqrt_or_zero(const Vector& x);

}  // namespace graphrec
