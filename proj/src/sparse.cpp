#include "graphrec/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "graphrec/error.hpp"

namespace graphrec {

SparseMatrix::SparseMatrix(std::int64_t rows, std::int64_t cols, std::vector<std::int64_t> row_offsets,
                           std::vector<std::int32_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      offsets_(std::move(row_offsets)),
      cols_idx_(std::move(col_indices)),
      values_(std::move(values)) {
  if (rows_ < 0 || cols_ < 0) throw DataError("negative sparse matrix shape");
  if (offsets_.size() != static_cast<std::size_t>(rows_ + 1) || offsets_.front() != 0) {
    throw DataError("row_offsets must have length rows + 1 and start at 0");
  }
  if (cols_idx_.size() != values_.size() || offsets_.back() != static_cast<std::int64_t>(values_.size())) {
    throw DataError("row_offsets, col_indices and values disagree on nnz");
  }
  for (std::int64_t r = 0; r < rows_; ++r) {
    if (offsets_[r + 1] < offsets_[r]) throw DataError("row_offsets must be nondecreasing");
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      if (cols_idx_[k] < 0 || cols_idx_[k] >= cols_) throw DataError("column index out of range");
      if (k > offsets_[r] && cols_idx_[k] <= cols_idx_[k - 1]) {
        throw DataError("column indices must be strictly increasing within a row");
      }
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::int64_t rows, std::int64_t cols, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(rows + 1), 0);
  std::vector<std::int32_t> col_idx;
  std::vector<double> vals;
  col_idx.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) throw DataError("triplet out of range");
    if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      vals.back() += t.value;
      continue;
    }
    col_idx.push_back(static_cast<std::int32_t>(t.col));
    vals.push_back(t.value);
    ++offsets[static_cast<std::size_t>(t.row + 1)];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return SparseMatrix(rows, cols, std::move(offsets), std::move(col_idx), std::move(vals));
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense, double drop_tolerance) {
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> vals;
  for (Eigen::Index r = 0; r < dense.rows(); ++r) {
    for (Eigen::Index c = 0; c < dense.cols(); ++c) {
      double v = dense(r, c);
      if (std::abs(v) > drop_tolerance) {
        col_idx.push_back(static_cast<std::int32_t>(c));
        vals.push_back(v);
      }
    }
    offsets.push_back(static_cast<std::int64_t>(vals.size()));
  }
  return SparseMatrix(dense.rows(), dense.cols(), std::move(offsets), std::move(col_idx), std::move(vals));
}

double SparseMatrix::coeff(std::int64_t r, std::int64_t c) const {
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::int32_t>(c));
  if (it == cols.end() || *it != c) return 0.0;
  return values_[static_cast<std::size_t>(offsets_[r] + (it - cols.begin()))];
}

Matrix SparseMatrix::to_dense() const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (std::int64_t r = 0; r < rows_; ++r) {
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) out(r, cols_idx_[k]) = values_[k];
  }
  return out;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(cols_ + 1), 0);
  for (auto c : cols_idx_) ++offsets[static_cast<std::size_t>(c) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<std::int64_t> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<std::int32_t> col_idx(values_.size());
  std::vector<double> vals(values_.size());
  // Rows visited in order, so each output row comes out sorted.
  for (std::int64_t r = 0; r < rows_; ++r) {
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      auto dst = cursor[static_cast<std::size_t>(cols_idx_[k])]++;
      col_idx[dst] = static_cast<std::int32_t>(r);
      vals[dst] = values_[k];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(offsets), std::move(col_idx), std::move(vals));
}

SparseMatrix SparseMatrix::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) throw DataError("with_values: nnz mismatch");
  SparseMatrix out = *this;
  out.values_ = std::move(values);
  return out;
}

Matrix SparseMatrix::multiply(const Matrix& dense) const {
  if (dense.rows() != cols_) throw DataError("spmm shape mismatch");
  Matrix out = Matrix::Zero(rows_, dense.cols());
  for (std::int64_t r = 0; r < rows_; ++r) {
    auto row = out.row(r);
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) row.noalias() += values_[k] * dense.row(cols_idx_[k]);
  }
  return out;
}

Matrix SparseMatrix::transpose_multiply(const Matrix& dense) const {
  if (dense.rows() != rows_) throw DataError("spmm^T shape mismatch");
  Matrix out = Matrix::Zero(cols_, dense.cols());
  for (std::int64_t r = 0; r < rows_; ++r) {
    auto src = dense.row(r);
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) out.row(cols_idx_[k]).noalias() += values_[k] * src;
  }
  return out;
}

Vector SparseMatrix::multiply(const Vector& v) const {
  if (v.size() != cols_) throw DataError("spmv shape mismatch");
  Vector out = Vector::Zero(rows_);
  for (std::int64_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) acc += values_[k] * v[cols_idx_[k]];
    out[r] = acc;
  }
  return out;
}

Vector SparseMatrix::transpose_multiply(const Vector& v) const {
  if (v.size() != rows_) throw DataError("spmv^T shape mismatch");
  Vector out = Vector::Zero(cols_);
  for (std::int64_t r = 0; r < rows_; ++r) {
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) out[cols_idx_[k]] += values_[k] * v[r];
  }
  return out;
}

SparseMatrix SparseMatrix::multiply(const SparseMatrix& other) const {
  if (other.rows_ != cols_) throw DataError("spgemm shape mismatch");
  // Gustavson's row-by-row product with a dense accumulator.
  std::vector<double> acc(static_cast<std::size_t>(other.cols_), 0.0);
  std::vector<char> used(static_cast<std::size_t>(other.cols_), 0);
  std::vector<std::int32_t> touched;
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> vals;
  for (std::int64_t r = 0; r < rows_; ++r) {
    touched.clear();
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      double a = values_[k];
      std::int64_t mid = cols_idx_[k];
      for (std::int64_t q = other.offsets_[mid]; q < other.offsets_[mid + 1]; ++q) {
        auto c = other.cols_idx_[q];
        if (!used[c]) {
          used[c] = 1;
          touched.push_back(c);
        }
        acc[c] += a * other.values_[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto c : touched) {
      col_idx.push_back(c);
      vals.push_back(acc[c]);
      acc[c] = 0.0;
      used[c] = 0;
    }
    offsets.push_back(static_cast<std::int64_t>(vals.size()));
  }
  return SparseMatrix(rows_, other.cols_, std::move(offsets), std::move(col_idx), std::move(vals));
}

Vector SparseMatrix::row_sums() const {
  Vector out = Vector::Zero(rows_);
  for (std::int64_t r = 0; r < rows_; ++r) {
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) out[r] += values_[k];
  }
  return out;
}

Vector SparseMatrix::col_sums() const {
  Vector out = Vector::Zero(cols_);
  for (std::size_t k = 0; k < values_.size(); ++k) out[cols_idx_[k]] += values_[k];
  return out;
}

SparseMatrix SparseMatrix::scaled(const Vector& row_scale, const Vector& col_scale) const {
  if (row_scale.size() != rows_ || col_scale.size() != cols_) throw DataError("scaled: shape mismatch");
  std::vector<double> vals(values_.size());
  for (std::int64_t r = 0; r < rows_; ++r) {
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      vals[k] = row_scale[r] * values_[k] * col_scale[cols_idx_[k]];
    }
  }
  return with_values(std::move(vals));
}

void SparseMatrix::write_coordinate(std::ostream& out) const {
  out.precision(17);
  for (std::int64_t r = 0; r < rows_; ++r) {
    for (std::int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      out << r << ' ' << cols_idx_[k] << ' ' << values_[k] << '\n';
    }
  }
}

SparseMatrix build_interaction_matrix(const InteractionSet& train) {
  std::vector<Triplet> triplets;
  triplets.reserve(train.pairs.size());
  for (const auto& p : train.pairs) triplets.push_back({p.user, p.item, 1.0});
  auto m = SparseMatrix::from_triplets(static_cast<std::int64_t>(train.num_users),
                                       static_cast<std::int64_t>(train.num_items), std::move(triplets));
  // Duplicates would have been summed; keep the matrix binary.
  std::vector<double> ones(static_cast<std::size_t>(m.nnz()), 1.0);
  return m.with_values(std::move(ones));
}

SparseMatrix build_adjacency(const SparseMatrix& interactions) {
  const std::int64_t nu = interactions.rows();
  const std::int64_t ni = interactions.cols();
  const std::int64_t n = nu + ni;
  SparseMatrix rt = interactions.transpose();
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(n + 1), 0);
  std::vector<std::int32_t> col_idx;
  std::vector<double> vals;
  col_idx.reserve(static_cast<std::size_t>(2 * interactions.nnz()));
  vals.reserve(static_cast<std::size_t>(2 * interactions.nnz()));
  for (std::int64_t u = 0; u < nu; ++u) {
    auto cols = interactions.row_cols(u);
    auto v = interactions.row_values(u);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      col_idx.push_back(static_cast<std::int32_t>(nu + cols[k]));
      vals.push_back(v[k]);
    }
    offsets[static_cast<std::size_t>(u + 1)] = static_cast<std::int64_t>(vals.size());
  }
  for (std::int64_t i = 0; i < ni; ++i) {
    auto cols = rt.row_cols(i);
    auto v = rt.row_values(i);
    col_idx.insert(col_idx.end(), cols.begin(), cols.end());
    vals.insert(vals.end(), v.begin(), v.end());
    offsets[static_cast<std::size_t>(nu + i + 1)] = static_cast<std::int64_t>(vals.size());
  }
  return SparseMatrix(n, n, std::move(offsets), std::move(col_idx), std::move(vals));
}

Vector inv_sqrt_or_zero(const Vector& x) {
  Vector out(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) out[k] = x[k] > 0.0 ? 1.0 / std::sqrt(x[k]) : 0.0;
  return out;
}

SparseMatrix sym_normalize(const SparseMatrix& adjacency) {
  Vector d = inv_sqrt_or_zero(adjacency.row_sums());
  return adjacency.scaled(d, d);
}

SparseMatrix normalize_bipartite(const SparseMatrix& interactions) {
  return interactions.scaled(inv_sqrt_or_zero(interactions.row_sums()), inv_sqrt_or_zero(interactions.col_sums()));
}

DegreeVectors degrees(const SparseMatrix& interactions) {
  return {interactions.row_sums(), interactions.col_sums()};
}

}  // namespace graphrec
