#include "graphrec/gfcf.hpp"

#include <cmath>

#include "graphrec/error.hpp"
#include "graphrec/persist.hpp"

namespace graphrec {

Matrix GfcfFilter::gram() const {
  const Matrix dense = normalized.to_dense();
  return dense.transpose() * dense;
}

GfcfFilter gfcf_fit(const SparseMatrix& interactions, std::size_t rank, double alpha, const RandomizedSvdOptions& svd) {
  const auto limit = static_cast<std::size_t>(std::min(interactions.rows(), interactions.cols()));
  if (rank < 1 || rank > limit) {
    throw UsageError("GFCF rank " + std::to_string(rank) + " must lie in [1, " + std::to_string(limit) + "]");
  }
  GfcfFilter f;
  f.alpha = alpha;
  f.normalized = normalize_bipartite(interactions);
  f.normalized_t = f.normalized.transpose();
  const auto deg = degrees(interactions);
  f.item_inv_sqrt = inv_sqrt_or_zero(deg.items);
  f.item_sqrt = deg.items.array().sqrt().matrix();
  f.basis = randomized_svd(f.normalized, rank, svd).right_vectors;
  return f;
}

GfcfScorer::GfcfScorer(const SparseMatrix& interactions, GfcfFilter filter)
    : interactions_(interactions), filter_(std::move(filter)) {
  if (filter_.normalized.rows() != interactions_.rows() || filter_.normalized.cols() != interactions_.cols()) {
    throw DataError("GFCF filter does not match the interaction matrix");
  }
}

void GfcfScorer::score(UserId user, std::span<double> out) const {
  Matrix row;
  const UserId users[] = {user};
  score_batch(users, row);
  std::copy(row.data(), row.data() + row.size(), out.begin());
}

void GfcfScorer::score_batch(std::span<const UserId> users, Matrix& out) const {
  const auto items = interactions_.cols();
  const auto n = static_cast<Eigen::Index>(users.size());
  out = Matrix::Zero(n, items);
  Matrix projected = Matrix::Zero(n, filter_.basis.cols());
  std::vector<double> hidden(static_cast<std::size_t>(interactions_.rows()), 0.0);
  std::vector<std::int32_t> touched;
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto u = users[static_cast<std::size_t>(b)];
    auto cols = interactions_.row_cols(u);
    auto vals = interactions_.row_values(u);
    // linear part: (r_u R̃^T) R̃
    touched.clear();
    for (std::size_t k = 0; k < cols.size(); ++k) {
      auto us = filter_.normalized_t.row_cols(cols[k]);
      auto ws = filter_.normalized_t.row_values(cols[k]);
      for (std::size_t q = 0; q < us.size(); ++q) {
        auto& h = hidden[static_cast<std::size_t>(us[q])];
        if (h == 0.0) touched.push_back(us[q]);
        h += vals[k] * ws[q];
      }
    }
    for (auto v : touched) {
      double h = hidden[static_cast<std::size_t>(v)];
      hidden[static_cast<std::size_t>(v)] = 0.0;
      auto is = filter_.normalized.row_cols(v);
      auto ws = filter_.normalized.row_values(v);
      for (std::size_t q = 0; q < is.size(); ++q) out(b, is[q]) += h * ws[q];
    }
    // ideal part, first factor: r_u D_I^{-1/2} V_k
    for (std::size_t k = 0; k < cols.size(); ++k) {
      projected.row(b).noalias() += (vals[k] * filter_.item_inv_sqrt[cols[k]]) * filter_.basis.row(cols[k]);
    }
  }
  if (filter_.alpha != 0.0) {
    Matrix ideal = projected * filter_.basis.transpose();
    out.noalias() += filter_.alpha * (ideal * filter_.item_sqrt.asDiagonal());
  }
}

void save_gfcf(const std::filesystem::path& dir, const GfcfFilter& filter, std::size_t rank, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  write_array(dir / "basis.bin", filter.basis, DType::f64);
  write_json(dir / "model.json", {{"kind", "GFCF"},
                                  {"layout", "basis"},
                                  {"dtype", "f64"},
                                  {"shape", {filter.basis.rows(), filter.basis.cols()}},
                                  {"hyperparameters", {{"rank", rank}, {"alpha", filter.alpha}, {"svd_seed", seed}}}});
}

GfcfFilter load_gfcf(const std::filesystem::path& dir, const SparseMatrix& interactions) {
  auto header = read_json(dir / "model.json");
  if (header.at("kind") != "GFCF") throw DataError("model in " + dir.string() + " is not GFCF");
  GfcfFilter f;
  f.alpha = header.at("hyperparameters").at("alpha").get<double>();
  f.normalized = normalize_bipartite(interactions);
  f.normalized_t = f.normalized.transpose();
  const auto deg = degrees(interactions);
  f.item_inv_sqrt = inv_sqrt_or_zero(deg.items);
  f.item_sqrt = deg.items.array().sqrt().matrix();
  f.basis = read_array(dir / "basis.bin");
  if (f.basis.rows() != interactions.cols()) throw DataError("GFCF basis does not match the item count");
  return f;
}

}  // namespace graphrec
