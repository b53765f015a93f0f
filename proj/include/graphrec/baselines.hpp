#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "graphrec/scorer.hpp"

namespace graphrec {

/// score(i) = training degree of i, identical for every user.
class MostPopScorer : public Scorer {
 public:
  explicit MostPopScorer(const SparseMatrix& interactions);
  std::string name() const override { return "MostPop"; }
  std::size_t num_items() const override { return static_cast<std::size_t>(popularity_.size()); }
  void score(UserId user, std::span<double> out) const override;
  const Vector& popularity() const noexcept { return popularity_; }

 private:
  Vector popularity_;
};

/// Uniform scores from a stream seeded by (seed, user).
class RandomScorer : public Scorer {
 public:
  RandomScorer(std::size_t num_items, std::uint64_t seed) : num_items_(num_items), seed_(seed) {}
  std::string name() const override { return "Random"; }
  std::size_t num_items() const override { return num_items_; }
  void score(UserId user, std::span<double> out) const override;

 private:
  std::size_t num_items_;
  std::uint64_t seed_;
};

enum class KnnMode { user, item };

/// Shrunk cosine similarity between rows (user mode) or columns (item mode) of
/// R, keeping the k largest per row with self excluded. Ties keep the smaller index.
SparseMatrix knn_fit(const SparseMatrix& interactions, KnnMode mode, std::size_t k, double shrink);

class KnnScorer : public Scorer {
 public:
  KnnScorer(const SparseMatrix& interactions, KnnMode mode, std::size_t k, double shrink);
  KnnScorer(const SparseMatrix& interactions, KnnMode mode, SparseMatrix similarity);
  std::string name() const override { return mode_ == KnnMode::user ? "UserkNN" : "ItemkNN"; }
  std::size_t num_items() const override { return static_cast<std::size_t>(interactions_.cols()); }
  void score(UserId user, std::span<double> out) const override;
  const SparseMatrix& similarity() const noexcept { return similarity_; }

 private:
  SparseMatrix interactions_;
  KnnMode mode_;
  SparseMatrix similarity_;
  SparseMatrix similarity_t_;
};

/// Item-to-item two-step transition (D_I^{-1} R^T)(D_U^{-1} R), column j scaled
/// by d_j^{-beta}, top-k sparsified per row.
SparseMatrix rp3beta_fit(const SparseMatrix& interactions, std::size_t k, double beta);

class Rp3betaScorer : public Scorer {
 public:
  Rp3betaScorer(const SparseMatrix& interactions, std::size_t k, double beta);
  std::string name() const override { return "RP3beta"; }
  std::size_t num_items() const override { return static_cast<std::size_t>(interactions_.cols()); }
  void score(UserId user, std::span<double> out) const override;
  const SparseMatrix& weights() const noexcept { return weights_; }

 private:
  SparseMatrix interactions_;
  SparseMatrix weights_;
};

/// Default memory budget for dense closed-form solvers (Gram + inverse).
inline constexpr std::uint64_t kDefaultDenseBudgetBytes = 4ULL << 30;

/// Closed-form EASE^R weights: P = (R^T R + l2 I)^{-1}, B_ij = -P_ij / P_jj, B_jj = 0.
/// Throws CapacityError when the dense solve would exceed budget_bytes.
Matrix easer_fit(const SparseMatrix& interactions, double l2, std::uint64_t budget_bytes = kDefaultDenseBudgetBytes);

class EaseScorer : public Scorer {
 public:
  EaseScorer(const SparseMatrix& interactions, double l2, std::uint64_t budget_bytes = kDefaultDenseBudgetBytes);
  std::string name() const override { return "EASE^R"; }
  std::size_t num_items() const override { return static_cast<std::size_t>(weights_.cols()); }
  void score(UserId user, std::span<double> out) const override;
  const Matrix& weights() const noexcept { return weights_; }

 private:
  SparseMatrix interactions_;
  Matrix weights_;
};

// Fitted-state persistence: <dir>/model.json header + <dir>/weights.bin array.
// Sparse similarities are stored as an nnz x 3 (row, col, value) array.
void save_fitted(const std::filesystem::path& dir, const std::string& kind, const nlohmann::json& hyperparameters,
                 const Matrix& dense);
void save_fitted(const std::filesystem::path& dir, const std::string& kind, const nlohmann::json& hyperparameters,
                 const SparseMatrix& sparse);
nlohmann::json load_fitted_header(const std::filesystem::path& dir);
Matrix load_fitted_dense(const std::filesystem::path& dir);
SparseMatrix load_fitted_sparse(const std::filesystem::path& dir);

}  // namespace graphrec
