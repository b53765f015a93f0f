#pragma once

#include <span>
#include <string>

#include "graphrec/ingest.hpp"
#include "graphrec/sparse.hpp"

namespace graphrec {

/// A fitted recommender: produces one score per item for a user. Scoring is
/// read-only and may be called concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual std::size_t num_items() const = 0;
  virtual void score(UserId user, std::span<double> out) const = 0;
  /// out is resized to users.size() x num_items().
  virtual void score_batch(std::span<const UserId> users, Matrix& out) const;
};

/// Scores are inner products of user and item embedding rows.
class EmbeddingScorer : public Scorer {
 public:
  EmbeddingScorer(std::string name, Matrix users, Matrix items);
  std::string name() const override { return name_; }
  std::size_t num_items() const override { return static_cast<std::size_t>(items_.rows()); }
  void score(UserId user, std::span<double> out) const override;
  void score_batch(std::span<const UserId> users, Matrix& out) const override;
  const Matrix& user_embeddings() const noexcept { return users_; }
  const Matrix& item_embeddings() const noexcept { return items_; }

 private:
  std::string name_;
  Matrix users_;
  Matrix items_;
};

}  // namespace graphrec
