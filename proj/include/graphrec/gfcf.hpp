#pragma once

#include <filesystem>

#include "graphrec/scorer.hpp"
#include "graphrec/svd.hpp"

namespace graphrec {

/// Closed-form graph filter: a linear low-pass part through the normalised
/// item-item gram plus an ideal low-pass part on the top singular directions.
struct GfcfFilter {
  SparseMatrix normalized;    // R̃ = D_U^{-1/2} R D_I^{-1/2}
  SparseMatrix normalized_t;  // R̃^T
  Matrix basis;               // V_k, items x k
  Vector item_inv_sqrt;       // D_I^{-1/2}
  Vector item_sqrt;           // D_I^{1/2}
  double alpha = 0.3;

  /// R̃^T R̃ as a dense matrix; only sensible for small catalogues.
  Matrix gram() const;
};

GfcfFilter gfcf_fit(const SparseMatrix& interactions, std::size_t rank = 256, double alpha = 0.3,
                    const RandomizedSvdOptions& svd = {});

class GfcfScorer : public Scorer {
 public:
  GfcfScorer(const SparseMatrix& interactions, GfcfFilter filter);
  std::string name() const override { return "GFCF"; }
  std::size_t num_items() const override { return static_cast<std::size_t>(interactions_.cols()); }
  void score(UserId user, std::span<double> out) const override;
  void score_batch(std::span<const UserId> users, Matrix& out) const override;
  const GfcfFilter& filter() const noexcept { return filter_; }

 private:
  SparseMatrix interactions_;
  GfcfFilter filter_;
};

void save_gfcf(const std::filesystem::path& dir, const GfcfFilter& filter, std::size_t rank, std::uint64_t seed);
GfcfFilter load_gfcf(const std::filesystem::path& dir, const SparseMatrix& interactions);

}  // namespace graphrec
