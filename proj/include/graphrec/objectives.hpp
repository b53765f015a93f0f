#pragma once

#include <span>
#include <vector>

#include "graphrec/autodiff.hpp"
#include "graphrec/ingest.hpp"
#include "graphrec/rng.hpp"

namespace graphrec {

struct BprTriplet {
  UserId user;
  ItemId positive;
  ItemId negative;
  friend bool operator==(const BprTriplet&, const BprTriplet&) = default;
};

/// Per-user sorted item lists with O(log n) membership.
class InteractionIndex {
 public:
  explicit InteractionIndex(const InteractionSet& set);
  InteractionIndex(std::vector<std::vector<ItemId>> by_user, std::size_t num_items);
  bool contains(UserId user, ItemId item) const;
  std::span<const ItemId> items(UserId user) const;
  std::size_t num_items() const noexcept { return num_items_; }

 private:
  std::vector<std::vector<ItemId>> by_user_;
  std::size_t num_items_;
};

inline constexpr int kMaxNegativeDraws = 100;

/// Uniform non-interacted item for `user`; gives up after kMaxNegativeDraws
/// rejected draws with a DataError.
ItemId sample_negative(const InteractionIndex& index, UserId user, Rng& rng);

/// Draws `batch` triplets: (u, i+) uniform over training interactions, i-
/// uniform over items outside the user's profile.
std::vector<BprTriplet> sample_bpr_triplets(const InteractionSet& train, const InteractionIndex& index,
                                            std::size_t batch, Rng& rng);

/// mean(softplus(neg - pos)) + l2 * sum of squared entries of params.
ad::Var bpr_loss(ad::Var pos_scores, ad::Var neg_scores, double l2, const std::vector<ad::Var>& params);

/// Sum of squared entries.
ad::Var squared_norm(ad::Var x);

}  // namespace graphrec
