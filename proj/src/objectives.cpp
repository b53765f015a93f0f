#include "graphrec/objectives.hpp"

#include <algorithm>
#include <random>

#include "graphrec/error.hpp"

namespace graphrec {

InteractionIndex::InteractionIndex(const InteractionSet& set)
    : InteractionIndex(set.items_by_user(), set.num_items) {}

InteractionIndex::InteractionIndex(std::vector<std::vector<ItemId>> by_user, std::size_t num_items)
    : by_user_(std::move(by_user)), num_items_(num_items) {
  for (auto& items : by_user_) std::sort(items.begin(), items.end());
}

bool InteractionIndex::contains(UserId user, ItemId item) const {
  const auto& items = by_user_[static_cast<std::size_t>(user)];
  return std::binary_search(items.begin(), items.end(), item);
}

std::span<const ItemId> InteractionIndex::items(UserId user) const { return by_user_[static_cast<std::size_t>(user)]; }

ItemId sample_negative(const InteractionIndex& index, UserId user, Rng& rng) {
  std::uniform_int_distribution<ItemId> uniform(0, static_cast<ItemId>(index.num_items()) - 1);
  for (int attempt = 0; attempt < kMaxNegativeDraws; ++attempt) {
    ItemId candidate = uniform(rng);
    if (!index.contains(user, candidate)) return candidate;
  }
  throw DataError("could not sample a negative item for user " + std::to_string(user) + " after " +
                  std::to_string(kMaxNegativeDraws) + " draws");
}

std::vector<BprTriplet> sample_bpr_triplets(const InteractionSet& train, const InteractionIndex& index,
                                            std::size_t batch, Rng& rng) {
  if (batch < 1) throw UsageError("batch size must be at least 1");
  if (train.pairs.empty()) throw DataError("cannot sample from an empty training set");
  std::uniform_int_distribution<std::size_t> pick(0, train.pairs.size() - 1);
  std::vector<BprTriplet> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& p = train.pairs[pick(rng)];
    out.push_back({p.user, p.item, sample_negative(index, p.user, rng)});
  }
  return out;
}

ad::Var squared_norm(ad::Var x) { return ad::reduce_sum(ad::hadamard(x, x)); }

ad::Var bpr_loss(ad::Var pos_scores, ad::Var neg_scores, double l2, const std::vector<ad::Var>& params) {
  ad::Var loss = ad::mean(ad::softplus(ad::sub(neg_scores, pos_scores)));
  if (params.empty()) return loss;
  ad::Var reg = squared_norm(params.front());
  for (std::size_t k = 1; k < params.size(); ++k) reg = ad::add(reg, squared_norm(params[k]));
  return ad::add(loss, ad::scale(reg, l2));
}

}  // namespace graphrec
