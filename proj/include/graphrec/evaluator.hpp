#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "graphrec/scorer.hpp"

namespace graphrec {

/// Top-k items by descending score, ties broken by ascending item index.
/// Masked items are never returned; fewer than k candidates returns them all.
std::vector<ItemId> rank_topk(std::span<const double> scores, std::size_t k, std::span<const ItemId> masked = {});

double recall_at_k(std::span<const ItemId> topk, std::span<const ItemId> test);

/// Binary-relevance nDCG with the ideal DCG truncated at min(|test|, k).
double ndcg_at_k(std::span<const ItemId> topk, std::span<const ItemId> test, std::size_t k);

struct EvalReport {
  std::size_t k = 20;
  std::vector<double> recall;  // per user; 0 for non-evaluable users
  std::vector<double> ndcg;
  std::vector<char> evaluable;  // users with a nonempty test profile
  std::size_t evaluable_users = 0;
  double mean_recall = 0.0;
  double mean_ndcg = 0.0;
};

struct EvalOptions {
  std::size_t k = 20;
  unsigned threads = 1;
  std::size_t batch_users = 256;
};

/// All-unrated-item protocol: every item outside `mask` is a candidate.
EvalReport evaluate(const Scorer& scorer, const InteractionSet& mask, const InteractionSet& test,
                    const EvalOptions& options = {});

/// Test-set evaluation of a split; train and validation items are masked.
EvalReport evaluate(const Scorer& scorer, const Split& split, const EvalOptions& options = {});

/// Per-user TSV (user, recall, ndcg) followed by a "#mean" footer row.
void write_report_tsv(const EvalReport& report, const IdMap& users, const std::filesystem::path& path);
nlohmann::json report_summary(const EvalReport& report);

}  // namespace graphrec
