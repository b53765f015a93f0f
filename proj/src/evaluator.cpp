#include "graphrec/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "graphrec/error.hpp"
#include "graphrec/parallel.hpp"

namespace graphrec {

void Scorer::score_batch(std::span<const UserId> users, Matrix& out) const {
  out.resize(static_cast<Eigen::Index>(users.size()), static_cast<Eigen::Index>(num_items()));
  for (std::size_t r = 0; r < users.size(); ++r) {
    score(users[r], std::span<double>(out.row(static_cast<Eigen::Index>(r)).data(), num_items()));
  }
}

EmbeddingScorer::EmbeddingScorer(std::string name, Matrix users, Matrix items)
    : name_(std::move(name)), users_(std::move(users)), items_(std::move(items)) {
  if (users_.cols() != items_.cols()) throw DataError("user and item embeddings differ in width");
}

void EmbeddingScorer::score(UserId user, std::span<double> out) const {
  Eigen::Map<Vector> dst(out.data(), static_cast<Eigen::Index>(out.size()));
  dst.noalias() = items_ * users_.row(user).transpose();
}

void EmbeddingScorer::score_batch(std::span<const UserId> users, Matrix& out) const {
  Matrix selected(static_cast<Eigen::Index>(users.size()), users_.cols());
  for (std::size_t r = 0; r < users.size(); ++r) selected.row(static_cast<Eigen::Index>(r)) = users_.row(users[r]);
  out.noalias() = selected * items_.transpose();
}

std::vector<ItemId> rank_topk(std::span<const double> scores, std::size_t k, std::span<const ItemId> masked) {
  std::vector<char> is_masked(scores.size(), 0);
  for (auto i : masked) is_masked[static_cast<std::size_t>(i)] = 1;
  std::vector<std::pair<double, ItemId>> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (is_masked[i]) continue;
    double s = std::isnan(scores[i]) ? -std::numeric_limits<double>::infinity() : scores[i];
    candidates.emplace_back(s, static_cast<ItemId>(i));
  }
  auto better = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
  const std::size_t keep = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(), better);
  std::vector<ItemId> out(keep);
  for (std::size_t r = 0; r < keep; ++r) out[r] = candidates[r].second;
  return out;
}

double recall_at_k(std::span<const ItemId> topk, std::span<const ItemId> test) {
  if (test.empty()) return 0.0;
  std::size_t hits = 0;
  for (auto i : topk) hits += static_cast<std::size_t>(std::find(test.begin(), test.end(), i) != test.end());
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

double ndcg_at_k(std::span<const ItemId> topk, std::span<const ItemId> test, std::size_t k) {
  if (test.empty()) return 0.0;
  double dcg = 0.0;
  const std::size_t depth = std::min(k, topk.size());
  for (std::size_t r = 0; r < depth; ++r) {
    if (std::find(test.begin(), test.end(), topk[r]) != test.end()) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(test.size(), k);
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

EvalReport evaluate(const Scorer& scorer, const InteractionSet& mask, const InteractionSet& test,
                    const EvalOptions& options) {
  if (options.k == 0) throw UsageError("K must be at least 1");
  const std::size_t num_users = test.num_users;
  auto masked = mask.items_by_user();
  auto relevant = test.items_by_user();
  masked.resize(num_users);

  std::vector<UserId> users;
  for (std::size_t u = 0; u < num_users; ++u) {
    if (!relevant[u].empty()) users.push_back(static_cast<UserId>(u));
  }
  if (users.empty()) throw DataError("evaluation has no users with a nonempty test profile");

  EvalReport report;
  report.k = options.k;
  report.recall.assign(num_users, 0.0);
  report.ndcg.assign(num_users, 0.0);
  report.evaluable.assign(num_users, 0);
  for (auto u : users) report.evaluable[static_cast<std::size_t>(u)] = 1;

  const std::size_t batch = std::max<std::size_t>(1, options.batch_users);
  const std::size_t num_batches = (users.size() + batch - 1) / batch;
  parallel_for(num_batches, options.threads, [&](std::size_t begin, std::size_t end) {
    Matrix scores;
    for (std::size_t b = begin; b < end; ++b) {
      const std::size_t lo = b * batch;
      const std::size_t hi = std::min(users.size(), lo + batch);
      std::span<const UserId> chunk(users.data() + lo, hi - lo);
      scorer.score_batch(chunk, scores);
      for (std::size_t r = 0; r < chunk.size(); ++r) {
        const auto u = static_cast<std::size_t>(chunk[r]);
        std::span<const double> row(scores.row(static_cast<Eigen::Index>(r)).data(), static_cast<std::size_t>(scores.cols()));
        auto top = rank_topk(row, options.k, masked[u]);
        report.recall[u] = recall_at_k(top, relevant[u]);
        report.ndcg[u] = ndcg_at_k(top, relevant[u], options.k);
      }
    }
  });

  // Fixed user order keeps the aggregate independent of the thread count.
  double sum_recall = 0.0;
  double sum_ndcg = 0.0;
  for (auto u : users) {
    sum_recall += report.recall[static_cast<std::size_t>(u)];
    sum_ndcg += report.ndcg[static_cast<std::size_t>(u)];
  }
  report.evaluable_users = users.size();
  report.mean_recall = sum_recall / static_cast<double>(users.size());
  report.mean_ndcg = sum_ndcg / static_cast<double>(users.size());
  return report;
}

EvalReport evaluate(const Scorer& scorer, const Split& split, const EvalOptions& options) {
  InteractionSet mask = split.train;
  mask.pairs.insert(mask.pairs.end(), split.validation.pairs.begin(), split.validation.pairs.end());
  return evaluate(scorer, mask, split.test, options);
}

void write_report_tsv(const EvalReport& report, const IdMap& users, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(10);
  out << "user\trecall@" << report.k << "\tndcg@" << report.k << '\n';
  for (std::size_t u = 0; u < report.recall.size(); ++u) {
    if (!report.evaluable[u]) continue;
    out << users.raw(static_cast<std::int32_t>(u)) << '\t' << report.recall[u] << '\t' << report.ndcg[u] << '\n';
  }
  out << "#mean\t" << report.mean_recall << '\t' << report.mean_ndcg << '\n';
}

nlohmann::json report_summary(const EvalReport& report) {
  return {{"k", report.k},
          {"evaluable_users", report.evaluable_users},
          {"recall", report.mean_recall},
          {"ndcg", report.mean_ndcg}};
}

}  // namespace graphrec
