#include "graphrec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "graphrec/error.hpp"
#include "graphrec/persist.hpp"
#include "graphrec/rng.hpp"

namespace graphrec {

namespace {

struct Entry {
  std::int32_t col;
  double value;
};

// Keeps the k largest entries of a row (ties favour smaller columns), sorted by column.
void keep_top(std::vector<Entry>& row, std::size_t k) {
  if (row.size() > k) {
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end(), [](const Entry& a, const Entry& b) {
      return a.value != b.value ? a.value > b.value : a.col < b.col;
    });
    row.resize(k);
  }
  std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
}

SparseMatrix assemble(std::int64_t rows, std::int64_t cols, const std::vector<std::vector<Entry>>& entries) {
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> vals;
  for (const auto& row : entries) {
    for (const auto& e : row) {
      col_idx.push_back(e.col);
      vals.push_back(e.value);
    }
    offsets.push_back(static_cast<std::int64_t>(vals.size()));
  }
  return SparseMatrix(rows, cols, std::move(offsets), std::move(col_idx), std::move(vals));
}

void accumulate_rows(const SparseMatrix& m, std::span<const std::int32_t> rows, std::span<const double> weights,
                     std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto cols = m.row_cols(rows[k]);
    auto vals = m.row_values(rows[k]);
    const double w = weights.empty() ? 1.0 : weights[k];
    for (std::size_t q = 0; q < cols.size(); ++q) out[static_cast<std::size_t>(cols[q])] += w * vals[q];
  }
}

}  // namespace

MostPopScorer::MostPopScorer(const SparseMatrix& interactions) : popularity_(interactions.col_sums()) {}

void MostPopScorer::score(UserId, std::span<double> out) const {
  std::copy(popularity_.data(), popularity_.data() + popularity_.size(), out.begin());
}

void RandomScorer::score(UserId user, std::span<double> out) const {
  Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(user)));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (auto& v : out) v = uniform(rng);
}

SparseMatrix knn_fit(const SparseMatrix& interactions, KnnMode mode, std::size_t k, double shrink) {
  if (k < 1) throw UsageError("kNN neighbourhood size must be at least 1");
  if (shrink < 0.0) throw UsageError("kNN shrink must be nonnegative");
  const SparseMatrix profiles = mode == KnnMode::user ? interactions : interactions.transpose();
  const SparseMatrix profiles_t = profiles.transpose();
  Vector norms(profiles.rows());
  for (std::int64_t r = 0; r < profiles.rows(); ++r) {
    double s = 0.0;
    for (double v : profiles.row_values(r)) s += v * v;
    norms[r] = std::sqrt(s);
  }
  std::vector<std::vector<Entry>> rows(static_cast<std::size_t>(profiles.rows()));
  SparseRowProduct product(profiles.rows());
  for (std::int64_t a = 0; a < profiles.rows(); ++a) {
    auto& row = rows[static_cast<std::size_t>(a)];
    product.run(profiles, profiles_t, a, [&](std::int32_t b, double dot) {
      if (b == a || dot == 0.0) return;
      double denom = norms[a] * norms[b] + shrink;
      if (denom > 0.0) row.push_back({b, dot / denom});
    });
    keep_top(row, k);
  }
  return assemble(profiles.rows(), profiles.rows(), rows);
}

KnnScorer::KnnScorer(const SparseMatrix& interactions, KnnMode mode, std::size_t k, double shrink)
    : KnnScorer(interactions, mode, knn_fit(interactions, mode, k, shrink)) {}

KnnScorer::KnnScorer(const SparseMatrix& interactions, KnnMode mode, SparseMatrix similarity)
    : interactions_(interactions), mode_(mode), similarity_(std::move(similarity)), similarity_t_(similarity_.transpose()) {}

void KnnScorer::score(UserId user, std::span<double> out) const {
  if (mode_ == KnnMode::user) {
    // sum over neighbours v of sim(u, v) * R_v
    accumulate_rows(interactions_, similarity_.row_cols(user), similarity_.row_values(user), out);
  } else {
    // sum over j in N(u) of sim(i, j) for every i that keeps j as a neighbour
    accumulate_rows(similarity_t_, interactions_.row_cols(user), interactions_.row_values(user), out);
  }
}

SparseMatrix rp3beta_fit(const SparseMatrix& interactions, std::size_t k, double beta) {
  if (beta < 0.0) throw UsageError("RP3beta exponent must be nonnegative");
  if (k < 1) throw UsageError("RP3beta neighbourhood size must be at least 1");
  const auto deg = degrees(interactions);
  Vector inv_u(deg.users.size());
  Vector inv_i(deg.items.size());
  for (Eigen::Index u = 0; u < inv_u.size(); ++u) inv_u[u] = deg.users[u] > 0 ? 1.0 / deg.users[u] : 0.0;
  for (Eigen::Index i = 0; i < inv_i.size(); ++i) inv_i[i] = deg.items[i] > 0 ? 1.0 / deg.items[i] : 0.0;
  Vector ones_u = Vector::Ones(inv_u.size());
  Vector ones_i = Vector::Ones(inv_i.size());
  const SparseMatrix item_to_user = interactions.transpose().scaled(inv_i, ones_u);
  const SparseMatrix user_to_item = interactions.scaled(inv_u, ones_i);
  Vector popularity_penalty(inv_i.size());
  for (Eigen::Index j = 0; j < inv_i.size(); ++j) {
    popularity_penalty[j] = deg.items[j] > 0 ? std::pow(deg.items[j], -beta) : 0.0;
  }
  std::vector<std::vector<Entry>> rows(static_cast<std::size_t>(interactions.cols()));
  SparseRowProduct product(interactions.cols());
  for (std::int64_t i = 0; i < interactions.cols(); ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    product.run(item_to_user, user_to_item, i, [&](std::int32_t j, double p) {
      double w = p * popularity_penalty[j];
      if (w != 0.0) row.push_back({j, w});
    });
    keep_top(row, k);
  }
  return assemble(interactions.cols(), interactions.cols(), rows);
}

Rp3betaScorer::Rp3betaScorer(const SparseMatrix& interactions, std::size_t k, double beta)
    : interactions_(interactions), weights_(rp3beta_fit(interactions, k, beta)) {}

void Rp3betaScorer::score(UserId user, std::span<double> out) const {
  accumulate_rows(weights_, interactions_.row_cols(user), {}, out);
}

Matrix easer_fit(const SparseMatrix& interactions, double l2, std::uint64_t budget_bytes) {
  if (!(l2 > 0.0)) throw UsageError("EASE^R l2 must be positive");
  const auto n = static_cast<std::uint64_t>(interactions.cols());
  const std::uint64_t needed = 2 * n * n * sizeof(double);
  if (needed > budget_bytes) {
    throw CapacityError("EASE^R dense solve over " + std::to_string(n) + " items needs " + std::to_string(needed) +
                        " bytes, over the configured budget of " + std::to_string(budget_bytes));
  }
  const auto items = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(items, items);
  const SparseMatrix rt = interactions.transpose();
  SparseRowProduct product(items);
  for (std::int64_t i = 0; i < items; ++i) {
    product.run(rt, interactions, i, [&](std::int32_t j, double v) { gram(i, j) = v; });
  }
  gram.diagonal().array() += l2;
  Eigen::MatrixXd p = gram.ldlt().solve(Eigen::MatrixXd::Identity(items, items));
  Matrix b(items, items);
  for (Eigen::Index j = 0; j < items; ++j) {
    const double pjj = p(j, j);
    for (Eigen::Index i = 0; i < items; ++i) b(i, j) = -p(i, j) / pjj;
    b(j, j) = 0.0;
  }
  return b;
}

EaseScorer::EaseScorer(const SparseMatrix& interactions, double l2, std::uint64_t budget_bytes)
    : interactions_(interactions), weights_(easer_fit(interactions, l2, budget_bytes)) {}

void EaseScorer::score(UserId user, std::span<double> out) const {
  Eigen::Map<Eigen::RowVectorXd> dst(out.data(), static_cast<Eigen::Index>(out.size()));
  dst.setZero();
  auto cols = interactions_.row_cols(user);
  auto vals = interactions_.row_values(user);
  for (std::size_t k = 0; k < cols.size(); ++k) dst.noalias() += vals[k] * weights_.row(cols[k]);
}

void save_fitted(const std::filesystem::path& dir, const std::string& kind, const nlohmann::json& hyperparameters,
                 const Matrix& dense) {
  std::filesystem::create_directories(dir);
  write_array(dir / "weights.bin", dense, DType::f64);
  write_json(dir / "model.json", {{"kind", kind},
                                  {"layout", "dense"},
                                  {"dtype", "f64"},
                                  {"shape", {dense.rows(), dense.cols()}},
                                  {"hyperparameters", hyperparameters}});
}

void save_fitted(const std::filesystem::path& dir, const std::string& kind, const nlohmann::json& hyperparameters,
                 const SparseMatrix& sparse) {
  std::filesystem::create_directories(dir);
  Matrix triplets(sparse.nnz(), 3);
  std::int64_t at = 0;
  for (std::int64_t r = 0; r < sparse.rows(); ++r) {
    auto cols = sparse.row_cols(r);
    auto vals = sparse.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k, ++at) {
      triplets(at, 0) = static_cast<double>(r);
      triplets(at, 1) = cols[k];
      triplets(at, 2) = vals[k];
    }
  }
  write_array(dir / "weights.bin", triplets, DType::f64);
  write_json(dir / "model.json", {{"kind", kind},
                                  {"layout", "coordinate"},
                                  {"dtype", "f64"},
                                  {"shape", {sparse.rows(), sparse.cols()}},
                                  {"hyperparameters", hyperparameters}});
}

nlohmann::json load_fitted_header(const std::filesystem::path& dir) { return read_json(dir / "model.json"); }

Matrix load_fitted_dense(const std::filesystem::path& dir) { return read_array(dir / "weights.bin"); }

SparseMatrix load_fitted_sparse(const std::filesystem::path& dir) {
  auto header = load_fitted_header(dir);
  if (header.at("layout") != "coordinate") throw DataError("fitted model in " + dir.string() + " is not sparse");
  Matrix triplets = read_array(dir / "weights.bin");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(triplets.rows()));
  for (Eigen::Index r = 0; r < triplets.rows(); ++r) {
    t.push_back({static_cast<std::int64_t>(triplets(r, 0)), static_cast<std::int64_t>(triplets(r, 1)), triplets(r, 2)});
  }
  auto shape = header.at("shape");
  return SparseMatrix::from_triplets(shape[0].get<std::int64_t>(), shape[1].get<std::int64_t>(), std::move(t));
}

}  // namespace graphrec
