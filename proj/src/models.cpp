#include "graphrec/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "graphrec/error.hpp"

namespace graphrec::gcf {

namespace {

IndexList make_index(std::vector<std::int32_t> v) { return std::make_shared<const std::vector<std::int32_t>>(std::move(v)); }

IndexList unique_of(const IndexList& v) {
  std::vector<std::int32_t> out(*v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return make_index(std::move(out));
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
  return m;
}

Matrix xavier_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = uniform(rng);
  return m;
}

void require_layers(int layers) {
  if (layers < 0) throw UsageError("number of propagation layers must be nonnegative");
}

std::pair<Matrix, Matrix> split_nodes(const Matrix& nodes, std::size_t num_users) {
  const auto nu = static_cast<Eigen::Index>(num_users);
  return {nodes.topRows(nu), nodes.bottomRows(nodes.rows() - nu)};
}

}  // namespace

GraphContext GraphContext::build(const InteractionSet& train) {
  GraphContext g;
  g.num_users = train.num_users;
  g.num_items = train.num_items;
  g.interactions = build_interaction_matrix(train);
  auto adjacency = std::make_shared<SparseMatrix>(build_adjacency(g.interactions));
  g.normalized = std::make_shared<const SparseMatrix>(sym_normalize(*adjacency));
  g.adjacency = adjacency;
  g.degrees = graphrec::degrees(g.interactions);
  return g;
}

ad::Var lightgcn_propagate(std::shared_ptr<const SparseMatrix> normalized, ad::Var e0, int layers) {
  require_layers(layers);
  ad::Var acc = e0;
  ad::Var cur = e0;
  for (int l = 0; l < layers; ++l) {
    cur = ad::sparse_matmul(normalized, cur);
    acc = ad::add(acc, cur);
  }
  return ad::div_scalar(acc, static_cast<double>(layers + 1));
}

ad::Var ngcf_propagate(std::shared_ptr<const SparseMatrix> normalized, ad::Var e0, const std::vector<NgcfLayer>& layers,
                       double dropout, Rng* rng) {
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("message dropout must lie in [0, 1)");
  std::vector<ad::Var> parts{e0};
  ad::Var cur = e0;
  for (const auto& layer : layers) {
    ad::Var side = ad::sparse_matmul(normalized, cur);
    ad::Var summed = ad::matmul(ad::add(cur, side), layer.w1);
    ad::Var bi = ad::matmul(ad::hadamard(side, cur), layer.w2);
    ad::Var h = ad::leaky_relu(ad::add(summed, bi));
    if (rng != nullptr && dropout > 0.0) {
      std::bernoulli_distribution keep(1.0 - dropout);
      Matrix mask(h.rows(), h.cols());
      for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = keep(*rng) ? 1.0 / (1.0 - dropout) : 0.0;
      h = ad::hadamard(h, e0.tape->constant(std::move(mask)));
    }
    cur = h;
    parts.push_back(ad::l2norm_rows(h));
  }
  return ad::concat_cols(parts);
}

DgcfGraph DgcfGraph::build(const GraphContext& graph) {
  DgcfGraph d;
  const SparseMatrix& r = graph.interactions;
  const auto nu = static_cast<std::int32_t>(graph.num_users);
  d.num_edges = static_cast<std::size_t>(r.nnz());
  d.adjacency = graph.adjacency;
  const SparseMatrix& a = *graph.adjacency;
  std::vector<std::int32_t> entry_edge, entry_row, entry_col, edge_user, edge_item;
  entry_edge.reserve(static_cast<std::size_t>(a.nnz()));
  for (std::int64_t u = 0; u < r.rows(); ++u) {
    for (auto i : r.row_cols(u)) {
      edge_user.push_back(static_cast<std::int32_t>(u));
      edge_item.push_back(nu + i);
    }
  }
  auto r_offsets = r.row_offsets();
  for (std::int64_t n = 0; n < a.rows(); ++n) {
    for (auto c : a.row_cols(n)) {
      entry_row.push_back(static_cast<std::int32_t>(n));
      entry_col.push_back(c);
      std::int64_t u = n < nu ? n : c;
      std::int32_t item = (n < nu ? c : static_cast<std::int32_t>(n)) - nu;
      auto cols = r.row_cols(u);
      auto it = std::lower_bound(cols.begin(), cols.end(), item);
      entry_edge.push_back(static_cast<std::int32_t>(r_offsets[u] + (it - cols.begin())));
    }
  }
  d.entry_edge = make_index(std::move(entry_edge));
  d.entry_row = make_index(std::move(entry_row));
  d.entry_col = make_index(std::move(entry_col));
  d.edge_user = make_index(std::move(edge_user));
  d.edge_item = make_index(std::move(edge_item));
  return d;
}

ad::Var dgcf_propagate(const DgcfGraph& graph, ad::Var e0, int intents, int iterations, int layers,
                       std::vector<Matrix>* routing_weights) {
  require_layers(layers);
  if (intents < 1) throw UsageError("DGCF needs at least one intent");
  if (iterations < 0) throw UsageError("DGCF routing iterations must be nonnegative");
  if (e0.cols() % intents != 0) {
    throw UsageError("embedding size " + std::to_string(e0.cols()) + " is not divisible by " + std::to_string(intents) +
                     " intents");
  }
  ad::Tape& tape = *e0.tape;
  const Eigen::Index width = e0.cols() / intents;
  const auto edges = static_cast<Eigen::Index>(graph.num_edges);
  ad::Var ones = tape.constant(Matrix::Ones(e0.rows(), 1));
  ad::Var scores = tape.constant(Matrix::Ones(edges, intents));

  auto propagate = [&](ad::Var probs, const std::vector<ad::Var>& chunks) {
    std::vector<ad::Var> out;
    for (int k = 0; k < intents; ++k) {
      ad::Var w = ad::gather_rows(ad::slice_cols(probs, k, 1), graph.entry_edge);
      ad::Var inv = ad::inv_sqrt(ad::weighted_spmm(graph.adjacency, w, ones));
      ad::Var norm_w = ad::hadamard(w, ad::hadamard(ad::gather_rows(inv, graph.entry_row), ad::gather_rows(inv, graph.entry_col)));
      out.push_back(ad::weighted_spmm(graph.adjacency, norm_w, chunks[static_cast<std::size_t>(k)]));
    }
    return out;
  };

  ad::Var cur = e0;
  ad::Var total = e0;
  for (int l = 0; l < layers; ++l) {
    std::vector<ad::Var> chunks;
    for (int k = 0; k < intents; ++k) chunks.push_back(ad::slice_cols(cur, k * width, width));
    std::vector<ad::Var> out;
    for (int t = 0; t <= iterations; ++t) {
      ad::Var probs = ad::softmax_rows(scores);
      if (routing_weights != nullptr) routing_weights->push_back(probs.value());
      out = propagate(probs, chunks);
      if (t == iterations) break;
      std::vector<ad::Var> delta;
      for (int k = 0; k < intents; ++k) {
        const auto& ek = out[static_cast<std::size_t>(k)];
        delta.push_back(ad::row_sum(
            ad::hadamard(ad::gather_rows(ek, graph.edge_user), ad::tanh(ad::gather_rows(ek, graph.edge_item)))));
      }
      scores = ad::add(scores, ad::concat_cols(delta));
    }
    cur = ad::concat_cols(out);
    total = ad::add(total, cur);
  }
  return total;
}

BatchIndices BatchIndices::from(std::span<const BprTriplet> batch, std::size_t num_users) {
  const auto nu = static_cast<std::int32_t>(num_users);
  std::vector<std::int32_t> users, pos, neg, pos_items, neg_items;
  for (const auto& t : batch) {
    users.push_back(t.user);
    pos.push_back(nu + t.positive);
    neg.push_back(nu + t.negative);
    pos_items.push_back(t.positive);
    neg_items.push_back(t.negative);
  }
  BatchIndices b;
  b.size = batch.size();
  b.users = make_index(std::move(users));
  b.positives = make_index(std::move(pos));
  b.negatives = make_index(std::move(neg));
  b.positive_items = make_index(std::move(pos_items));
  b.negative_items = make_index(std::move(neg_items));
  return b;
}

ad::Var embedding_bpr_loss(ad::Var final_nodes, ad::Var e0, const BatchIndices& batch, double l2) {
  if (batch.size == 0) throw DataError("empty training batch");
  ad::Var u = ad::gather_rows(final_nodes, batch.users);
  ad::Var pos = ad::row_sum(ad::hadamard(u, ad::gather_rows(final_nodes, batch.positives)));
  ad::Var neg = ad::row_sum(ad::hadamard(u, ad::gather_rows(final_nodes, batch.negatives)));
  std::vector<ad::Var> params{ad::gather_rows(e0, batch.users), ad::gather_rows(e0, batch.positives),
                              ad::gather_rows(e0, batch.negatives)};
  return bpr_loss(pos, neg, l2 / static_cast<double>(batch.size), params);
}

std::shared_ptr<const SparseMatrix> drop_edges(const SparseMatrix& normalized, double rho, Rng& rng) {
  if (rho < 0.0 || rho >= 1.0) throw UsageError("edge dropout rate must lie in [0, 1)");
  const std::uint64_t stream = rng();
  const auto n = static_cast<std::uint64_t>(normalized.rows());
  const double keep_scale = 1.0 / (1.0 - rho);
  std::vector<double> values(normalized.values().begin(), normalized.values().end());
  auto offsets = normalized.row_offsets();
  auto cols = normalized.col_indices();
  for (std::int64_t r = 0; r < normalized.rows(); ++r) {
    for (std::int64_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      // both directions of an interaction hash to the same draw
      auto lo = static_cast<std::uint64_t>(std::min<std::int64_t>(r, cols[k]));
      auto hi = static_cast<std::uint64_t>(std::max<std::int64_t>(r, cols[k]));
      double draw = static_cast<double>(splitmix64(stream ^ (lo * n + hi)) >> 11) * 0x1.0p-53;
      values[static_cast<std::size_t>(k)] = draw < rho ? 0.0 : values[static_cast<std::size_t>(k)] * keep_scale;
    }
  }
  return std::make_shared<const SparseMatrix>(normalized.with_values(std::move(values)));
}

ad::Var info_nce(ad::Var view_a, ad::Var view_b, const IndexList& nodes, double tau) {
  if (!(tau > 0.0)) throw UsageError("InfoNCE temperature must be positive");
  ad::Var za = ad::l2norm_rows(ad::gather_rows(view_a, nodes));
  ad::Var zb = ad::l2norm_rows(ad::gather_rows(view_b, nodes));
  ad::Var pos = ad::scale(ad::row_sum(ad::hadamard(za, zb)), 1.0 / tau);
  ad::Var all = ad::scale(ad::matmul(za, zb, true), 1.0 / tau);
  ad::Var lse = ad::log(ad::row_sum(ad::exp(all)));
  return ad::reduce_sum(ad::sub(lse, pos));
}

ad::Var sgl_loss(std::shared_ptr<const SparseMatrix> normalized, ad::Var e0, const BatchIndices& batch,
                 const SglParams& params, Rng& rng) {
  if (params.rho < 0.0 || params.rho >= 1.0) throw UsageError("edge dropout rate must lie in [0, 1)");
  if (!(params.tau > 0.0)) throw UsageError("InfoNCE temperature must be positive");
  ad::Var full = lightgcn_propagate(normalized, e0, params.layers);
  ad::Var loss = embedding_bpr_loss(full, e0, batch, params.l2);
  if (params.lambda_ssl == 0.0) return loss;
  ad::Var view_a = lightgcn_propagate(drop_edges(*normalized, params.rho, rng), e0, params.layers);
  ad::Var view_b = lightgcn_propagate(drop_edges(*normalized, params.rho, rng), e0, params.layers);
  ad::Var ssl = ad::add(info_nce(view_a, view_b, unique_of(batch.users), params.tau),
                        info_nce(view_a, view_b, unique_of(batch.positives), params.tau));
  return ad::add(loss, ad::scale(ssl, params.lambda_ssl));
}

UltraGcnConstraints UltraGcnConstraints::build(const SparseMatrix& interactions, std::size_t item_topk) {
  UltraGcnConstraints c;
  const auto deg = graphrec::degrees(interactions);
  c.user_factor.resize(deg.users.size());
  c.item_factor.resize(deg.items.size());
  for (Eigen::Index u = 0; u < deg.users.size(); ++u) {
    c.user_factor[u] = deg.users[u] > 0 ? std::sqrt(deg.users[u] + 1.0) / deg.users[u] : 0.0;
  }
  for (Eigen::Index i = 0; i < deg.items.size(); ++i) c.item_factor[i] = 1.0 / std::sqrt(deg.items[i] + 1.0);

  // G = R^T R, g = row sums of G
  const SparseMatrix rt = interactions.transpose();
  const Vector g = rt.multiply(Vector(interactions.row_sums()));
  SparseRowProduct product(interactions.cols());
  std::vector<Triplet> triplets;
  std::vector<std::pair<std::int32_t, double>> row;
  for (std::int64_t i = 0; i < interactions.cols(); ++i) {
    row.clear();
    double self = 0.0;
    product.run(rt, interactions, i, [&](std::int32_t j, double v) {
      if (j == i) {
        self = v;
      } else if (v != 0.0) {
        row.emplace_back(j, v);
      }
    });
    const double denom = g[i] - self;
    if (denom <= 0.0) continue;
    for (auto& [j, v] : row) v = v / denom * std::sqrt(g[i] / g[j]);
    auto better = [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; };
    if (row.size() > item_topk) {
      std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(item_topk), row.end(), better);
      row.resize(item_topk);
    }
    for (const auto& [j, v] : row) triplets.push_back({i, j, v});
  }
  c.item_neighbors = SparseMatrix::from_triplets(interactions.cols(), interactions.cols(), std::move(triplets));
  return c;
}

ad::Var ultragcn_loss(const UltraGcnConstraints& constraints, ad::Var users, ad::Var items,
                      std::span<const BprTriplet> positives, std::span<const std::vector<ItemId>> negatives,
                      const UltraGcnParams& params) {
  if (positives.empty()) throw DataError("empty training batch");
  if (negatives.size() != positives.size()) throw DataError("one negative list per positive is required");
  ad::Tape& tape = *users.tape;

  std::vector<std::int32_t> pu, pi, nu, ni, cu, ci;
  Matrix pos_w(static_cast<Eigen::Index>(positives.size()), 1);
  std::vector<double> neg_w, con_w;
  for (std::size_t b = 0; b < positives.size(); ++b) {
    const auto& t = positives[b];
    pu.push_back(t.user);
    pi.push_back(t.positive);
    pos_w(static_cast<Eigen::Index>(b), 0) = 1.0 + constraints.beta(t.user, t.positive);
    for (auto j : negatives[b]) {
      nu.push_back(t.user);
      ni.push_back(j);
      neg_w.push_back(1.0 + constraints.beta(t.user, j));
    }
    auto nb = constraints.item_neighbors.row_cols(t.positive);
    auto wb = constraints.item_neighbors.row_values(t.positive);
    for (std::size_t q = 0; q < nb.size(); ++q) {
      cu.push_back(t.user);
      ci.push_back(nb[q]);
      con_w.push_back(wb[q]);
    }
  }
  auto column = [&](const std::vector<double>& v) {
    return tape.constant(Eigen::Map<const Matrix>(v.data(), static_cast<Eigen::Index>(v.size()), 1));
  };

  ad::Var u_rows = ad::gather_rows(users, make_index(pu));
  ad::Var p_rows = ad::gather_rows(items, make_index(pi));
  ad::Var pos_logit = ad::row_sum(ad::hadamard(u_rows, p_rows));
  ad::Var loss = ad::reduce_sum(ad::hadamard(tape.constant(pos_w), ad::softplus(ad::scale(pos_logit, -1.0))));
  ad::Var norm = ad::add(squared_norm(u_rows), squared_norm(p_rows));

  if (!ni.empty()) {
    ad::Var nu_rows = ad::gather_rows(users, make_index(nu));
    ad::Var n_rows = ad::gather_rows(items, make_index(ni));
    ad::Var neg_logit = ad::row_sum(ad::hadamard(nu_rows, n_rows));
    loss = ad::add(loss, ad::reduce_sum(ad::hadamard(column(neg_w), ad::softplus(neg_logit))));
    norm = ad::add(norm, squared_norm(n_rows));
  }
  if (!ci.empty() && params.gamma_item != 0.0) {
    ad::Var logit = ad::row_sum(ad::hadamard(ad::gather_rows(users, make_index(cu)), ad::gather_rows(items, make_index(ci))));
    ad::Var item_term = ad::reduce_sum(ad::hadamard(column(con_w), ad::softplus(ad::scale(logit, -1.0))));
    loss = ad::add(loss, ad::scale(item_term, params.gamma_item));
  }
  return ad::add(loss, ad::scale(norm, params.lambda));
}

// ---- models ----------------------------------------------------------------------

nlohmann::json ModelConfig::to_json() const {
  return {{"dim", dim},
          {"layers", layers},
          {"l2", l2},
          {"init_std", init_std},
          {"message_dropout", message_dropout},
          {"intents", intents},
          {"routing_iterations", routing_iterations},
          {"rho", rho},
          {"tau", tau},
          {"lambda_ssl", lambda_ssl},
          {"negatives", negatives},
          {"gamma_item", gamma_item},
          {"item_topk", item_topk}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim = j.value("dim", c.dim);
  c.layers = j.value("layers", c.layers);
  c.l2 = j.value("l2", c.l2);
  c.init_std = j.value("init_std", c.init_std);
  c.message_dropout = j.value("message_dropout", c.message_dropout);
  c.intents = j.value("intents", c.intents);
  c.routing_iterations = j.value("routing_iterations", c.routing_iterations);
  c.rho = j.value("rho", c.rho);
  c.tau = j.value("tau", c.tau);
  c.lambda_ssl = j.value("lambda_ssl", c.lambda_ssl);
  c.negatives = j.value("negatives", c.negatives);
  c.gamma_item = j.value("gamma_item", c.gamma_item);
  c.item_topk = j.value("item_topk", c.item_topk);
  return c;
}

namespace {

// Models whose parameters start with one embedding table over all nodes.
class NodeTableModel : public TrainableModel {
 public:
  NodeTableModel(std::shared_ptr<const GraphContext> graph, ModelConfig config, Rng& rng)
      : TrainableModel(std::move(graph), config) {
    if (config_.dim == 0) throw UsageError("embedding size must be positive");
    require_layers(config_.layers);
    embedding_ = normal_matrix(static_cast<Eigen::Index>(graph_->num_nodes()), static_cast<Eigen::Index>(config_.dim),
                               config_.init_std, rng);
  }

  std::vector<NamedParameter> parameters() override { return {{"embedding", &embedding_}}; }

  ad::Var loss(ad::Tape& tape, std::span<const BprTriplet> batch, Rng& rng, std::vector<ad::Var>& leaves) override {
    leaves.clear();
    for (auto& p : parameters()) leaves.push_back(tape.parameter(*p.value));
    return batch_loss(leaves, BatchIndices::from(batch, graph_->num_users), rng);
  }

  EmbeddingScorer scorer() const override {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (auto& p : const_cast<NodeTableModel*>(this)->parameters()) leaves.push_back(tape.constant(*p.value));
    auto [u, i] = split_nodes(represent(leaves, nullptr).value(), graph_->num_users);
    return EmbeddingScorer(kind(), std::move(u), std::move(i));
  }

 protected:
  virtual ad::Var batch_loss(const std::vector<ad::Var>& leaves, const BatchIndices& batch, Rng& rng) {
    return embedding_bpr_loss(represent(leaves, &rng), leaves[0], batch, config_.l2);
  }
  /// Final node representations; rng is null at inference time.
  virtual ad::Var represent(const std::vector<ad::Var>& leaves, Rng* rng) const = 0;

  Matrix embedding_;
};

class LightGcnModel : public NodeTableModel {
 public:
  using NodeTableModel::NodeTableModel;
  std::string kind() const override { return "LightGCN"; }

 protected:
  ad::Var represent(const std::vector<ad::Var>& leaves, Rng*) const override {
    return lightgcn_propagate(graph_->normalized, leaves[0], config_.layers);
  }
};

class SglModel : public LightGcnModel {
 public:
  using LightGcnModel::LightGcnModel;
  std::string kind() const override { return "SGL"; }

 protected:
  ad::Var batch_loss(const std::vector<ad::Var>& leaves, const BatchIndices& batch, Rng& rng) override {
    SglParams p{config_.layers, config_.rho, config_.tau, config_.lambda_ssl, config_.l2};
    return sgl_loss(graph_->normalized, leaves[0], batch, p, rng);
  }
};

class NgcfModel : public NodeTableModel {
 public:
  NgcfModel(std::shared_ptr<const GraphContext> graph, ModelConfig config, Rng& rng)
      : NodeTableModel(std::move(graph), config, rng) {
    const auto d = static_cast<Eigen::Index>(config_.dim);
    for (int l = 0; l < config_.layers; ++l) {
      w1_.push_back(xavier_matrix(d, d, rng));
      w2_.push_back(xavier_matrix(d, d, rng));
    }
  }
  std::string kind() const override { return "NGCF"; }

  std::vector<NamedParameter> parameters() override {
    std::vector<NamedParameter> out{{"embedding", &embedding_}};
    for (std::size_t l = 0; l < w1_.size(); ++l) {
      out.push_back({"w1_" + std::to_string(l + 1), &w1_[l]});
      out.push_back({"w2_" + std::to_string(l + 1), &w2_[l]});
    }
    return out;
  }

 protected:
  ad::Var represent(const std::vector<ad::Var>& leaves, Rng* rng) const override {
    std::vector<NgcfLayer> layers;
    for (std::size_t k = 1; k + 1 < leaves.size(); k += 2) layers.push_back({leaves[k], leaves[k + 1]});
    return ngcf_propagate(graph_->normalized, leaves[0], layers, config_.message_dropout, rng);
  }

 private:
  std::vector<Matrix> w1_;
  std::vector<Matrix> w2_;
};

class DgcfModel : public NodeTableModel {
 public:
  DgcfModel(std::shared_ptr<const GraphContext> graph, ModelConfig config, Rng& rng)
      : NodeTableModel(graph, config, rng), dgcf_(DgcfGraph::build(*graph)) {
    if (config_.intents < 1 || config_.dim % static_cast<std::size_t>(config_.intents) != 0) {
      throw UsageError("embedding size " + std::to_string(config_.dim) + " is not divisible by " +
                       std::to_string(config_.intents) + " intents");
    }
  }
  std::string kind() const override { return "DGCF"; }

 protected:
  ad::Var represent(const std::vector<ad::Var>& leaves, Rng*) const override {
    return dgcf_propagate(dgcf_, leaves[0], config_.intents, config_.routing_iterations, config_.layers);
  }

 private:
  DgcfGraph dgcf_;
};

class UltraGcnModel : public TrainableModel {
 public:
  UltraGcnModel(std::shared_ptr<const GraphContext> graph, ModelConfig config, Rng& rng)
      : TrainableModel(graph, config),
        constraints_(UltraGcnConstraints::build(graph->interactions, config.item_topk)),
        index_(by_user(graph->interactions), graph->num_items) {
    if (config_.dim == 0) throw UsageError("embedding size must be positive");
    const auto d = static_cast<Eigen::Index>(config_.dim);
    users_ = normal_matrix(static_cast<Eigen::Index>(graph_->num_users), d, config_.init_std, rng);
    items_ = normal_matrix(static_cast<Eigen::Index>(graph_->num_items), d, config_.init_std, rng);
  }
  std::string kind() const override { return "UltraGCN"; }

  std::vector<NamedParameter> parameters() override { return {{"user_embedding", &users_}, {"item_embedding", &items_}}; }

  ad::Var loss(ad::Tape& tape, std::span<const BprTriplet> batch, Rng& rng, std::vector<ad::Var>& leaves) override {
    leaves = {tape.parameter(users_), tape.parameter(items_)};
    std::vector<std::vector<ItemId>> negatives(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (config_.negatives == 0) continue;
      negatives[b].push_back(batch[b].negative);
      while (negatives[b].size() < config_.negatives) negatives[b].push_back(sample_negative(index_, batch[b].user, rng));
    }
    return ultragcn_loss(constraints_, leaves[0], leaves[1], batch, negatives, {config_.gamma_item, config_.l2});
  }

  EmbeddingScorer scorer() const override { return EmbeddingScorer(kind(), users_, items_); }

 private:
  static std::vector<std::vector<ItemId>> by_user(const SparseMatrix& r) {
    std::vector<std::vector<ItemId>> out(static_cast<std::size_t>(r.rows()));
    for (std::int64_t u = 0; u < r.rows(); ++u) {
      auto cols = r.row_cols(u);
      out[static_cast<std::size_t>(u)].assign(cols.begin(), cols.end());
    }
    return out;
  }

  UltraGcnConstraints constraints_;
  InteractionIndex index_;
  Matrix users_;
  Matrix items_;
};

}  // namespace

bool is_trainable_kind(const std::string& kind) {
  return kind == "LightGCN" || kind == "NGCF" || kind == "DGCF" || kind == "SGL" || kind == "UltraGCN";
}

std::unique_ptr<TrainableModel> make_model(const std::string& kind, std::shared_ptr<const GraphContext> graph,
                                           const ModelConfig& config, Rng& init_rng) {
  if (!graph) throw UsageError("model needs a graph");
  if (kind == "LightGCN") return std::make_unique<LightGcnModel>(graph, config, init_rng);
  if (kind == "SGL") return std::make_unique<SglModel>(graph, config, init_rng);
  if (kind == "NGCF") return std::make_unique<NgcfModel>(graph, config, init_rng);
  if (kind == "DGCF") return std::make_unique<DgcfModel>(graph, config, init_rng);
  if (kind == "UltraGCN") return std::make_unique<UltraGcnModel>(graph, config, init_rng);
  throw UsageError("unknown trainable model '" + kind + "'");
}

}  // namespace graphrec::gcf
