#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graphrec/autodiff.hpp"
#include "graphrec/objectives.hpp"
#include "graphrec/scorer.hpp"

namespace graphrec::gcf {

using ad::IndexList;

/// Fixed graph operators derived from one training set. Node order in the
/// adjacency is users first, then items (item i is node |U| + i).
struct GraphContext {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  SparseMatrix interactions;                        // R
  std::shared_ptr<const SparseMatrix> adjacency;    // A
  std::shared_ptr<const SparseMatrix> normalized;   // D^{-1/2} A D^{-1/2}
  DegreeVectors degrees;

  static GraphContext build(const InteractionSet& train);
  std::size_t num_nodes() const noexcept { return num_users + num_items; }
};

// ---- propagation rules -------------------------------------------------------

/// Mean of E^(0..L) with E^(l+1) = Ã E^(l).
ad::Var lightgcn_propagate(std::shared_ptr<const SparseMatrix> normalized, ad::Var e0, int layers);

struct NgcfLayer {
  ad::Var w1;
  ad::Var w2;
};

/// Per layer: LeakyReLU((E + ÃE) W1 + ((ÃE) ⊙ E) W2), optional message dropout
/// (mask drawn from rng), rows L2-normalised; output is [E0 | norm(E1) | ... ].
/// Pass rng == nullptr or dropout == 0 to disable dropout.
ad::Var ngcf_propagate(std::shared_ptr<const SparseMatrix> normalized, ad::Var e0, const std::vector<NgcfLayer>& layers,
                       double dropout, Rng* rng);

/// Edge bookkeeping for intent routing: every stored entry of A maps back to
/// the interaction (edge of R) it came from.
struct DgcfGraph {
  std::size_t num_edges = 0;
  std::shared_ptr<const SparseMatrix> adjacency;
  IndexList entry_edge;   // A entry -> edge id
  IndexList entry_row;    // A entry -> row node
  IndexList entry_col;    // A entry -> column node
  IndexList edge_user;    // edge -> user node
  IndexList edge_item;    // edge -> item node

  static DgcfGraph build(const GraphContext& graph);
};

/// Disentangled propagation: embeddings split into `intents` chunks; per-edge
/// intent scores start at 1 and are shared across layers. Per layer, each of
/// `iterations` routing passes applies softmax over intents, propagates every
/// chunk over its degree-normalised weighted adjacency, and adds
/// e_u^k · tanh(e_i^k) to the scores; a final pass propagates with the updated
/// scores. Layer outputs (including layer 0) are summed.
/// When routing_weights is given, the softmax weights of every pass are appended.
ad::Var dgcf_propagate(const DgcfGraph& graph, ad::Var e0, int intents, int iterations, int layers,
                       std::vector<Matrix>* routing_weights = nullptr);

// ---- losses -------------------------------------------------------------------

struct BatchIndices {
  IndexList users;           // user node ids
  IndexList positives;       // item node ids (offset by |U|)
  IndexList negatives;       // item node ids (offset by |U|)
  IndexList positive_items;  // raw item ids
  IndexList negative_items;  // raw item ids
  std::size_t size = 0;

  static BatchIndices from(std::span<const BprTriplet> batch, std::size_t num_users);
};

/// BPR on final node representations, L2 on the batch rows of the layer-0
/// table scaled by l2 / batch size.
ad::Var embedding_bpr_loss(ad::Var final_nodes, ad::Var e0, const BatchIndices& batch, double l2);

/// Edge dropout on the normalised adjacency: each interaction (both directions)
/// kept with probability 1 - rho, kept entries rescaled by 1 / (1 - rho).
std::shared_ptr<const SparseMatrix> drop_edges(const SparseMatrix& normalized, double rho, Rng& rng);

struct SglParams {
  int layers = 3;
  double rho = 0.1;
  double tau = 0.2;
  double lambda_ssl = 0.1;
  double l2 = 1e-4;
};

/// InfoNCE between two views over a node set, summed over nodes.
ad::Var info_nce(ad::Var view_a, ad::Var view_b, const IndexList& nodes, double tau);

/// LightGCN BPR on the full graph + lambda_ssl * (user InfoNCE + item InfoNCE)
/// over two edge-dropped views.
ad::Var sgl_loss(std::shared_ptr<const SparseMatrix> normalized, ad::Var e0, const BatchIndices& batch,
                 const SglParams& params, Rng& rng);

/// Constraint weights and item-item neighbourhoods for UltraGCN.
struct UltraGcnConstraints {
  Vector user_factor;         // sqrt(d_u + 1) / d_u
  Vector item_factor;         // 1 / sqrt(d_i + 1)
  SparseMatrix item_neighbors;  // top-k omega weights per item, self excluded

  static UltraGcnConstraints build(const SparseMatrix& interactions, std::size_t item_topk);
  double beta(UserId u, ItemId i) const { return user_factor[u] * item_factor[i]; }
};

struct UltraGcnParams {
  double gamma_item = 2.5;
  double lambda = 1e-4;
};

/// Weighted BCE on positives and sampled negatives ((1 + beta) weights),
/// gamma_item * item-item term, lambda * squared norm of the batch rows.
/// `negatives` holds n items per positive (n may be 0).
ad::Var ultragcn_loss(const UltraGcnConstraints& constraints, ad::Var users, ad::Var items,
                      std::span<const BprTriplet> positives, std::span<const std::vector<ItemId>> negatives,
                      const UltraGcnParams& params);

// ---- trainable models ------------------------------------------------------------

struct ModelConfig {
  std::size_t dim = 64;
  int layers = 3;
  double l2 = 1e-4;
  double init_std = 0.1;
  // NGCF
  double message_dropout = 0.1;
  // DGCF
  int intents = 4;
  int routing_iterations = 2;
  // SGL
  double rho = 0.1;
  double tau = 0.2;
  double lambda_ssl = 0.1;
  // UltraGCN
  std::size_t negatives = 1;
  double gamma_item = 2.5;
  std::size_t item_topk = 10;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct NamedParameter {
  std::string name;
  Matrix* value;
};

class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual std::string kind() const = 0;
  const ModelConfig& config() const noexcept { return config_; }
  virtual std::vector<NamedParameter> parameters() = 0;
  /// Records the minibatch loss on `tape`. Parameter leaves are created in
  /// parameters() order and returned through `leaves`.
  virtual ad::Var loss(ad::Tape& tape, std::span<const BprTriplet> batch, Rng& rng, std::vector<ad::Var>& leaves) = 0;
  /// Inference-time representations (dropout off, full graph).
  virtual EmbeddingScorer scorer() const = 0;

 protected:
  TrainableModel(std::shared_ptr<const GraphContext> graph, ModelConfig config)
      : graph_(std::move(graph)), config_(config) {}
  std::shared_ptr<const GraphContext> graph_;
  ModelConfig config_;
};

/// Known kinds: LightGCN, NGCF, DGCF, SGL, UltraGCN.
std::unique_ptr<TrainableModel> make_model(const std::string& kind, std::shared_ptr<const GraphContext> graph,
                                           const ModelConfig& config, Rng& init_rng);
bool is_trainable_kind(const std::string& kind);

}  // namespace graphrec::gcf
