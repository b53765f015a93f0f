#include "graphrec/trainer.hpp"

#include <cmath>
#include <fstream>

#include "graphrec/error.hpp"
#include "graphrec/evaluator.hpp"
#include "graphrec/persist.hpp"

namespace graphrec {

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be at least 1");
  if (batch_size < 1) throw UsageError("batch size must be at least 1");
  if (!(learning_rate >= 0.0)) throw UsageError("learning rate must be nonnegative");
  if (patience < 1) throw UsageError("patience must be at least 1");
  if (eval_every < 1) throw UsageError("eval_every must be at least 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},   {"batch_size", batch_size}, {"learning_rate", learning_rate}, {"seed", seed},
          {"patience", patience}, {"eval_every", eval_every}, {"threads", threads}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.patience = j.value("patience", c.patience);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.threads = j.value("threads", c.threads);
  return c;
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamOptions& o) {
  if (params.size() != grads.size()) throw DataError("adam_step: parameter/gradient count mismatch");
  if (state.first.empty()) {
    for (auto* p : params) {
      state.first.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = grads[k];
    if (g.size() == 0) continue;  // parameter untouched by the loss
    Matrix& m = state.first[k];
    Matrix& v = state.second[k];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    p.array() -= o.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + o.epsilon);
  }
}

TrainResult train(gcf::TrainableModel& model, const Split& split, const TrainConfig& config) {
  config.validate();
  if (split.train.empty()) throw DataError("training set is empty");
  const InteractionIndex index(split.train);
  Rng sampler(derive_seed(config.seed, "sampler"));
  AdamState adam;
  const AdamOptions adam_options{config.learning_rate};
  const bool validating = !split.validation.empty();
  const std::size_t batches = (split.train.pairs.size() + config.batch_size - 1) / config.batch_size;

  TrainResult result;
  std::vector<Matrix> best;
  std::size_t misses = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      auto batch = sample_bpr_triplets(split.train, index, config.batch_size, sampler);
      ad::Tape tape;
      std::vector<ad::Var> leaves;
      ad::Var loss = model.loss(tape, batch, sampler, leaves);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        throw NumericalError(model.kind() + ": non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b + 1));
      }
      total += value;
      tape.backward(loss);
      auto params = model.parameters();
      std::vector<Matrix*> targets;
      std::vector<Matrix> grads;
      for (std::size_t k = 0; k < params.size(); ++k) {
        targets.push_back(params[k].value);
        grads.push_back(tape.grad(leaves[k]));
      }
      adam_step(targets, grads, adam, adam_options);
    }
    CurvePoint point{epoch, total / static_cast<double>(batches)};
    result.epochs_run = epoch;
    if (validating && epoch % config.eval_every == 0) {
      EvalOptions eo;
      eo.threads = config.threads;
      point.val_recall = evaluate(model.scorer(), split.train, split.validation, eo).mean_recall;
      if (best.empty() || point.val_recall > result.best_val_recall) {
        result.best_val_recall = point.val_recall;
        result.best_epoch = epoch;
        best.clear();
        for (auto& p : model.parameters()) best.push_back(*p.value);
        misses = 0;
      } else if (++misses >= config.patience) {
        result.curve.push_back(point);
        result.stopped_early = true;
        break;
      }
    }
    result.curve.push_back(point);
  }
  if (!best.empty()) {
    auto params = model.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) *params[k].value = best[k];
  } else {
    result.best_epoch = result.epochs_run;
  }
  return result;
}

void write_curve_tsv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(10);
  out << "epoch\tloss\tval_recall\n";
  for (const auto& p : curve) {
    out << p.epoch << '\t' << p.loss << '\t';
    if (std::isnan(p.val_recall)) {
      out << "NA";
    } else {
      out << p.val_recall;
    }
    out << '\n';
  }
}

void save_checkpoint(const std::filesystem::path& dir, gcf::TrainableModel& model, const TrainResult& result,
                     const TrainConfig& config) {
  std::filesystem::create_directories(dir);
  nlohmann::json params = nlohmann::json::array();
  for (auto& p : model.parameters()) {
    const std::string file = "param_" + p.name + ".bin";
    write_array(dir / file, *p.value, DType::f32);
    params.push_back({{"name", p.name}, {"file", file}, {"shape", {p.value->rows(), p.value->cols()}}});
  }
  auto scorer = model.scorer();
  write_array(dir / "user_embeddings.bin", scorer.user_embeddings(), DType::f32);
  write_array(dir / "item_embeddings.bin", scorer.item_embeddings(), DType::f32);
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : result.curve) {
    curve.push_back({p.epoch, p.loss, std::isnan(p.val_recall) ? nlohmann::json(nullptr) : nlohmann::json(p.val_recall)});
  }
  write_json(dir / "meta.json",
             {{"kind", model.kind()},
              {"model_config", model.config().to_json()},
              {"train_config", config.to_json()},
              {"seed", config.seed},
              {"best_epoch", result.best_epoch},
              {"best_val_recall", std::isnan(result.best_val_recall) ? nlohmann::json(nullptr)
                                                                      : nlohmann::json(result.best_val_recall)},
              {"epochs_run", result.epochs_run},
              {"stopped_early", result.stopped_early},
              {"dtype", "f32"},
              {"parameters", params},
              {"curve", curve}});
  write_curve_tsv(result.curve, dir / "curve.tsv");
}

EmbeddingScorer load_checkpoint(const std::filesystem::path& dir) {
  auto meta = read_json(dir / "meta.json");
  Matrix users = read_array(dir / "user_embeddings.bin");
  Matrix items = read_array(dir / "item_embeddings.bin");
  if (users.cols() != items.cols()) throw DataError("checkpoint in " + dir.string() + " has mismatched embeddings");
  return EmbeddingScorer(meta.at("kind").get<std::string>(), std::move(users), std::move(items));
}

}  // namespace graphrec
