#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "graphrec/error.hpp"
#include "graphrec/evaluator.hpp"
#include "graphrec/trainer.hpp"
#include "support.hpp"

using namespace graphrec;
namespace gcf = graphrec::gcf;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 20 users, 60 items, three items each drawn from a user-specific block.
InteractionSet block_set() {
  test::Pairs pairs;
  for (int u = 0; u < 20; ++u) {
    for (int k = 0; k < 3; ++k) pairs.emplace_back(u, (u * 3 + k * 7) % 60);
  }
  return test::make_set(20, 60, pairs);
}

Split split_of(InteractionSet train, InteractionSet validation) {
  Split s;
  s.train = std::move(train);
  s.validation = std::move(validation);
  s.test = test::make_set(s.train.num_users, s.train.num_items, {});
  return s;
}

}  // namespace

TEST_CASE("negative sampling") {
  Rng rng(1);
  test::Pairs all_but_one;
  for (int i = 0; i < 10; ++i) {
    if (i != 6) all_but_one.emplace_back(0, i);
  }
  all_but_one.emplace_back(1, 0);
  InteractionIndex forced(test::make_set(2, 10, all_but_one));
  for (int k = 0; k < 200; ++k) CHECK(sample_negative(forced, 0, rng) == 6);

  InteractionIndex two(test::make_set(1, 10, {{0, 0}, {0, 1}}));
  std::vector<double> counts(10, 0.0);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) counts[static_cast<std::size_t>(sample_negative(two, 0, rng))] += 1.0;
  CHECK(counts[0] == 0.0);
  CHECK(counts[1] == 0.0);
  double chi2 = 0.0;
  for (std::size_t i = 2; i < 10; ++i) chi2 += std::pow(counts[i] - draws / 8.0, 2) / (draws / 8.0);
  CHECK(chi2 < 24.32);  // df = 7, p = 0.001

  Rng a(5), b(5);
  for (int k = 0; k < 50; ++k) CHECK(sample_negative(two, 0, a) == sample_negative(two, 0, b));

  test::Pairs full;
  for (int i = 0; i < 4; ++i) full.emplace_back(0, i);
  InteractionIndex saturated(test::make_set(1, 4, full));
  CHECK_THROWS_AS(sample_negative(saturated, 0, rng), DataError);
}

TEST_CASE("triplet sampling draws training positives and true negatives") {
  auto set = test::toy_graph();
  InteractionIndex index(set);
  Rng rng(2);
  auto batch = sample_bpr_triplets(set, index, 500, rng);
  CHECK(batch.size() == 500);
  for (const auto& t : batch) {
    CHECK(index.contains(t.user, t.positive));
    CHECK_FALSE(index.contains(t.user, t.negative));
  }
}

TEST_CASE("BPR loss") {
  ad::Tape t;
  Matrix s = Matrix::Constant(4, 1, 0.7);
  CHECK(bpr_loss(t.constant(s), t.constant(s), 0.0, {}).value()(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Matrix far = Matrix::Constant(4, 1, 40.0);
  CHECK(bpr_loss(t.constant(far), t.constant(-far), 0.0, {}).value()(0, 0) < 1e-15);
  ad::Tape g;
  auto pos = g.parameter(Matrix::Constant(3, 1, 0.1));
  auto neg = g.parameter(Matrix::Constant(3, 1, 0.4));
  auto loss = bpr_loss(pos, neg, 0.0, {});
  g.backward(loss);
  CHECK((g.grad(pos).array() < 0.0).all());
  CHECK((g.grad(neg).array() > 0.0).all());
  ad::Tape h;
  auto w = h.parameter(Matrix::Constant(2, 2, 1.0));
  CHECK(bpr_loss(h.constant(s), h.constant(s), 0.5, {w}).value()(0, 0) == doctest::Approx(std::log(2.0) + 2.0));
}

TEST_CASE("Adam") {
  Matrix p = Matrix::Constant(2, 2, 1.0);
  AdamState state;
  adam_step({&p}, {Matrix::Zero(2, 2)}, state, {});
  CHECK(p == Matrix::Constant(2, 2, 1.0));

  Matrix q = Matrix::Zero(1, 2);
  AdamState s2;
  AdamOptions o{0.01};
  Matrix g(1, 2);
  g << 3.0, -0.5;
  for (int k = 0; k < 100; ++k) adam_step({&q}, {g}, s2, o);
  CHECK(q(0, 0) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(q(0, 1) == doctest::Approx(1.0).epsilon(1e-6));

  // two steps by hand
  Matrix r = Matrix::Constant(1, 1, 0.5);
  AdamState s3;
  const double g1 = 2.0, g2 = -1.0, lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  adam_step({&r}, {Matrix::Constant(1, 1, g1)}, s3, {lr});
  adam_step({&r}, {Matrix::Constant(1, 1, g2)}, s3, {lr});
  double x = 0.5, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    double gt = t == 1 ? g1 : g2;
    m = b1 * m + (1 - b1) * gt;
    v = b2 * v + (1 - b2) * gt * gt;
    x -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  CHECK(r(0, 0) == doctest::Approx(x).epsilon(1e-14));
  CHECK(s3.step == 2);
}

TEST_CASE("LightGCN overfits a small training set") {
  auto set = block_set();
  auto ctx = std::make_shared<const gcf::GraphContext>(gcf::GraphContext::build(set));
  gcf::ModelConfig mc;
  mc.dim = 16;
  mc.l2 = 0.0;
  Rng init(3);
  auto model = gcf::make_model("LightGCN", ctx, mc, init);
  TrainConfig tc;
  tc.epochs = 300;
  tc.batch_size = 60;
  tc.learning_rate = 0.05;
  auto res = train(*model, split_of(set, test::make_set(20, 60, {})), tc);
  CHECK(res.epochs_run == 300);
  CHECK(res.curve.back().loss < res.curve.front().loss * 0.2);
  EvalOptions eo;
  eo.k = 3;
  auto report = evaluate(model->scorer(), test::make_set(20, 60, {}), set, eo);
  CHECK(report.mean_recall == 1.0);
}

TEST_CASE("early stopping, best-epoch restore and failure modes") {
  auto set = block_set();
  auto ctx = std::make_shared<const gcf::GraphContext>(gcf::GraphContext::build(set));
  gcf::ModelConfig mc;
  mc.dim = 8;
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 30;
  tc.eval_every = 1;
  tc.patience = 1;
  tc.learning_rate = 0.0;
  {
    Rng init(4);
    auto model = gcf::make_model("LightGCN", ctx, mc, init);
    auto res = train(*model, split_of(set, test::toy_graph()), tc);
    CHECK(res.stopped_early);
    CHECK(res.epochs_run == 2);
    CHECK(res.best_epoch == 1);
  }
  {
    auto carved = validation_carveout(set, 0.67, 9);
    auto split = split_of(carved.first, carved.second);
    auto sub_ctx = std::make_shared<const gcf::GraphContext>(gcf::GraphContext::build(split.train));
    Rng init(4);
    auto model = gcf::make_model("LightGCN", sub_ctx, mc, init);
    tc.learning_rate = 0.02;
    tc.patience = 3;
    tc.eval_every = 2;
    auto res = train(*model, split, tc);
    double seen = -1.0;
    for (const auto& p : res.curve) {
      if (!std::isnan(p.val_recall)) seen = std::max(seen, p.val_recall);
    }
    CHECK(res.best_val_recall == seen);
    CHECK(evaluate(model->scorer(), split.train, split.validation).mean_recall == res.best_val_recall);
    if (res.stopped_early) CHECK(res.epochs_run == res.best_epoch + tc.patience * tc.eval_every);
  }
  {
    Rng init(4);
    auto model = gcf::make_model("LightGCN", ctx, mc, init);
    (*model->parameters()[0].value)(0, 0) = std::numeric_limits<double>::quiet_NaN();
    tc.learning_rate = 0.01;
    CHECK_THROWS_AS(train(*model, split_of(set, test::make_set(20, 60, {})), tc), NumericalError);
  }
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("training is bit-reproducible and checkpoints round-trip") {
  auto set = block_set();
  auto ctx = std::make_shared<const gcf::GraphContext>(gcf::GraphContext::build(set));
  gcf::ModelConfig mc;
  mc.dim = 8;
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 16;
  tc.learning_rate = 0.01;
  std::vector<std::filesystem::path> dirs;
  for (int run = 0; run < 2; ++run) {
    for (std::string kind : {"LightGCN", "NGCF", "DGCF", "SGL", "UltraGCN"}) {
      Rng init(derive_seed(tc.seed, "init"));
      auto model = gcf::make_model(kind, ctx, mc, init);
      auto res = train(*model, split_of(set, test::make_set(20, 60, {})), tc);
      auto dir = test::scratch_dir("ckpt_" + kind + std::to_string(run));
      save_checkpoint(dir, *model, res, tc);
      dirs.push_back(dir);
    }
  }
  for (std::size_t k = 0; k < 5; ++k) {
    for (const auto& entry : std::filesystem::directory_iterator(dirs[k])) {
      CAPTURE(entry.path().string());
      CHECK(slurp(entry.path()) == slurp(dirs[k + 5] / entry.path().filename()));
    }
  }
  Rng init(derive_seed(tc.seed, "init"));
  auto model = gcf::make_model("LightGCN", ctx, mc, init);
  auto scorer = load_checkpoint(dirs[0]);
  CHECK(scorer.name() == "LightGCN");
  CHECK(scorer.user_embeddings().rows() == 20);
  CHECK(scorer.item_embeddings().rows() == 60);
  auto again = load_checkpoint(dirs[5]);
  CHECK(scorer.user_embeddings() == again.user_embeddings());
  CHECK_THROWS_AS(load_checkpoint(test::scratch_dir("ckpt_missing")), DataError);
}
