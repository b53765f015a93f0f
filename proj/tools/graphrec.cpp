#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "graphrec/baselines.hpp"
#include "graphrec/error.hpp"
#include "graphrec/evaluator.hpp"
#include "graphrec/flow.hpp"
#include "graphrec/gfcf.hpp"
#include "graphrec/hypersearch.hpp"
#include "graphrec/persist.hpp"
#include "graphrec/trainer.hpp"

#ifndef GRAPHREC_VERSION
#define GRAPHREC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace graphrec;
using nlohmann::json;

namespace {

struct DataOptions {
  std::string input;
  std::string train_file;
  std::string test_file;
  std::string layout = "pairs";
  std::string delimiter;
  bool skip_header = false;
  std::size_t user_column = 0;
  std::size_t item_column = 1;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "interaction log (one pair per line)");
    app->add_option("--train-file", train_file, "pre-split training file");
    app->add_option("--test-file", test_file, "pre-split test file");
    app->add_option("--layout", layout, "pairs | adjacency")->check(CLI::IsMember({"pairs", "adjacency"}));
    app->add_option("--delimiter", delimiter, "field separator (default: auto)");
    app->add_flag("--skip-header", skip_header);
    app->add_option("--user-column", user_column);
    app->add_option("--item-column", item_column);
  }

  ColumnFormat format() const {
    ColumnFormat f;
    f.layout = layout == "adjacency" ? ColumnFormat::Layout::adjacency : ColumnFormat::Layout::pairs;
    if (delimiter == "\\t" || delimiter == "tab") {
      f.delimiter = '\t';
    } else if (!delimiter.empty()) {
      f.delimiter = delimiter[0];
    }
    f.skip_header = skip_header;
    f.user_column = user_column;
    f.item_column = item_column;
    return f;
  }

  bool published() const { return !train_file.empty() || !test_file.empty(); }

  void require_one() const {
    if (published() == !input.empty()) throw UsageError("give either --input or both --train-file and --test-file");
    if (published() && (train_file.empty() || test_file.empty())) throw UsageError("--train-file and --test-file go together");
  }
};

// Every option of a subcommand, as given after config/flag merging.
json collect_options(const CLI::App* app) {
  json j = json::object();
  for (const auto* opt : app->get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help") continue;
    const auto& res = opt->results();
    if (res.empty()) continue;
    j[opt->get_lnames()[0]] = res.size() == 1 ? json(res[0]) : json(res);
  }
  return j;
}

void write_manifest(const fs::path& dir, const CLI::App* app, const json& seeds) {
  fs::create_directories(dir);
  json options = collect_options(app);
  write_json(dir / "manifest.json", {{"command", app->get_name()},
                                     {"version", GRAPHREC_VERSION},
                                     {"options", options},
                                     {"config_hash", content_hash(options)},
                                     {"seeds", seeds}});
}

// Output location that is a file: the manifest sits next to it.
void write_file_manifest(const fs::path& file, const CLI::App* app, const json& seeds) {
  fs::path dir = file.parent_path().empty() ? fs::path(".") : file.parent_path();
  fs::create_directories(dir);
  json options = collect_options(app);
  write_json(dir / (file.filename().string() + ".manifest.json"), {{"command", app->get_name()},
                                                                 {"version", GRAPHREC_VERSION},
                                                                 {"options", options},
                                                                 {"config_hash", content_hash(options)},
                                                                 {"seeds", seeds}});
}

InteractionSet merged(const InteractionSet& a, const InteractionSet& b) {
  std::vector<Interaction> pairs = a.pairs;
  pairs.insert(pairs.end(), b.pairs.begin(), b.pairs.end());
  return a.with_pairs(std::move(pairs));
}

Split load_split_checked(const std::string& dir) {
  if (dir.empty()) throw UsageError("--split is required");
  return load_split(dir);
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::ofstream open_out(const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// ---- model zoo -----------------------------------------------------------------

const std::vector<std::string> kClosedForm = {"MostPop", "Random", "UserKNN", "ItemKNN", "RP3beta", "EASE", "GFCF"};

bool is_closed_form(const std::string& kind) {
  return std::find(kClosedForm.begin(), kClosedForm.end(), kind) != kClosedForm.end();
}

std::size_t count_param(const json& p, const char* key, double fallback) {
  double v = p.value(key, fallback);
  if (!(v >= 1.0)) throw UsageError(std::string(key) + " must be at least 1");
  return static_cast<std::size_t>(std::llround(v));
}

std::unique_ptr<Scorer> fit_closed_form(const std::string& kind, const SparseMatrix& r, const json& p, std::uint64_t seed) {
  if (kind == "MostPop") return std::make_unique<MostPopScorer>(r);
  if (kind == "Random") return std::make_unique<RandomScorer>(static_cast<std::size_t>(r.cols()), derive_seed(seed, "random"));
  if (kind == "UserKNN" || kind == "ItemKNN") {
    return std::make_unique<KnnScorer>(r, kind == "UserKNN" ? KnnMode::user : KnnMode::item,
                                       count_param(p, "k", 100), p.value("shrink", 10.0));
  }
  if (kind == "RP3beta") return std::make_unique<Rp3betaScorer>(r, count_param(p, "k", 100), p.value("beta", 0.5));
  if (kind == "EASE") return std::make_unique<EaseScorer>(r, p.value("l2", 500.0), kDefaultDenseBudgetBytes);
  if (kind == "GFCF") {
    RandomizedSvdOptions svd;
    svd.seed = derive_seed(seed, "svd");
    auto filter = gfcf_fit(r, count_param(p, "rank", 256), p.value("alpha", 0.3), svd);
    return std::make_unique<GfcfScorer>(r, std::move(filter));
  }
  throw UsageError("unknown model '" + kind + "'");
}

gcf::ModelConfig model_config_from(const json& base, const json& overrides) {
  json merged_cfg = base;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) merged_cfg[it.key()] = it.value();
  return gcf::ModelConfig::from_json(merged_cfg);
}

// ---- subcommands ---------------------------------------------------------------

struct StatsCmd {
  DataOptions data;
  std::string dataset = "dataset";
  std::string out;

  void run(const CLI::App* app) {
    data.require_one();
    InteractionSet ds;
    if (data.published()) {
      // statistics describe the training portion
      ds = load_published_split(data.train_file, data.test_file, data.format()).train;
    } else {
      ds = load_interactions(data.input, data.format());
    }
    auto st = compute_stats(ds);
    std::ostringstream tsv;
    tsv << "Dataset\tUsers\tItems\tInteractions\tDensity\tAvgDegU\tAvgDegI\n"
        << dataset << '\t' << st.users << '\t' << st.items << '\t' << st.edges << '\t' << fixed(st.density, 4) << '\t'
        << fixed(st.avg_deg_u, 4) << '\t' << fixed(st.avg_deg_i, 4) << '\n';
    if (out.empty()) {
      std::cout << tsv.str();
    } else {
      open_out(out) << tsv.str();
      write_file_manifest(out, app, json::object());
    }
  }
};

struct SplitCmd {
  DataOptions data;
  double ratio = 0.8;
  double validation = 0.1;
  std::uint64_t seed = 2022;
  std::string out;

  void run(const CLI::App* app) {
    data.require_one();
    if (out.empty()) throw UsageError("--out is required");
    if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("--ratio must lie in (0, 1)");
    if (!(validation >= 0.0 && validation < 1.0)) throw UsageError("--validation must lie in [0, 1)");
    Split split;
    if (data.published()) {
      split = load_published_split(data.train_file, data.test_file, data.format());
    } else {
      split = holdout_split(load_interactions(data.input, data.format()), ratio, derive_seed(seed, "split"));
    }
    if (validation > 0.0) {
      split.validation_seed = derive_seed(seed, "validation");
      auto [sub, val] = validation_carveout(split.train, validation, split.validation_seed);
      split.train = std::move(sub);
      split.validation = std::move(val);
      split.validation_ratio = validation;
    }
    save_split(split, out);
    write_manifest(out, app, {{"root", seed}, {"split", split.seed}, {"validation", split.validation_seed}});
    std::cerr << "split: " << split.train.pairs.size() << " train, " << split.validation.pairs.size() << " validation, "
              << split.test.pairs.size() << " test interactions\n";
  }
};

struct ModelFlags {
  gcf::ModelConfig model;
  TrainConfig train;

  void attach(CLI::App* app) {
    app->add_option("--dim", model.dim);
    app->add_option("--layers", model.layers);
    app->add_option("--l2", model.l2);
    app->add_option("--init-std", model.init_std);
    app->add_option("--message-dropout", model.message_dropout);
    app->add_option("--intents", model.intents);
    app->add_option("--routing-iterations", model.routing_iterations);
    app->add_option("--rho", model.rho);
    app->add_option("--tau", model.tau);
    app->add_option("--ssl-weight", model.lambda_ssl);
    app->add_option("--negatives", model.negatives);
    app->add_option("--gamma-item", model.gamma_item);
    app->add_option("--item-topk", model.item_topk);
    app->add_option("--epochs", train.epochs);
    app->add_option("--batch-size", train.batch_size);
    app->add_option("--lr", train.learning_rate);
    app->add_option("--seed", train.seed);
    app->add_option("--patience", train.patience);
    app->add_option("--eval-every", train.eval_every);
    app->add_option("--threads", train.threads);
  }
};

TrainResult train_model(const std::string& kind, const Split& split, const gcf::ModelConfig& mc, const TrainConfig& tc,
                        std::unique_ptr<gcf::TrainableModel>& model) {
  auto graph = std::make_shared<const gcf::GraphContext>(gcf::GraphContext::build(split.train));
  Rng init(derive_seed(tc.seed, "init"));
  model = gcf::make_model(kind, graph, mc, init);
  return train(*model, split, tc);
}

struct TrainCmd {
  std::string split_dir;
  std::string kind;
  std::string out;
  ModelFlags flags;

  void run(const CLI::App* app) {
    if (!gcf::is_trainable_kind(kind)) throw UsageError("'" + kind + "' is not a trainable model");
    if (out.empty()) throw UsageError("--out is required");
    Split split = load_split_checked(split_dir);
    std::unique_ptr<gcf::TrainableModel> model;
    auto result = train_model(kind, split, flags.model, flags.train, model);
    save_checkpoint(out, *model, result, flags.train);
    write_manifest(out, app,
                   {{"root", flags.train.seed},
                    {"init", derive_seed(flags.train.seed, "init")},
                    {"sampler", derive_seed(flags.train.seed, "sampler")}});
    std::cerr << kind << ": " << result.epochs_run << " epochs, best epoch " << result.best_epoch << '\n';
  }
};

struct TuneCmd {
  std::string split_dir;
  std::string kind;
  std::string space_file;
  std::string engine = "random";
  std::size_t trials = 20;
  std::uint64_t seed = 2022;
  unsigned threads = 1;
  std::string out;
  ModelFlags flags;

  void run(const CLI::App* app) {
    if (out.empty()) throw UsageError("--out is required");
    Split split = load_split_checked(split_dir);
    if (split.validation.empty()) throw DependencyError("tuning needs a split with a validation set (split --validation)");
    SearchSpace space = space_file.empty() ? default_search_space(kind) : parse_search_space(read_json(space_file));
    const SparseMatrix r = build_interaction_matrix(split.train);
    EvalOptions eo;
    eo.threads = threads;
    Objective objective;
    if (is_closed_form(kind)) {
      objective = [&](const json& cfg) {
        auto scorer = fit_closed_form(kind, r, cfg, seed);
        return evaluate(*scorer, split.train, split.validation, eo).mean_recall;
      };
    } else if (gcf::is_trainable_kind(kind)) {
      objective = [&](const json& cfg) {
        gcf::ModelConfig mc = model_config_from(flags.model.to_json(), cfg);
        TrainConfig tc = flags.train;
        tc.learning_rate = cfg.value("learning_rate", tc.learning_rate);
        tc.threads = threads;
        std::unique_ptr<gcf::TrainableModel> model;
        return train_model(kind, split, mc, tc, model).best_val_recall;
      };
    } else {
      throw UsageError("unknown model '" + kind + "'");
    }
    SearchResult res;
    if (engine == "random") {
      res = random_search(space, trials, seed, objective);
    } else {
      res = tpe_search(space, trials, seed, objective);
    }
    fs::create_directories(out);
    write_history(res.history, fs::path(out) / "history.jsonl");
    if (res.best < 0) throw NumericalError("every trial failed; see history.jsonl");
    const auto& best = res.history[static_cast<std::size_t>(res.best)];
    write_json(fs::path(out) / "best.json", {{"model", kind},
                                             {"trial", best.index},
                                             {"objective", best.objective},
                                             {"config", best.config},
                                             {"space", search_space_to_json(space)}});
    write_manifest(out, app, {{"root", seed}, {"search", derive_seed(seed, "search")}});
    std::cerr << kind << ": best validation Recall@20 " << best.objective << " (trial " << best.index << ")\n";
  }
};

struct EvaluateCmd {
  std::string split_dir;
  std::vector<std::string> models;
  std::vector<std::string> checkpoints;  // NAME=DIR
  std::vector<std::string> params;       // NAME=best.json
  std::string dataset = "dataset";
  std::size_t k = 20;
  unsigned threads = 1;
  std::uint64_t seed = 2022;
  std::string out;

  static std::pair<std::string, std::string> key_value(const std::string& s) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected NAME=PATH, got '" + s + "'");
    return {s.substr(0, eq), s.substr(eq + 1)};
  }

  void run(const CLI::App* app) {
    if (out.empty()) throw UsageError("--out is required");
    if (k < 1) throw UsageError("--k must be at least 1");
    if (models.empty() && checkpoints.empty()) throw UsageError("nothing to evaluate: give --model or --checkpoint");
    Split split = load_split_checked(split_dir);
    const InteractionSet fit = merged(split.train, split.validation);
    const SparseMatrix r = build_interaction_matrix(fit);
    std::map<std::string, json> tuned;
    for (const auto& p : params) {
      auto [name, path] = key_value(p);
      auto doc = read_json(path);
      tuned[name] = doc.contains("config") ? doc.at("config") : doc;
      if (std::find(models.begin(), models.end(), name) == models.end()) {
        throw UsageError("--params given for '" + name + "' but it is not among --model");
      }
    }
    EvalOptions eo;
    eo.k = k;
    eo.threads = threads;
    fs::create_directories(out);
    auto results = open_out(fs::path(out) / "results.tsv");
    results << "dataset\tmodel\trecall@" << k << "\tndcg@" << k << "\tusers\n";
    results << std::setprecision(10);
    auto record = [&](const std::string& name, const Scorer& scorer) {
      auto report = evaluate(scorer, split, eo);
      write_report_tsv(report, *split.train.user_map, fs::path(out) / (name + ".tsv"));
      auto summary = report_summary(report);
      summary["model"] = name;
      summary["dataset"] = dataset;
      write_json(fs::path(out) / (name + ".json"), summary);
      results << dataset << '\t' << name << '\t' << report.mean_recall << '\t' << report.mean_ndcg << '\t'
              << report.evaluable_users << '\n';
      std::cerr << name << ": recall@" << k << " " << fixed(report.mean_recall, 4) << ", ndcg@" << k << " "
                << fixed(report.mean_ndcg, 4) << '\n';
    };
    for (const auto& m : models) {
      if (!is_closed_form(m)) {
        throw UsageError("'" + m + "' needs training; pass its checkpoint with --checkpoint " + m + "=DIR");
      }
      json p = tuned.count(m) ? tuned[m] : json::object();
      record(m, *fit_closed_form(m, r, p, seed));
    }
    for (const auto& c : checkpoints) {
      auto [name, dir] = key_value(c);
      auto scorer = load_checkpoint(dir);
      if (scorer.num_items() != split.train.num_items || scorer.user_embeddings().rows() != static_cast<Eigen::Index>(split.train.num_users)) {
        throw DataError("checkpoint " + dir + " does not match the split's users and items");
      }
      record(name, scorer);
    }
    write_manifest(out, app, {{"root", seed}, {"random", derive_seed(seed, "random")}, {"svd", derive_seed(seed, "svd")}});
  }
};

// Per-user nDCG from an evaluate report, keyed by raw user id.
std::map<std::string, double> read_user_ndcg(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing report " + path.string() + " (run evaluate first)");
  std::map<std::string, double> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream s(line);
    std::string user;
    double recall = 0.0, ndcg = 0.0;
    if (!(s >> user >> recall >> ndcg)) throw ParseError(path.string(), 0, "malformed report row");
    out[user] = ndcg;
  }
  return out;
}

struct FlowCmd {
  std::string split_dir;
  std::string reports;
  std::vector<std::string> models;
  std::string out;

  void run(const CLI::App* app) {
    if (out.empty()) throw UsageError("--out is required");
    if (models.empty()) throw UsageError("--model is required");
    Split split = load_split_checked(split_dir);
    const SparseMatrix r = build_interaction_matrix(merged(split.train, split.validation));
    const IdMap& users = *split.train.user_map;

    // population: users evaluable for the first model
    auto first = read_user_ndcg(fs::path(reports) / (models[0] + ".tsv"));
    std::vector<UserId> population;
    for (std::size_t u = 0; u < users.size(); ++u) {
      if (first.count(users.raw(static_cast<UserId>(u)))) population.push_back(static_cast<UserId>(u));
    }
    if (population.size() < 4) throw DataError("quartiles need at least 4 evaluable users");

    fs::create_directories(out);
    std::vector<Vector> flow;
    std::vector<QuartilePartition> parts;
    for (int hop = 1; hop <= 3; ++hop) {
      flow.push_back(info_flow(r, hop));
      std::vector<double> values;
      for (auto u : population) values.push_back(flow.back()[u]);
      parts.push_back(quartile_partition(values));
      if (parts.back().degenerate) std::cerr << "warning: hop " << hop << " values are all equal; one group only\n";
    }
    auto profile = open_out(fs::path(out) / "flow_profile.tsv");
    profile << std::setprecision(17) << "user\thop1\thop2\thop3\tq1\tq2\tq3\n";
    for (std::size_t p = 0; p < population.size(); ++p) {
      auto u = population[p];
      profile << users.raw(u) << '\t' << flow[0][u] << '\t' << flow[1][u] << '\t' << flow[2][u] << '\t'
              << parts[0].group[p] << '\t' << parts[1].group[p] << '\t' << parts[2].group[p] << '\n';
    }
    std::vector<FlowTable> tables(3);
    for (const auto& m : models) {
      auto per_user = read_user_ndcg(fs::path(reports) / (m + ".tsv"));
      std::vector<double> metric;
      for (auto u : population) {
        auto it = per_user.find(users.raw(u));
        if (it == per_user.end()) throw DataError("report for " + m + " lacks user " + users.raw(u));
        metric.push_back(it->second);
      }
      double global = 0.0;
      for (double v : metric) global += v;
      global /= static_cast<double>(metric.size());
      for (int h = 0; h < 3; ++h) {
        tables[static_cast<std::size_t>(h)].hop = h + 1;
        tables[static_cast<std::size_t>(h)].models.push_back(m);
        tables[static_cast<std::size_t>(h)].rows.push_back(quartile_report(metric, parts[static_cast<std::size_t>(h)].group, global));
      }
    }
    write_flow_tsv(tables, fs::path(out) / "quartiles.tsv");
    write_manifest(out, app, json::object());
  }
};

struct ReportCmd {
  std::vector<std::string> inputs;
  std::string out;

  struct Row {
    std::string dataset, model;
    double recall, ndcg;
  };

  void run(const CLI::App* app) {
    if (inputs.empty()) throw UsageError("--results is required");
    std::vector<Row> rows;
    for (const auto& path : inputs) {
      std::ifstream in(path);
      if (!in) throw DependencyError("missing results file " + path + " (run evaluate first)");
      std::string line;
      std::getline(in, line);
      std::size_t n = 1;
      while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::istringstream s(line);
        Row row;
        if (!(std::getline(s, row.dataset, '\t') && std::getline(s, row.model, '\t') && s >> row.recall >> row.ndcg)) {
          throw ParseError(path, n, "expected dataset, model, recall, ndcg");
        }
        rows.push_back(row);
      }
    }
    std::map<std::string, std::vector<Row>> by_dataset;
    for (const auto& r : rows) by_dataset[r.dataset].push_back(r);
    std::ostringstream tsv;
    tsv << "dataset\tmodel\trecall\trecall_rank\trecall_vs_worst_pct\tndcg\tndcg_rank\tndcg_vs_worst_pct\n";
    for (const auto& [dataset, group] : by_dataset) {
      auto rank_of = [&](double v, auto field) {
        int rank = 1;
        for (const auto& o : group) rank += (o.*field) > v ? 1 : 0;
        return rank;
      };
      double worst_r = group[0].recall, worst_n = group[0].ndcg;
      for (const auto& o : group) {
        worst_r = std::min(worst_r, o.recall);
        worst_n = std::min(worst_n, o.ndcg);
      }
      auto rel = [](double v, double worst) { return worst > 0.0 ? fixed((v / worst - 1.0) * 100.0, 2) : std::string("NA"); };
      for (const auto& o : group) {
        tsv << dataset << '\t' << o.model << '\t' << fixed(o.recall, 4) << '\t' << rank_of(o.recall, &Row::recall) << '\t'
            << rel(o.recall, worst_r) << '\t' << fixed(o.ndcg, 4) << '\t' << rank_of(o.ndcg, &Row::ndcg) << '\t'
            << rel(o.ndcg, worst_n) << '\n';
      }
    }
    if (out.empty()) {
      std::cout << tsv.str();
    } else {
      open_out(out) << tsv.str();
      write_file_manifest(out, app, json::object());
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph collaborative filtering replication toolkit"};
  app.set_version_flag("--version", std::string(GRAPHREC_VERSION));
  app.set_config("--config", "", "INI/TOML configuration; flags given on the command line win");
  app.require_subcommand(1);

  StatsCmd stats;
  auto* s_stats = app.add_subcommand("stats", "dataset statistics as a TSV row");
  stats.data.attach(s_stats);
  s_stats->add_option("--dataset", stats.dataset);
  s_stats->add_option("--out", stats.out, "TSV path (default: stdout)");

  SplitCmd split;
  auto* s_split = app.add_subcommand("split", "per-user hold-out split with optional validation carve-out");
  split.data.attach(s_split);
  s_split->add_option("--ratio", split.ratio, "training share per user");
  s_split->add_option("--validation", split.validation, "share of training moved to validation");
  s_split->add_option("--seed", split.seed);
  s_split->add_option("--out", split.out);

  TrainCmd trainc;
  auto* s_train = app.add_subcommand("train", "train a message-passing model and write a checkpoint");
  s_train->add_option("--split", trainc.split_dir);
  s_train->add_option("--model", trainc.kind)->required();
  s_train->add_option("--out", trainc.out);
  trainc.flags.attach(s_train);

  TuneCmd tune;
  auto* s_tune = app.add_subcommand("tune", "hyper-parameter search on validation Recall@20");
  s_tune->add_option("--split", tune.split_dir);
  s_tune->add_option("--model", tune.kind)->required();
  s_tune->add_option("--space", tune.space_file, "JSON search space (default: built-in for the model)");
  s_tune->add_option("--engine", tune.engine)->check(CLI::IsMember({"random", "tpe"}));
  s_tune->add_option("--trials", tune.trials);
  s_tune->add_option("--search-seed", tune.seed);
  s_tune->add_option("--search-threads", tune.threads);
  s_tune->add_option("--out", tune.out);
  tune.flags.attach(s_tune);

  EvaluateCmd eval;
  auto* s_eval = app.add_subcommand("evaluate", "all-unrated-item Recall@K / nDCG@K on the test set");
  s_eval->add_option("--split", eval.split_dir);
  s_eval->add_option("--model", eval.models, "closed-form model (repeatable)");
  s_eval->add_option("--checkpoint", eval.checkpoints, "NAME=DIR of a trained model (repeatable)");
  s_eval->add_option("--params", eval.params, "NAME=best.json from tune (repeatable)");
  s_eval->add_option("--dataset", eval.dataset);
  s_eval->add_option("--k", eval.k);
  s_eval->add_option("--threads", eval.threads);
  s_eval->add_option("--seed", eval.seed);
  s_eval->add_option("--out", eval.out);

  FlowCmd flow;
  auto* s_flow = app.add_subcommand("flow", "information flow quartiles against per-user nDCG");
  s_flow->add_option("--split", flow.split_dir);
  s_flow->add_option("--reports", flow.reports, "directory written by evaluate")->required();
  s_flow->add_option("--model", flow.models)->required();
  s_flow->add_option("--out", flow.out);

  ReportCmd report;
  auto* s_report = app.add_subcommand("report", "leaderboard with ranks and improvement over the worst model");
  s_report->add_option("--results", report.inputs, "results.tsv from evaluate (repeatable)");
  s_report->add_option("--out", report.out, "TSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*s_stats) stats.run(s_stats);
    if (*s_split) split.run(s_split);
    if (*s_train) trainc.run(s_train);
    if (*s_tune) tune.run(s_tune);
    if (*s_eval) eval.run(s_eval);
    if (*s_flow) flow.run(s_flow);
    if (*s_report) report.run(s_report);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
