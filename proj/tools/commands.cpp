#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "kge/checkpoint.hpp"
#include "kge/evaluation.hpp"
#include "kge/graph.hpp"
#include "kge/model.hpp"
#include "kge/report.hpp"
#include "kge/sampling.hpp"
#include "kge/training.hpp"

namespace kge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Unreadable inputs and bad arguments map to kUsage.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("kge", sink);
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("KGE_LOG");
  log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
  return log;
}

void require_readable(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
}

std::vector<int> parse_ks(const std::string& text) {
  ConfigEntries e{{"model", "TransE"}, {"k_values", text}};
  return resolve_config(e).k_values;
}

class Timer {
 public:
  void start(std::string phase) {
    phase_ = std::move(phase);
    t0_ = std::chrono::steady_clock::now();
  }
  double stop() {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0_;
    timings_[phase_] += dt.count();
    return dt.count();
  }
  const std::map<std::string, double>& timings() const { return timings_; }

 private:
  std::string phase_;
  std::chrono::steady_clock::time_point t0_;
  std::map<std::string, double> timings_;
};

json make_manifest(const std::string& command, const json& config, std::uint64_t seed,
                   const std::vector<std::string>& inputs, const Timer& timer) {
  json m;
  m["command"] = command;
  m["engine_version"] = KGE_VERSION;
  m["config"] = config;
  m["seed"] = seed;
  json digests = json::object();
  for (const auto& p : inputs) digests[p] = file_digest(p);
  m["inputs"] = digests;
  m["timings_s"] = timer.timings();
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

struct SplitArgs {
  std::string input, out_dir = ".";
  double share_train = 0.8;
  bool with_validation = false;
  std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& a, std::ostream& out, spdlog::logger& log) {
  Timer timer;
  require_readable(a.input);
  timer.start("load");
  KnowledgeGraph kg = load_triples_file(a.input);
  timer.stop();
  timer.start("split");
  SplitResult parts = split_kg(kg, a.share_train, a.with_validation, a.seed);
  timer.stop();
  if (parts.warning) log.warn("{}", *parts.warning);

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_triples_file(parts.train, (dir / "train.txt").string());
  if (parts.valid) write_triples_file(*parts.valid, (dir / "valid.txt").string());
  write_triples_file(parts.test, (dir / "test.txt").string());

  std::vector<char> ent(kg.n_ent(), 0), rel(kg.n_rel(), 0);
  for (const auto& t : parts.train.triples()) ent[t.head] = ent[t.tail] = rel[t.relation] = 1;
  const bool ents_ok = std::all_of(ent.begin(), ent.end(), [](char c) { return c != 0; });
  const bool rels_ok = std::all_of(rel.begin(), rel.end(), [](char c) { return c != 0; });

  json summary;
  summary["train"] = parts.train.size();
  summary["valid"] = parts.valid ? parts.valid->size() : 0;
  summary["test"] = parts.test.size();
  summary["all_entities_in_train"] = ents_ok;
  summary["all_relations_in_train"] = rels_ok;
  out << summary.dump() << "\n";
  log.info("train covers all {} entities: {}; all {} relations: {}", kg.n_ent(), ents_ok, kg.n_rel(),
           rels_ok);

  json config{{"share_train", a.share_train}, {"with_validation", a.with_validation}};
  write_text(dir / "manifest.json", make_manifest("split", config, a.seed, {a.input}, timer).dump(2) + "\n");
  return ents_ok && rels_ok ? kOk : kFailure;
}

struct TrainArgs {
  std::string config, out_dir = "run";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::size_t threads = 1;
  std::size_t batch_size = 64;
};

int cmd_train(const TrainArgs& a, std::ostream& out, spdlog::logger& log) {
  Timer timer;
  require_readable(a.config);
  ConfigEntries overrides;
  for (const auto& s : a.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (a.seed) overrides.emplace_back("seed", std::to_string(*a.seed));
  const TrainConfig cfg = load_config(a.config, overrides);

  if (cfg.train_path.empty()) throw UsageError("config needs a 'train' path");
  std::vector<std::string> paths{cfg.train_path};
  if (!cfg.valid_path.empty()) paths.push_back(cfg.valid_path);
  if (!cfg.test_path.empty()) paths.push_back(cfg.test_path);
  for (const auto& p : paths) require_readable(p);

  if (is_translational(cfg.model) != (cfg.loss == LossKind::Margin))
    log.warn("{} is usually trained with the {} loss", to_string(cfg.model),
             is_translational(cfg.model) ? "margin" : "sigmoid");

  timer.start("load");
  std::vector<KnowledgeGraph> graphs = load_triple_files(paths);
  timer.stop();
  const KnowledgeGraph& train = graphs[0];
  const KnowledgeGraph* valid = cfg.valid_path.empty() ? nullptr : &graphs[1];
  const KnowledgeGraph* test = cfg.test_path.empty() ? nullptr : &graphs.back();
  if (train.empty()) throw Error("training file has no triples");

  std::vector<const KnowledgeGraph*> all;
  for (const auto& g : graphs) all.push_back(&g);
  const FilterSet filter(all);

  Model model = init_model(cfg.model, train.n_ent(), train.n_rel(), cfg.dim, cfg.rel_dim,
                           mix_seed(cfg.seed, 0));
  NegativeSampler sampler(cfg.sampler, train, mix_seed(cfg.seed, 1));
  Rng shuffle_rng(mix_seed(cfg.seed, 2));
  AdamState adam = AdamState::for_model(model);
  const LinkPredictionOptions lp{a.batch_size, a.threads, EvalMode::Batched};

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  std::string train_log;
  double loss = 0.0;
  for (std::size_t epoch = 1; epoch <= cfg.n_epochs; ++epoch) {
    timer.start("train");
    loss = train_epoch(model, train, sampler, cfg, adam, shuffle_rng);
    timer.stop();
    json line{{"epoch", epoch}, {"loss", loss}};
    if (cfg.eval_every > 0 && epoch % cfg.eval_every == 0 && valid && !valid->empty()) {
      timer.start("eval");
      line["valid"] = metrics_to_json(link_prediction(model, *valid, filter, cfg.k_values, lp));
      timer.stop();
      log.info("epoch {}: loss {:.6g}, valid filtered MRR {:.4f}", epoch, loss,
               line["valid"]["combined"]["mrr_filt"].get<double>());
    } else {
      log.debug("epoch {}: loss {:.6g}", epoch, loss);
    }
    train_log += line.dump() + "\n";
  }
  write_text(dir / "train_log.jsonl", train_log);

  json summary{{"epochs", cfg.n_epochs}, {"final_loss", loss},
               {"checkpoint", (dir / "model.kge").string()}};
  if (test && !test->empty()) {
    timer.start("eval");
    json metrics = metrics_to_json(link_prediction(model, *test, filter, cfg.k_values, lp));
    timer.stop();
    write_text(dir / "test_metrics.json", metrics.dump(2) + "\n");
    summary["test"] = metrics;
  }
  Checkpoint ckpt{model, train.entities(), train.relations()};
  save_checkpoint(ckpt, (dir / "model.kge").string());

  json config = config_to_map(cfg);
  paths.insert(paths.begin(), a.config);
  write_text(dir / "manifest.json", make_manifest("train", config, cfg.seed, paths, timer).dump(2) + "\n");
  out << summary.dump() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, test, ks = "1,3,10", manifest;
  std::vector<std::string> filters;
  std::size_t batch_size = 64;
  std::size_t threads = 1;
  std::size_t repeats = 5;
  bool no_timing = false;
};

struct EvalInputs {
  Checkpoint ckpt;
  std::vector<KnowledgeGraph> graphs;  // test first, then filter files
  std::unique_ptr<FilterSet> filter;
};

EvalInputs load_eval_inputs(const EvalArgs& a) {
  require_readable(a.checkpoint);
  require_readable(a.test);
  for (const auto& f : a.filters) require_readable(f);
  EvalInputs in{load_checkpoint(a.checkpoint), {}, nullptr};
  if (!in.ckpt.entities || !in.ckpt.relations)
    throw Error("checkpoint '" + a.checkpoint + "' carries no label dictionaries");
  auto ents = std::make_shared<const Dictionary>(*in.ckpt.entities);
  auto rels = std::make_shared<const Dictionary>(*in.ckpt.relations);
  in.graphs.push_back(load_triples_with(a.test, ents, rels));
  for (const auto& f : a.filters) in.graphs.push_back(load_triples_with(f, ents, rels));
  std::vector<const KnowledgeGraph*> ptrs;
  for (const auto& g : in.graphs) ptrs.push_back(&g);
  in.filter = std::make_unique<FilterSet>(ptrs);
  return in;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, spdlog::logger& log) {
  Timer timer;
  timer.start("load");
  EvalInputs in = load_eval_inputs(a);
  timer.stop();
  const auto ks = parse_ks(a.ks);
  timer.start("eval");
  LPMetrics m = link_prediction(in.ckpt.model, in.graphs[0], *in.filter, ks,
                                {a.batch_size, a.threads, EvalMode::Batched});
  const double wall = timer.stop();
  out << metrics_to_json(m, a.no_timing ? std::nullopt : std::optional<double>(wall)).dump(2) << "\n";
  log.info("{} facts evaluated in {:.3f} s", m.n_facts, wall);
  if (!a.manifest.empty()) {
    std::vector<std::string> inputs{a.checkpoint, a.test};
    inputs.insert(inputs.end(), a.filters.begin(), a.filters.end());
    json config{{"batch_size", a.batch_size}, {"threads", a.threads}, {"k_values", ks}};
    write_text(a.manifest, make_manifest("eval", config, 0, inputs, timer).dump(2) + "\n");
  }
  return kOk;
}

int cmd_bench(const EvalArgs& a, std::ostream& out, spdlog::logger& log) {
  Timer timer;
  timer.start("load");
  EvalInputs in = load_eval_inputs(a);
  timer.stop();
  const auto ks = parse_ks(a.ks);
  timer.start("bench");
  BenchComparison c = bench_compare(in.ckpt.model, in.graphs[0], *in.filter, a.batch_size, a.repeats, ks,
                                    a.threads);
  timer.stop();
  json doc;
  doc["batched"] = bench_to_json(c.batched, c.speedup);
  doc["looped"] = bench_to_json(c.looped);
  doc["metrics_identical"] = true;
  doc["metrics"] = metrics_to_json(c.batched.metrics);
  out << doc.dump(2) << "\n";
  log.info("batched {:.4f} s, looped {:.4f} s, speedup {:.2f}x", c.batched.mean_time_s, c.looped.mean_time_s,
           c.speedup);
  if (!a.manifest.empty()) {
    std::vector<std::string> inputs{a.checkpoint, a.test};
    inputs.insert(inputs.end(), a.filters.begin(), a.filters.end());
    json config{{"batch_size", a.batch_size}, {"threads", a.threads}, {"repeats", a.repeats}};
    write_text(a.manifest, make_manifest("bench", config, 0, inputs, timer).dump(2) + "\n");
  }
  return kOk;
}

void add_eval_options(CLI::App* cmd, EvalArgs& a, bool bench) {
  cmd->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  cmd->add_option("--test", a.test, "Facts to evaluate")->required();
  cmd->add_option("--filter", a.filters, "Extra fact files for the filtered setting (repeatable)");
  cmd->add_option("--k", a.ks, "Comma-separated Hit@k cutoffs");
  cmd->add_option("--batch-size", a.batch_size, "Facts per scoring batch")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--manifest", a.manifest, "Write a run manifest to this path");
  if (bench)
    cmd->add_option("--repeats", a.repeats, "Timed runs per mode")->check(CLI::PositiveNumber);
  else
    cmd->add_flag("--no-timing", a.no_timing, "Omit wall_time_s from the metrics document");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);
  CLI::App app{"Knowledge graph embedding: split, train, evaluate, benchmark"};
  app.name("kge");
  app.require_subcommand(1);

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Split a fact file into train/valid/test");
  split->add_option("input", split_args.input, "Tab-separated fact file")->required();
  split->add_option("--out-dir", split_args.out_dir, "Output directory");
  split->add_option("--share-train", split_args.share_train, "Share of facts for training")
      ->check(CLI::Range(0.0, 1.0));
  split->add_flag("--with-validation", split_args.with_validation, "Also write valid.txt");
  split->add_option("--seed", split_args.seed, "Shuffle seed");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", train_args.config, "key = value config file")->required();
  train->add_option("--out", train_args.out_dir, "Output directory");
  train->add_option("--seed", train_args.seed, "Override the config seed");
  train->add_option("--set", train_args.sets, "Override a config key (key=value, repeatable)");
  train->add_option("--threads", train_args.threads, "Evaluation worker threads")->check(CLI::PositiveNumber);
  train->add_option("--batch-size", train_args.batch_size, "Evaluation batch size")->check(CLI::PositiveNumber);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Link-prediction metrics for a checkpoint");
  add_eval_options(eval, eval_args, false);

  EvalArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time batched against looped evaluation");
  add_eval_options(bench, bench_args, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    if (split->parsed()) return cmd_split(split_args, out, *log);
    if (train->parsed()) return cmd_train(train_args, out, *log);
    if (eval->parsed()) return cmd_eval(eval_args, out, *log);
    if (bench->parsed()) return cmd_bench(bench_args, out, *log);
  } catch (const UsageError& e) {
    log->error("{}", e.what());
    return kUsage;
  } catch (const ConfigKeyError& e) {
    log->error("{}", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kFailure;
  }
  return kUsage;
}

}  // namespace kge::cli
