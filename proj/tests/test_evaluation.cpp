#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "kge/evaluation.hpp"
#include "kge/report.hpp"
#include "kge/sampling.hpp"
#include "oracles.hpp"

using namespace kge;

namespace {

std::vector<int> ks{1, 3, 10};

std::size_t rel_dim_for(ModelKind k) { return k == ModelKind::TransR ? 3 : k == ModelKind::TransD ? 6 : 4; }

}  // namespace

TEST_CASE("rank_of") {
  std::vector<double> s{0.9, 0.1, 0.5};
  CHECK(rank_of(s, 2) == 2);
  bool mask[3] = {true, false, false};
  CHECK(rank_of(s, 2, mask) == 1);
  std::vector<double> flat(7, 0.25);
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(rank_of(flat, i) == 1);
  CHECK(rank_of(s, 0) == 1);
  CHECK(rank_of(s, 1) == 3);
}

TEST_CASE("hand-placed TransE tail test") {
  auto kg = load_triples("a\tr\tb\n");
  // entity c is added through a second fact only in the filter graph
  auto full = load_triples("a\tr\tb\nb\tr\tc\n");
  auto test = full.with_triples({full[0]});
  auto m = make_model(ModelKind::TransE, 3, 1, 2, 2);
  m.table("ent").data = {0, 0, 1, 0, 0, 1};  // a, b, c
  m.table("rel").data = {1, 0};
  FilterSet filter{&full};
  auto ranks = link_prediction_ranks(m, test, filter);
  CHECK(ranks.tail_raw[0] == 1);
  auto metrics = link_prediction(m, test, filter, ks);
  CHECK(metrics.tail.mrr_raw == 1.0);
  CHECK(metrics.tail.mr_raw == 1.0);
  CHECK(metrics.n_facts == 1);
}

TEST_CASE("link prediction equals the brute-force evaluator") {
  for (ModelKind k : kAllModelKinds) {
    CAPTURE(to_string(k));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto kg = oracle::random_graph(25, 3, 60, seed);
      auto parts = split_kg(kg, 0.7, false, seed);
      auto m = init_model(k, kg.n_ent(), kg.n_rel(), 4, rel_dim_for(k), seed);
      FilterSet filter{&parts.train, &parts.test};
      auto want = oracle::brute_force_ranks(m, kg, filter);
      for (auto mode : {EvalMode::Batched, EvalMode::Looped}) {
        LinkPredictionOptions opts;
        opts.mode = mode;
        opts.batch_size = 7;
        CHECK(link_prediction_ranks(m, kg, filter, opts) == want);
      }
    }
  }
}

TEST_CASE("batch size, thread count and mode do not change anything") {
  auto kg = oracle::random_graph(40, 4, 150, 4);
  FilterSet filter{&kg};
  for (ModelKind k : {ModelKind::TransD, ModelKind::ComplEx}) {
    auto m = init_model(k, 40, 4, 5, 6, 1);
    auto base = link_prediction(m, kg, filter, ks, {1, 1, EvalMode::Batched});
    for (std::size_t bs : {2u, 64u, 1000u})
      for (std::size_t th : {1u, 3u})
        CHECK(link_prediction(m, kg, filter, ks, {bs, th, EvalMode::Batched}) == base);
    CHECK(link_prediction(m, kg, filter, ks, {64, 2, EvalMode::Looped}) == base);
  }
}

TEST_CASE("metric invariants") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto kg = oracle::random_graph(30, 3, 120, seed);
    auto m = init_model(kAllModelKinds[seed % 7], 30, 3, 4, 4, seed);
    FilterSet filter{&kg};
    std::vector<int> all_k{1, 2, 5, 10, 30};
    auto r = link_prediction_ranks(m, kg, filter);
    for (auto* v : {&r.head_raw, &r.head_filt, &r.tail_raw, &r.tail_filt})
      for (auto x : *v) {
        CHECK(x >= 1);
        CHECK(x <= 30);
      }
    auto lp = summarize_ranks(r, all_k);
    for (const RankSummary* s : {&lp.head, &lp.tail, &lp.combined}) {
      CHECK(s->mrr_filt >= s->mrr_raw);
      CHECK(s->mr_filt <= s->mr_raw);
      CHECK(s->mrr_raw > 0.0);
      CHECK(s->mrr_filt <= 1.0);
      for (std::size_t i = 1; i < all_k.size(); ++i) {
        CHECK(s->hits_raw.at(all_k[i]) >= s->hits_raw.at(all_k[i - 1]));
        CHECK(s->hits_filt.at(all_k[i]) >= s->hits_filt.at(all_k[i - 1]));
      }
      for (int k : all_k) CHECK(s->hits_filt.at(k) >= s->hits_raw.at(k));
      CHECK(s->hits_raw.at(30) == 1.0);
    }
    CHECK(lp.combined.n_tests == 2 * kg.size());
  }
}

TEST_CASE("summaries from a hand-made rank table") {
  RankTable r;
  r.head_raw = {1, 4};
  r.head_filt = {1, 2};
  r.tail_raw = {2, 2};
  r.tail_filt = {1, 2};
  std::vector<int> k{1, 2};
  auto lp = summarize_ranks(r, k);
  CHECK(lp.head.mr_raw == 2.5);
  CHECK(lp.head.mrr_raw == (1.0 + 0.25) / 2);
  CHECK(lp.head.hits_raw.at(1) == 0.5);
  CHECK(lp.tail.hits_filt.at(1) == 0.5);
  CHECK(lp.combined.mr_raw == 9.0 / 4);
  CHECK(lp.combined.hits_raw.at(2) == 0.75);
  CHECK(lp.combined.n_tests == 4);

  auto j = metrics_to_json(lp);
  CHECK(j.at("n_facts") == 2);
  CHECK(j.at("head").at("hits_raw.1") == 0.5);
  CHECK(!j.contains("wall_time_s"));
  CHECK(metrics_to_json(lp, 1.5).at("wall_time_s") == 1.5);
}

TEST_CASE("evaluation rejects foreign dictionaries") {
  auto kg = oracle::random_graph(10, 2, 20, 1);
  // same sizes, different labels
  auto other = oracle::ring_graph(10);
  auto m = init_model(ModelKind::TransE, 10, 2, 3, 3, 0);
  FilterSet filter{&other};
  CHECK_THROWS_AS(link_prediction(m, kg, filter, ks), Error);
  auto small = init_model(ModelKind::TransE, 5, 2, 3, 3, 0);
  FilterSet own{&kg};
  CHECK_THROWS_AS(link_prediction(small, kg, own, ks), Error);
}

TEST_CASE("threshold fitting examples") {
  auto sep = best_threshold(std::vector<double>{2, 3}, std::vector<double>{0, 1});
  CHECK(sep.threshold == 1.5);
  CHECK(sep.accuracy() == 1.0);
  auto tie = best_threshold(std::vector<double>{0}, std::vector<double>{1});
  CHECK(tie.accuracy() == 0.5);
  CHECK(tie.threshold == -1.0);  // lowest qualifying cut: min - 1
  CHECK_THROWS_AS(best_threshold(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("threshold fitting equals the exhaustive scan") {
  std::mt19937 gen(5);
  for (int round = 0; round < 50; ++round) {
    std::uniform_int_distribution<int> len(1, 30);
    std::normal_distribution<double> score(0.0, 1.0);
    std::vector<double> pos(len(gen)), neg(len(gen));
    // coarse values so ties between scores happen
    for (double& x : pos) x = std::round(score(gen) * 4 + 1) / 4;
    for (double& x : neg) x = std::round(score(gen) * 4) / 4;
    auto got = best_threshold(pos, neg);
    auto want = oracle::threshold_scan(pos, neg);
    CHECK(got.correct == want.correct);
    CHECK(got.threshold == want.threshold);
  }
}

TEST_CASE("fit_thresholds and classify") {
  auto kg = oracle::random_graph(20, 3, 80, 3);
  auto m = init_model(ModelKind::DistMult, 20, 3, 4, 4, 3);
  NegativeSampler s(SamplerKind::Uniform, kg, 1);
  auto neg = s.corrupt_kg(kg);
  auto table = fit_thresholds(m, kg, neg);
  REQUIRE(table.per_relation.size() == 3);
  for (Index r = 0; r < 3; ++r) CHECK(table.per_relation[r]);

  // per relation, the stored cut reaches the exhaustive optimum
  auto sp = score_batch(m, kg.triples()), sn = score_batch(m, neg);
  std::size_t total_ok = 0;
  for (Index r = 0; r < 3; ++r) {
    std::vector<double> p, n;
    for (std::size_t i = 0; i < kg.size(); ++i)
      if (kg[i].relation == r) p.push_back(sp[i]), n.push_back(sn[i]);
    auto want = oracle::threshold_scan(p, n);
    CHECK(*table.per_relation[r] == want.threshold);
    total_ok += want.correct;
  }
  CHECK(table.validation_accuracy == doctest::Approx(double(total_ok) / (2.0 * kg.size())));

  // classification re-counted by hand
  const double acc = classify(m, kg.triples(), neg, table);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < kg.size(); ++i) {
    ok += sp[i] > table.threshold(kg[i].relation);
    ok += !(sn[i] > table.threshold(neg[i].relation));
  }
  CHECK(acc == double(ok) / (2.0 * kg.size()));
  CHECK(acc == doctest::Approx(table.validation_accuracy));

  ThresholdTable never;
  never.per_relation.assign(3, std::numeric_limits<double>::infinity());
  never.fallback = std::numeric_limits<double>::infinity();
  CHECK(classify(m, kg.triples(), std::span(neg).first(10), never) == 10.0 / (kg.size() + 10.0));

  // unseen relation falls back
  ThresholdTable partial;
  partial.per_relation = {1.0};
  partial.fallback = -2.0;
  CHECK(partial.threshold(0) == 1.0);
  CHECK(partial.threshold(2) == -2.0);
  CHECK_THROWS_AS(fit_thresholds(m, kg.with_triples({}), std::vector<Triple>{}), Error);
}

TEST_CASE("separable scores classify perfectly") {
  // DistMult with one-hot entities: true tails score 1, corrupted ones 0
  auto kg = load_triples("a\tr\tb\nc\tr\td\n");
  auto m = make_model(ModelKind::DistMult, 4, 1, 4, 4);
  m.table("ent").data = {1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0};
  m.table("rel").data = {1, 1, 1, 1};
  // a=b and c=d in embedding space, so (a,r,b) and (c,r,d) score 1, (a,r,d) scores 0
  std::vector<Triple> neg{{0, 0, 3}, {2, 0, 1}};
  auto table = fit_thresholds(m, kg, neg);
  CHECK(table.validation_accuracy == 1.0);
  CHECK(classify(m, kg.triples(), neg, table) == 1.0);
}

TEST_CASE("bench on a tiny instance") {
  auto kg = oracle::random_graph(10, 2, 20, 6);
  auto m = init_model(ModelKind::TransE, 10, 2, 4, 4, 6);
  FilterSet filter{&kg};
  auto cmp = bench_compare(m, kg, filter, 8, 5, ks);
  CHECK(cmp.batched.metrics == cmp.looped.metrics);
  CHECK(cmp.batched.repeats == 5);
  CHECK(cmp.batched.run_times_s.size() == 5);
  double sum = 0;
  for (double t : cmp.looped.run_times_s) sum += t;
  CHECK(cmp.looped.mean_time_s == doctest::Approx(sum / 5));
  CHECK(cmp.batched.mean_time_s > 0.0);
  CHECK(cmp.speedup == doctest::Approx(cmp.looped.mean_time_s / cmp.batched.mean_time_s));
  auto j = bench_to_json(cmp.batched, cmp.speedup);
  CHECK(j.at("mode") == "batched");
  CHECK(j.contains("speedup"));
  CHECK_THROWS_AS(bench_eval(m, kg, filter, 8, EvalMode::Batched, 0, ks), Error);
}
