#include "kge/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace kge {

std::string_view to_string(EvalMode mode) { return mode == EvalMode::Batched ? "batched" : "looped"; }

std::uint32_t rank_of(std::span<const double> scores, std::size_t true_idx,
                      std::span<const bool> filter_mask) {
  if (true_idx >= scores.size()) throw Error("target index outside the score row");
  if (!filter_mask.empty() && filter_mask.size() != scores.size())
    throw Error("filter mask length does not match the score row");
  const double target = scores[true_idx];
  std::uint32_t rank = 1;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e == true_idx || !(scores[e] > target)) continue;
    if (!filter_mask.empty() && filter_mask[e]) continue;
    ++rank;
  }
  return rank;
}

namespace {

struct RankPair {
  std::uint32_t raw;
  std::uint32_t filt;
};

// Raw rank from the full row; the filtered rank removes known competitors
// that also beat the target.
RankPair rank_row(std::span<const double> row, Index target, std::span<const Index> known) {
  const double s = row[target];
  std::uint32_t above = 0;
  for (double v : row) above += v > s ? 1u : 0u;
  std::uint32_t known_above = 0;
  for (Index e : known)
    if (e != target && row[e] > s) ++known_above;
  return {1 + above, 1 + above - known_above};
}

template <class Fn>
void run_parallel(std::size_t n_tasks, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n_tasks));
  if (threads == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < n_tasks && !failed; i = next++) fn(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void check_compatible(const Model& model, const KnowledgeGraph& kg, const FilterSet& filter) {
  if (kg.n_ent() != model.n_ent || kg.n_rel() != model.n_rel)
    throw Error("evaluation graph dictionaries do not match the model (" + std::to_string(kg.n_ent()) +
                " vs " + std::to_string(model.n_ent) + " entities, " + std::to_string(kg.n_rel()) +
                " vs " + std::to_string(model.n_rel) + " relations)");
  if (filter.n_ent() != model.n_ent || filter.n_rel() != model.n_rel)
    throw Error("filter dictionaries do not match the model");
}

RankSummary summarize_side(std::span<const std::uint32_t> raw, std::span<const std::uint32_t> filt,
                           std::span<const int> k_values) {
  RankSummary s;
  s.n_tests = raw.size();
  if (raw.empty()) return s;
  std::uint64_t sum_raw = 0, sum_filt = 0;
  double rr_raw = 0.0, rr_filt = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    sum_raw += raw[i];
    sum_filt += filt[i];
    rr_raw += 1.0 / raw[i];
    rr_filt += 1.0 / filt[i];
  }
  const double n = static_cast<double>(raw.size());
  s.mr_raw = static_cast<double>(sum_raw) / n;
  s.mr_filt = static_cast<double>(sum_filt) / n;
  s.mrr_raw = rr_raw / n;
  s.mrr_filt = rr_filt / n;
  for (int k : k_values) {
    auto within = [k](std::span<const std::uint32_t> r) {
      return static_cast<double>(std::count_if(r.begin(), r.end(), [k](std::uint32_t x) {
        return x <= static_cast<std::uint32_t>(k);
      }));
    };
    s.hits_raw[k] = within(raw) / n;
    s.hits_filt[k] = within(filt) / n;
  }
  return s;
}

}  // namespace

LPMetrics summarize_ranks(const RankTable& ranks, std::span<const int> k_values) {
  LPMetrics m;
  m.n_facts = ranks.size();
  m.head = summarize_side(ranks.head_raw, ranks.head_filt, k_values);
  m.tail = summarize_side(ranks.tail_raw, ranks.tail_filt, k_values);
  std::vector<std::uint32_t> raw(ranks.head_raw), filt(ranks.head_filt);
  raw.insert(raw.end(), ranks.tail_raw.begin(), ranks.tail_raw.end());
  filt.insert(filt.end(), ranks.tail_filt.begin(), ranks.tail_filt.end());
  m.combined = summarize_side(raw, filt, k_values);
  return m;
}

RankTable link_prediction_ranks(const Model& model, const KnowledgeGraph& eval_kg,
                                const FilterSet& filter, const LinkPredictionOptions& opts) {
  if (eval_kg.empty()) throw Error("evaluation graph is empty");
  check_compatible(model, eval_kg, filter);
  const std::size_t n = eval_kg.size(), n_ent = model.n_ent;
  const std::size_t batch_size = std::max<std::size_t>(1, opts.batch_size);

  RankTable ranks;
  ranks.head_raw.resize(n);
  ranks.head_filt.resize(n);
  ranks.tail_raw.resize(n);
  ranks.tail_filt.resize(n);

  auto record = [&](std::size_t fact, Side side, std::span<const double> row) {
    const Triple& t = eval_kg[fact];
    if (side == Side::Tail) {
      auto r = rank_row(row, t.tail, filter.tails_of(t.head, t.relation));
      ranks.tail_raw[fact] = r.raw;
      ranks.tail_filt[fact] = r.filt;
    } else {
      auto r = rank_row(row, t.head, filter.heads_of(t.relation, t.tail));
      ranks.head_raw[fact] = r.raw;
      ranks.head_filt[fact] = r.filt;
    }
  };

  if (opts.mode == EvalMode::Looped) {
    run_parallel(n, opts.threads, [&](std::size_t fact) {
      std::vector<Triple> cands(n_ent, eval_kg[fact]);
      for (Side side : {Side::Head, Side::Tail}) {
        for (std::size_t e = 0; e < n_ent; ++e) {
          if (side == Side::Head) cands[e].head = static_cast<Index>(e);
          else cands[e].tail = static_cast<Index>(e);
        }
        std::vector<double> row = score_batch(model, cands);
        record(fact, side, row);
        cands.assign(n_ent, eval_kg[fact]);
      }
    });
    return ranks;
  }

  // Facts sharing a relation share one projection of the entity table.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return eval_kg[a].relation < eval_kg[b].relation; });

  const std::size_t n_batches = (n + batch_size - 1) / batch_size;
  run_parallel(n_batches, opts.threads, [&](std::size_t b) {
    const std::size_t start = b * batch_size, count = std::min(batch_size, n - start);
    std::vector<Triple> batch(count);
    for (std::size_t i = 0; i < count; ++i) batch[i] = eval_kg[order[start + i]];
    std::vector<double> scores(count * n_ent);
    for (Side side : {Side::Head, Side::Tail}) {
      PreparedCandidates prepared = lp_prep_cands(model, batch, side);
      lp_score_all(model, prepared, side, scores);
      for (std::size_t i = 0; i < count; ++i)
        record(order[start + i], side, std::span<const double>(scores.data() + i * n_ent, n_ent));
    }
  });
  return ranks;
}

LPMetrics link_prediction(const Model& model, const KnowledgeGraph& eval_kg, const FilterSet& filter,
                          std::span<const int> k_values, const LinkPredictionOptions& opts) {
  return summarize_ranks(link_prediction_ranks(model, eval_kg, filter, opts), k_values);
}

ThresholdFit best_threshold(std::span<const double> pos_scores, std::span<const double> neg_scores) {
  const std::size_t total = pos_scores.size() + neg_scores.size();
  if (total == 0) throw Error("threshold fitting needs at least one scored triple");
  std::vector<std::pair<double, bool>> items;
  items.reserve(total);
  for (double s : pos_scores) items.emplace_back(s, true);
  for (double s : neg_scores) items.emplace_back(s, false);
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Cut below everything: all predicted true.
  ThresholdFit best{items.front().first - 1.0, pos_scores.size(), total};
  std::size_t correct = pos_scores.size();
  for (std::size_t i = 0; i < items.size();) {
    // Move the cut past every item sharing this score.
    const double v = items[i].first;
    for (; i < items.size() && items[i].first == v; ++i) {
      if (items[i].second) --correct;
      else ++correct;
    }
    double cut;
    if (i < items.size()) {
      const double next = items[i].first;
      cut = v + (next - v) / 2.0;
      if (!(cut < next)) cut = v;
    } else {
      cut = v + 1.0;
    }
    if (correct > best.correct) best = {cut, correct, total};
  }
  return best;
}

double ThresholdTable::threshold(Index relation) const {
  if (relation < per_relation.size() && per_relation[relation]) return *per_relation[relation];
  return fallback;
}

ThresholdTable fit_thresholds(const Model& model, const KnowledgeGraph& valid_pos,
                              std::span<const Triple> valid_neg) {
  if (valid_pos.empty() || valid_neg.empty()) throw Error("threshold fitting needs validation facts");
  if (valid_neg.size() != valid_pos.size())
    throw Error("validation negatives must be index-aligned with the positives");
  const std::vector<double> pos = score_batch(model, valid_pos.triples());
  const std::vector<double> neg = score_batch(model, valid_neg);

  const std::size_t n_rel = model.n_rel;
  std::vector<std::vector<double>> pos_by(n_rel), neg_by(n_rel);
  for (std::size_t i = 0; i < pos.size(); ++i) pos_by[valid_pos[i].relation].push_back(pos[i]);
  for (std::size_t i = 0; i < neg.size(); ++i) neg_by[valid_neg[i].relation].push_back(neg[i]);

  ThresholdTable table;
  table.per_relation.resize(n_rel);
  std::size_t correct = 0, total = 0;
  for (std::size_t r = 0; r < n_rel; ++r) {
    if (pos_by[r].empty() && neg_by[r].empty()) continue;
    ThresholdFit fit = best_threshold(pos_by[r], neg_by[r]);
    table.per_relation[r] = fit.threshold;
    correct += fit.correct;
    total += fit.total;
  }
  table.fallback = best_threshold(pos, neg).threshold;
  table.validation_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return table;
}

double classify(const Model& model, std::span<const Triple> test_pos, std::span<const Triple> test_neg,
                const ThresholdTable& thresholds) {
  if (test_pos.empty() && test_neg.empty()) throw Error("classification needs test triples");
  const std::vector<double> pos = score_batch(model, test_pos);
  const std::vector<double> neg = score_batch(model, test_neg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (pos[i] > thresholds.threshold(test_pos[i].relation)) ++correct;
  for (std::size_t i = 0; i < neg.size(); ++i)
    if (!(neg[i] > thresholds.threshold(test_neg[i].relation))) ++correct;
  return static_cast<double>(correct) / static_cast<double>(pos.size() + neg.size());
}

BenchReport bench_eval(const Model& model, const KnowledgeGraph& eval_kg, const FilterSet& filter,
                       std::size_t batch_size, EvalMode mode, std::size_t repeats,
                       std::span<const int> k_values, std::size_t threads) {
  if (repeats == 0) throw Error("repeats must be at least 1");
  BenchReport report;
  report.mode = mode;
  report.repeats = repeats;
  LinkPredictionOptions opts{batch_size, threads, mode};
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    RankTable ranks = link_prediction_ranks(model, eval_kg, filter, opts);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    report.run_times_s.push_back(dt.count());
    if (i == 0) report.ranks = std::move(ranks);
    else if (!(ranks == report.ranks)) throw BenchMismatch("repeated evaluation produced different ranks");
  }
  report.mean_time_s = std::accumulate(report.run_times_s.begin(), report.run_times_s.end(), 0.0) /
                       static_cast<double>(repeats);
  report.facts_per_s = static_cast<double>(eval_kg.size()) / report.mean_time_s;
  report.metrics = summarize_ranks(report.ranks, k_values);
  return report;
}

BenchComparison bench_compare(const Model& model, const KnowledgeGraph& eval_kg, const FilterSet& filter,
                              std::size_t batch_size, std::size_t repeats, std::span<const int> k_values,
                              std::size_t threads) {
  BenchComparison c;
  c.batched = bench_eval(model, eval_kg, filter, batch_size, EvalMode::Batched, repeats, k_values, threads);
  c.looped = bench_eval(model, eval_kg, filter, batch_size, EvalMode::Looped, repeats, k_values, threads);
  if (!(c.batched.ranks == c.looped.ranks) || !(c.batched.metrics == c.looped.metrics))
    throw BenchMismatch("batched and looped evaluation disagree");
  c.speedup = c.looped.mean_time_s / c.batched.mean_time_s;
  return c;
}

}  // namespace kge
