#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "kge/graph.hpp"
#include "kge/model.hpp"

namespace kge {

// 1 + number of unfiltered candidates scoring strictly above the target.
// Ties never count against the target; the target itself is never filtered.
std::uint32_t rank_of(std::span<const double> scores, std::size_t true_idx,
                      std::span<const bool> filter_mask = {});

// Recovery ranks per evaluated fact, in the order of the evaluation graph.
struct RankTable {
  std::vector<std::uint32_t> head_raw, head_filt;
  std::vector<std::uint32_t> tail_raw, tail_filt;

  std::size_t size() const { return head_raw.size(); }
  friend bool operator==(const RankTable&, const RankTable&) = default;
};

struct RankSummary {
  std::size_t n_tests = 0;
  double mr_raw = 0.0, mr_filt = 0.0;
  double mrr_raw = 0.0, mrr_filt = 0.0;
  std::map<int, double> hits_raw, hits_filt;

  friend bool operator==(const RankSummary&, const RankSummary&) = default;
};

struct LPMetrics {
  std::size_t n_facts = 0;
  RankSummary head, tail;
  RankSummary combined;  // head and tail tests weighted equally

  friend bool operator==(const LPMetrics&, const LPMetrics&) = default;
};

LPMetrics summarize_ranks(const RankTable& ranks, std::span<const int> k_values);

enum class EvalMode { Batched, Looped };

std::string_view to_string(EvalMode mode);

struct LinkPredictionOptions {
  std::size_t batch_size = 64;
  std::size_t threads = 1;
  EvalMode mode = EvalMode::Batched;
};

// Head and tail test for every fact of eval_kg. Batched mode groups facts by
// relation, prepares candidates once per batch and scores whole
// batch x n_ent matrices; looped mode scores the materialized candidate
// triples of one fact at a time through score_batch. Both produce the same
// ranks, independent of batch size and thread count.
RankTable link_prediction_ranks(const Model& model, const KnowledgeGraph& eval_kg,
                                const FilterSet& filter, const LinkPredictionOptions& opts = {});

LPMetrics link_prediction(const Model& model, const KnowledgeGraph& eval_kg, const FilterSet& filter,
                          std::span<const int> k_values, const LinkPredictionOptions& opts = {});

// Accuracy-maximizing cut for one set of scored positives and negatives.
// Candidates are min - 1, the midpoints between adjacent distinct scores and
// max + 1; a score above the cut is predicted true. Ties go to the lowest cut.
struct ThresholdFit {
  double threshold = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

ThresholdFit best_threshold(std::span<const double> pos_scores, std::span<const double> neg_scores);

struct ThresholdTable {
  std::vector<std::optional<double>> per_relation;
  double fallback = 0.0;
  double validation_accuracy = 0.0;

  double threshold(Index relation) const;
};

// valid_neg is index-aligned with valid_pos (as produced by corrupt_kg).
ThresholdTable fit_thresholds(const Model& model, const KnowledgeGraph& valid_pos,
                              std::span<const Triple> valid_neg);

double classify(const Model& model, std::span<const Triple> test_pos, std::span<const Triple> test_neg,
                const ThresholdTable& thresholds);

struct BenchReport {
  EvalMode mode = EvalMode::Batched;
  std::size_t repeats = 0;
  std::vector<double> run_times_s;
  double mean_time_s = 0.0;
  double facts_per_s = 0.0;
  LPMetrics metrics;
  RankTable ranks;
};

class BenchMismatch : public Error {
 public:
  using Error::Error;
};

BenchReport bench_eval(const Model& model, const KnowledgeGraph& eval_kg, const FilterSet& filter,
                       std::size_t batch_size, EvalMode mode, std::size_t repeats,
                       std::span<const int> k_values, std::size_t threads = 1);

struct BenchComparison {
  BenchReport batched;
  BenchReport looped;
  double speedup = 0.0;  // looped time / batched time
};

// Runs both modes and throws BenchMismatch unless their ranks agree exactly.
BenchComparison bench_compare(const Model& model, const KnowledgeGraph& eval_kg, const FilterSet& filter,
                              std::size_t batch_size, std::size_t repeats, std::span<const int> k_values,
                              std::size_t threads = 1);

}  // namespace kge
