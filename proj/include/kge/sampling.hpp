#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kge/graph.hpp"
#include "kge/random.hpp"

namespace kge {

enum class SamplerKind { Uniform, Bernoulli, Positional };

std::string_view to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(std::string_view name);

// Produces one negative per positive by replacing the head or the tail with a
// different entity. Negatives are not checked against the graph. Owns its
// generator, so one sampler must not be shared between threads.
class NegativeSampler {
 public:
  // Bernoulli and positional samplers derive their statistics from `kg`.
  NegativeSampler(SamplerKind kind, const KnowledgeGraph& kg, std::uint64_t seed);

  SamplerKind kind() const { return kind_; }
  std::size_t n_ent() const { return n_ent_; }
  const std::optional<CorruptionStats>& stats() const { return stats_; }

  std::vector<Triple> corrupt_batch(std::span<const Triple> batch);
  std::vector<Triple> corrupt_kg(const KnowledgeGraph& kg);

 private:
  Index other_entity(Index current);
  Index positional_entity(std::span<const Index> pool, Index current);

  SamplerKind kind_;
  std::size_t n_ent_;
  Rng rng_;
  std::optional<CorruptionStats> stats_;
  // relation -> sorted distinct heads / tails observed under it
  std::vector<std::vector<Index>> heads_;
  std::vector<std::vector<Index>> tails_;
};

}  // namespace kge
