#include "kge/sampling.hpp"

#include <algorithm>

namespace kge {

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Uniform:
      return "uniform";
    case SamplerKind::Bernoulli:
      return "bernoulli";
    case SamplerKind::Positional:
      return "positional";
  }
  return "?";
}

SamplerKind parse_sampler_kind(std::string_view name) {
  if (name == "uniform") return SamplerKind::Uniform;
  if (name == "bernoulli") return SamplerKind::Bernoulli;
  if (name == "positional") return SamplerKind::Positional;
  throw Error("unknown sampler '" + std::string(name) + "'");
}

NegativeSampler::NegativeSampler(SamplerKind kind, const KnowledgeGraph& kg, std::uint64_t seed)
    : kind_(kind), n_ent_(kg.n_ent()), rng_(seed) {
  if (kind == SamplerKind::Bernoulli) stats_ = corruption_stats(kg);
  if (kind == SamplerKind::Positional) {
    heads_.resize(kg.n_rel());
    tails_.resize(kg.n_rel());
    for (const auto& t : kg.triples()) {
      heads_[t.relation].push_back(t.head);
      tails_[t.relation].push_back(t.tail);
    }
    for (auto* pools : {&heads_, &tails_}) {
      for (auto& p : *pools) {
        std::sort(p.begin(), p.end());
        p.erase(std::unique(p.begin(), p.end()), p.end());
      }
    }
  }
}

Index NegativeSampler::other_entity(Index current) {
  if (n_ent_ < 2) throw Error("corruption needs at least two entities");
  auto e = static_cast<Index>(rng_.below(n_ent_ - 1));
  return e >= current ? e + 1 : e;
}

Index NegativeSampler::positional_entity(std::span<const Index> pool, Index current) {
  const bool has_current = std::binary_search(pool.begin(), pool.end(), current);
  const std::size_t choices = pool.size() - (has_current ? 1 : 0);
  // Nothing else was seen in this position: fall back to all entities.
  if (choices == 0) return other_entity(current);
  std::size_t k = rng_.below(choices);
  if (has_current) {
    auto pos = static_cast<std::size_t>(std::lower_bound(pool.begin(), pool.end(), current) - pool.begin());
    if (k >= pos) ++k;
  }
  return pool[k];
}

std::vector<Triple> NegativeSampler::corrupt_batch(std::span<const Triple> batch) {
  if (batch.empty()) throw Error("cannot corrupt an empty batch");
  std::vector<Triple> out(batch.begin(), batch.end());
  for (auto& t : out) {
    if (t.head >= n_ent_ || t.tail >= n_ent_) throw Error("triple entity outside the sampler graph");
    bool head = false;
    switch (kind_) {
      case SamplerKind::Uniform:
        head = rng_.below(2) == 0;
        t = head ? Triple{other_entity(t.head), t.relation, t.tail}
                 : Triple{t.head, t.relation, other_entity(t.tail)};
        break;
      case SamplerKind::Bernoulli: {
        const double p = t.relation < stats_->tph.size() ? stats_->head_probability(t.relation) : 0.5;
        head = rng_.coin(p);
        t = head ? Triple{other_entity(t.head), t.relation, t.tail}
                 : Triple{t.head, t.relation, other_entity(t.tail)};
        break;
      }
      case SamplerKind::Positional: {
        head = rng_.below(2) == 0;
        std::span<const Index> pool;
        if (t.relation < heads_.size()) pool = head ? heads_[t.relation] : tails_[t.relation];
        if (head)
          t.head = positional_entity(pool, t.head);
        else
          t.tail = positional_entity(pool, t.tail);
        break;
      }
    }
  }
  return out;
}

std::vector<Triple> NegativeSampler::corrupt_kg(const KnowledgeGraph& kg) {
  return corrupt_batch(kg.triples());
}

}  // namespace kge
