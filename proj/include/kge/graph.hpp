#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kge {

using Index = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Triple {
  Index head = 0;
  Index relation = 0;
  Index tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

inline std::uint64_t pack(const Triple& t) {
  // 21 bits for each field keeps every index below two million collision free;
  // the hash set below compares whole triples so larger graphs stay correct.
  return (std::uint64_t{t.head} << 42) ^ (std::uint64_t{t.relation} << 21) ^ t.tail;
}

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t z = pack(t) * 0x9e3779b97f4a7c15ULL;
    return static_cast<std::size_t>(z ^ (z >> 32));
  }
};

// Label <-> index bijection, indices assigned in first-appearance order.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::vector<std::string> labels);

  Index intern(std::string_view label);
  std::optional<Index> find(std::string_view label) const;
  const std::string& label(Index i) const { return labels_.at(i); }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  friend bool operator==(const Dictionary& a, const Dictionary& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Index> index_;
};

using DictionaryPtr = std::shared_ptr<const Dictionary>;

// A set of facts over shared entity and relation dictionaries. Graphs produced
// by one loader call or by split_kg share the same dictionary objects.
class KnowledgeGraph {
 public:
  KnowledgeGraph(DictionaryPtr entities, DictionaryPtr relations, std::vector<Triple> triples);

  std::size_t n_ent() const { return entities_->size(); }
  std::size_t n_rel() const { return relations_->size(); }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  std::span<const Triple> triples() const { return triples_; }
  const Triple& operator[](std::size_t i) const { return triples_[i]; }

  const Dictionary& entities() const { return *entities_; }
  const Dictionary& relations() const { return *relations_; }
  const DictionaryPtr& entities_ptr() const { return entities_; }
  const DictionaryPtr& relations_ptr() const { return relations_; }

  bool shares_dictionaries_with(const KnowledgeGraph& other) const;

  // Same dictionaries, different facts (deduplicated, order kept).
  KnowledgeGraph with_triples(std::vector<Triple> triples) const;

 private:
  DictionaryPtr entities_;
  DictionaryPtr relations_;
  std::vector<Triple> triples_;
};

// Tab-separated `head<TAB>relation<TAB>tail` lines. Empty lines are skipped and
// duplicate facts collapse to their first occurrence.
KnowledgeGraph load_triples(std::string_view text);
KnowledgeGraph load_triples_file(const std::string& path);

// Loads several files against one pair of dictionaries (first appearance
// across the files, in order). Empty files yield empty graphs.
std::vector<KnowledgeGraph> load_triple_files(std::span<const std::string> paths);

// Loads a file against fixed dictionaries. Throws Error naming the first
// label missing from them.
KnowledgeGraph load_triples_with(const std::string& path, DictionaryPtr entities,
                                 DictionaryPtr relations);

std::string write_triples(const KnowledgeGraph& kg);
void write_triples_file(const KnowledgeGraph& kg, const std::string& path);

struct SplitResult {
  KnowledgeGraph train;
  std::optional<KnowledgeGraph> valid;
  KnowledgeGraph test;
  // Set when covering every entity and relation pushed train past its share.
  std::optional<std::string> warning;
};

// Seeded shuffle, then one covering fact per unseen entity/relation goes to
// train, then train is filled up to floor(share_train * n). The remainder is
// split into valid (floor of half) and test when with_validation is set.
SplitResult split_kg(const KnowledgeGraph& kg, double share_train, bool with_validation,
                     std::uint64_t seed);

struct CorruptionStats {
  std::vector<double> tph;  // mean tails per (head, relation)
  std::vector<double> hpt;  // mean heads per (relation, tail)

  // Head-corruption probability tph / (tph + hpt).
  double head_probability(Index relation) const;
};

CorruptionStats corruption_stats(const KnowledgeGraph& kg);

// Membership over the union of several graphs, with per-(h, r) tail lists and
// per-(r, t) head lists for filtered ranking.
class FilterSet {
 public:
  explicit FilterSet(std::span<const KnowledgeGraph* const> graphs);
  FilterSet(std::initializer_list<const KnowledgeGraph*> graphs)
      : FilterSet(std::span<const KnowledgeGraph* const>(graphs.begin(), graphs.size())) {}

  bool contains(const Triple& t) const { return members_.contains(t); }
  std::size_t size() const { return members_.size(); }
  std::size_t n_ent() const { return n_ent_; }
  std::size_t n_rel() const { return n_rel_; }

  // Known tails for (head, relation) and known heads for (relation, tail).
  std::span<const Index> tails_of(Index head, Index relation) const;
  std::span<const Index> heads_of(Index relation, Index tail) const;

 private:
  static std::uint64_t key(Index a, Index b) { return (std::uint64_t{a} << 32) | b; }

  std::size_t n_ent_ = 0;
  std::size_t n_rel_ = 0;
  std::unordered_set<Triple, TripleHash> members_;
  std::unordered_map<std::uint64_t, std::vector<Index>> tails_;
  std::unordered_map<std::uint64_t, std::vector<Index>> heads_;
};

FilterSet build_filter(std::span<const KnowledgeGraph* const> graphs);

// Two triple-level redundancy fractions:
//  duplicate: (h, r, t) such that (h, r', t) exists for some r' != r;
//  reverse duplicate: (h, r, t) such that some other fact (t, r', h) exists.
struct RedundancyReport {
  double duplicate_fraction = 0.0;
  double reverse_duplicate_fraction = 0.0;
};

RedundancyReport redundancy_metrics(const KnowledgeGraph& kg);

}  // namespace kge
