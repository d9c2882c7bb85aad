#include "kge/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kge/random.hpp"

namespace kge {

Dictionary::Dictionary(std::vector<std::string> labels) {
  for (auto& l : labels) {
    if (index_.contains(l)) throw Error("duplicate dictionary label '" + l + "'");
    index_.emplace(l, static_cast<Index>(labels_.size()));
    labels_.push_back(std::move(l));
  }
}

Index Dictionary::intern(std::string_view label) {
  auto it = index_.find(std::string(label));
  if (it != index_.end()) return it->second;
  auto id = static_cast<Index>(labels_.size());
  labels_.emplace_back(label);
  index_.emplace(labels_.back(), id);
  return id;
}

std::optional<Index> Dictionary::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<Triple> dedupe(std::vector<Triple> triples) {
  std::unordered_set<Triple, TripleHash> seen;
  seen.reserve(triples.size());
  std::vector<Triple> out;
  out.reserve(triples.size());
  for (const auto& t : triples)
    if (seen.insert(t).second) out.push_back(t);
  return out;
}

bool same_dict(const DictionaryPtr& a, const DictionaryPtr& b) {
  return a == b || *a == *b;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Calls fn(line_number, head, relation, tail) for every non-empty line.
template <class Fn>
void for_each_fact(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::string_view fields[3];
    std::size_t n = 0, start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (n == 3) {
        n = 4;
        break;
      }
      fields[n++] = line.substr(start, tab == std::string_view::npos ? tab : tab - start);
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (n != 3)
      throw ParseError(line_no, "expected 3 tab-separated fields, got " +
                                    (n > 3 ? std::string("more than 3") : std::to_string(n)));
    fn(line_no, fields[0], fields[1], fields[2]);
  }
}

}  // namespace

KnowledgeGraph::KnowledgeGraph(DictionaryPtr entities, DictionaryPtr relations,
                               std::vector<Triple> triples)
    : entities_(std::move(entities)), relations_(std::move(relations)),
      triples_(dedupe(std::move(triples))) {
  if (!entities_ || !relations_) throw Error("knowledge graph needs both dictionaries");
  for (const auto& t : triples_) {
    if (t.head >= n_ent() || t.tail >= n_ent() || t.relation >= n_rel())
      throw Error("triple index outside the graph dictionaries");
  }
}

bool KnowledgeGraph::shares_dictionaries_with(const KnowledgeGraph& other) const {
  return same_dict(entities_, other.entities_) && same_dict(relations_, other.relations_);
}

KnowledgeGraph KnowledgeGraph::with_triples(std::vector<Triple> triples) const {
  return KnowledgeGraph(entities_, relations_, std::move(triples));
}

KnowledgeGraph load_triples(std::string_view text) {
  auto ents = std::make_shared<Dictionary>();
  auto rels = std::make_shared<Dictionary>();
  std::vector<Triple> triples;
  for_each_fact(text, [&](std::size_t, std::string_view h, std::string_view r, std::string_view t) {
    Triple tr;
    tr.head = ents->intern(h);
    tr.relation = rels->intern(r);
    tr.tail = ents->intern(t);
    triples.push_back(tr);
  });
  if (triples.empty()) throw Error("no triples");
  return KnowledgeGraph(std::move(ents), std::move(rels), std::move(triples));
}

KnowledgeGraph load_triples_file(const std::string& path) {
  try {
    return load_triples(read_file(path));
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

std::vector<KnowledgeGraph> load_triple_files(std::span<const std::string> paths) {
  auto ents = std::make_shared<Dictionary>();
  auto rels = std::make_shared<Dictionary>();
  std::vector<std::vector<Triple>> parts;
  for (const auto& path : paths) {
    std::string text = read_file(path);
    auto& triples = parts.emplace_back();
    try {
      for_each_fact(text, [&](std::size_t, std::string_view h, std::string_view r,
                              std::string_view t) {
        Triple tr;
        tr.head = ents->intern(h);
        tr.relation = rels->intern(r);
        tr.tail = ents->intern(t);
        triples.push_back(tr);
      });
    } catch (const ParseError& e) {
      throw Error(path + ": " + e.what());
    }
  }
  std::vector<KnowledgeGraph> graphs;
  for (auto& p : parts) graphs.emplace_back(ents, rels, std::move(p));
  return graphs;
}

KnowledgeGraph load_triples_with(const std::string& path, DictionaryPtr entities,
                                 DictionaryPtr relations) {
  std::string text = read_file(path);
  std::vector<Triple> triples;
  auto lookup = [&](const Dictionary& d, std::string_view label, std::size_t line,
                    const char* what) {
    auto id = d.find(label);
    if (!id)
      throw Error(path + ": line " + std::to_string(line) + ": unknown " + what + " '" +
                  std::string(label) + "'");
    return *id;
  };
  try {
    for_each_fact(text, [&](std::size_t line, std::string_view h, std::string_view r,
                            std::string_view t) {
      triples.push_back({lookup(*entities, h, line, "entity"),
                         lookup(*relations, r, line, "relation"),
                         lookup(*entities, t, line, "entity")});
    });
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
  if (triples.empty()) throw Error(path + ": no triples");
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(triples));
}

std::string write_triples(const KnowledgeGraph& kg) {
  std::string out;
  for (const auto& t : kg.triples()) {
    out += kg.entities().label(t.head);
    out += '\t';
    out += kg.relations().label(t.relation);
    out += '\t';
    out += kg.entities().label(t.tail);
    out += '\n';
  }
  return out;
}

void write_triples_file(const KnowledgeGraph& kg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << write_triples(kg);
  if (!out) throw Error("write failed for '" + path + "'");
}

SplitResult split_kg(const KnowledgeGraph& kg, double share_train, bool with_validation,
                     std::uint64_t seed) {
  if (!(share_train > 0.0 && share_train < 1.0))
    throw Error("share_train must lie strictly between 0 and 1");
  if (kg.empty()) throw Error("cannot split an empty graph");

  const std::size_t n = kg.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<char> in_train(n, 0);
  std::vector<char> ent_seen(kg.n_ent(), 0), rel_seen(kg.n_rel(), 0);
  std::size_t n_train = 0;
  for (std::size_t i : order) {
    const Triple& t = kg[i];
    if (!ent_seen[t.head] || !ent_seen[t.tail] || !rel_seen[t.relation]) {
      ent_seen[t.head] = ent_seen[t.tail] = rel_seen[t.relation] = 1;
      in_train[i] = 1;
      ++n_train;
    }
  }

  const auto budget = static_cast<std::size_t>(std::floor(share_train * static_cast<double>(n)));
  std::optional<std::string> warning;
  if (n_train > budget) {
    warning = "covering every entity and relation needs " + std::to_string(n_train) +
              " training facts, above the requested " + std::to_string(budget);
  }
  std::vector<std::size_t> rest;
  for (std::size_t i : order) {
    if (in_train[i]) continue;
    if (n_train < budget) {
      in_train[i] = 1;
      ++n_train;
    } else {
      rest.push_back(i);
    }
  }

  std::vector<char> in_valid(n, 0);
  if (with_validation) {
    std::size_t n_valid = rest.size() / 2;
    for (std::size_t j = 0; j < n_valid; ++j) in_valid[rest[j]] = 1;
  }

  std::vector<Triple> train, valid, test;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_train[i])
      train.push_back(kg[i]);
    else if (in_valid[i])
      valid.push_back(kg[i]);
    else
      test.push_back(kg[i]);
  }
  SplitResult result{kg.with_triples(std::move(train)), std::nullopt,
                     kg.with_triples(std::move(test)), std::move(warning)};
  if (with_validation) result.valid = kg.with_triples(std::move(valid));
  return result;
}

double CorruptionStats::head_probability(Index relation) const {
  double a = tph.at(relation), b = hpt.at(relation);
  return a / (a + b);
}

CorruptionStats corruption_stats(const KnowledgeGraph& kg) {
  const std::size_t n_rel = kg.n_rel();
  std::vector<std::size_t> count(n_rel, 0);
  std::vector<std::unordered_set<Index>> heads(n_rel), tails(n_rel);
  for (const auto& t : kg.triples()) {
    ++count[t.relation];
    heads[t.relation].insert(t.head);
    tails[t.relation].insert(t.tail);
  }
  CorruptionStats stats{std::vector<double>(n_rel, 1.0), std::vector<double>(n_rel, 1.0)};
  for (std::size_t r = 0; r < n_rel; ++r) {
    if (count[r] == 0) continue;
    stats.tph[r] = static_cast<double>(count[r]) / static_cast<double>(heads[r].size());
    stats.hpt[r] = static_cast<double>(count[r]) / static_cast<double>(tails[r].size());
  }
  return stats;
}

FilterSet::FilterSet(std::span<const KnowledgeGraph* const> graphs) {
  if (graphs.empty()) throw Error("filter needs at least one graph");
  const KnowledgeGraph& first = *graphs.front();
  n_ent_ = first.n_ent();
  n_rel_ = first.n_rel();
  for (const KnowledgeGraph* g : graphs) {
    if (!g->shares_dictionaries_with(first)) throw Error("filter graphs use different dictionaries");
    for (const auto& t : g->triples()) {
      if (!members_.insert(t).second) continue;
      tails_[key(t.head, t.relation)].push_back(t.tail);
      heads_[key(t.relation, t.tail)].push_back(t.head);
    }
  }
}

std::span<const Index> FilterSet::tails_of(Index head, Index relation) const {
  auto it = tails_.find(key(head, relation));
  if (it == tails_.end()) return {};
  return it->second;
}

std::span<const Index> FilterSet::heads_of(Index relation, Index tail) const {
  auto it = heads_.find(key(relation, tail));
  if (it == heads_.end()) return {};
  return it->second;
}

FilterSet build_filter(std::span<const KnowledgeGraph* const> graphs) { return FilterSet(graphs); }

RedundancyReport redundancy_metrics(const KnowledgeGraph& kg) {
  if (kg.empty()) throw Error("redundancy of an empty graph is undefined");
  // (h, t) pair -> number of facts on it; a fact is duplicated iff its pair
  // carries at least two facts (they necessarily differ in relation).
  std::unordered_map<std::uint64_t, std::size_t> pair_count;
  for (const auto& t : kg.triples()) ++pair_count[(std::uint64_t{t.head} << 32) | t.tail];

  std::size_t dup = 0, rev = 0;
  for (const auto& t : kg.triples()) {
    if (pair_count[(std::uint64_t{t.head} << 32) | t.tail] > 1) ++dup;
    auto it = pair_count.find((std::uint64_t{t.tail} << 32) | t.head);
    if (it == pair_count.end()) continue;
    // A self-loop finds itself; it needs a second fact on the same pair.
    std::size_t need = t.head == t.tail ? 2 : 1;
    if (it->second >= need) ++rev;
  }
  const double n = static_cast<double>(kg.size());
  return {static_cast<double>(dup) / n, static_cast<double>(rev) / n};
}

}  // namespace kge
