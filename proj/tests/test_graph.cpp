#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "kge/graph.hpp"
#include "oracles.hpp"

using namespace kge;

namespace {

std::multiset<Triple> as_multiset(std::span<const Triple> a) { return {a.begin(), a.end()}; }

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "kge_graph_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("load_triples assigns indices in first-appearance order") {
  auto kg = load_triples("a\tlikes\tb\nb\tlikes\tc");
  CHECK(kg.n_ent() == 3);
  CHECK(kg.n_rel() == 1);
  CHECK(kg.size() == 2);
  CHECK(kg.entities().find("a") == Index{0});
  CHECK(kg.entities().find("b") == Index{1});
  CHECK(kg.entities().find("c") == Index{2});
  CHECK(kg[0] == Triple{0, 0, 1});
  CHECK(kg[1] == Triple{1, 0, 2});
}

TEST_CASE("duplicate lines collapse") {
  auto kg = load_triples("a\tlikes\tb\na\tlikes\tb");
  CHECK(kg.size() == 1);
}

TEST_CASE("load_triples errors") {
  CHECK_THROWS_WITH_AS(load_triples(""), "no triples", Error);
  CHECK_THROWS_WITH_AS(load_triples("\n\n"), "no triples", Error);
  try {
    load_triples("a\tr\tb\nbroken line\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_triples("a\tr\tb\tc\n"), ParseError);
}

TEST_CASE("write then load round-trips random files") {
  std::mt19937 gen(11);
  for (int round = 0; round < 20; ++round) {
    // 10 lines over 4 entities and 2 relations; duplicates are allowed in the file
    std::string text;
    std::set<std::string> ents, rels;
    for (int i = 0; i < 10; ++i) {
      std::string h = "ent" + std::to_string(gen() % 4), r = "rel" + std::to_string(gen() % 2),
                  t = "ent" + std::to_string(gen() % 4);
      if (i < 4) h = "ent" + std::to_string(i);
      if (i < 2) r = "rel" + std::to_string(i);
      ents.insert(h), ents.insert(t), rels.insert(r);
      text += h + "\t" + r + "\t" + t + "\n";
    }
    auto kg = load_triples(text);
    CHECK(kg.n_ent() == 4);
    CHECK(kg.n_rel() == 2);
    auto again = load_triples(write_triples(kg));
    CHECK(again.entities() == kg.entities());
    CHECK(again.relations() == kg.relations());
    CHECK(std::ranges::equal(again.triples(), kg.triples()));

    const std::string path = temp_path("roundtrip.txt");
    write_triples_file(kg, path);
    auto from_file = load_triples_file(path);
    CHECK(std::ranges::equal(from_file.triples(), kg.triples()));
  }
}

TEST_CASE("labels may contain spaces and unicode") {
  auto kg = load_triples("New York\tlocated in\tÉtats-Unis\n");
  CHECK(kg.entities().label(1) == "États-Unis");
  CHECK(kg.relations().label(0) == "located in");
}

TEST_CASE("graph construction validates indices") {
  auto ents = std::make_shared<Dictionary>(std::vector<std::string>{"a", "b"});
  auto rels = std::make_shared<Dictionary>(std::vector<std::string>{"r"});
  CHECK_THROWS_AS(KnowledgeGraph(ents, rels, {Triple{0, 0, 2}}), Error);
  CHECK_THROWS_AS(KnowledgeGraph(ents, rels, {Triple{0, 1, 1}}), Error);
  KnowledgeGraph kg(ents, rels, {Triple{0, 0, 1}, Triple{0, 0, 1}});
  CHECK(kg.size() == 1);
}

TEST_CASE("load_triple_files shares dictionaries and load_triples_with rejects unknown labels") {
  const std::string a = temp_path("a.txt"), b = temp_path("b.txt"), c = temp_path("c.txt");
  std::ofstream(a) << "x\tr\ty\n";
  std::ofstream(b) << "y\ts\tz\n";
  std::ofstream(c) << "x\tr\tw\n";
  std::vector<std::string> paths{a, b};
  auto graphs = load_triple_files(paths);
  REQUIRE(graphs.size() == 2);
  CHECK(graphs[0].shares_dictionaries_with(graphs[1]));
  CHECK(graphs[1][0] == Triple{1, 1, 2});
  CHECK_THROWS_WITH_AS(load_triples_with(c, graphs[0].entities_ptr(), graphs[0].relations_ptr()),
                       doctest::Contains("'w'"), Error);
  auto same = load_triples_with(a, graphs[0].entities_ptr(), graphs[0].relations_ptr());
  CHECK(same[0] == graphs[0][0]);
}

TEST_CASE("split of a one-fact graph keeps the fact in train") {
  auto kg = load_triples("a\tr\tb\n");
  auto s = split_kg(kg, 0.5, false, 0);
  CHECK(s.train.size() == 1);
  CHECK(s.test.size() == 0);
  CHECK(!s.valid);
  CHECK(s.warning);
}

TEST_CASE("split covers, partitions and reproduces") {
  auto kg = oracle::random_graph(100, 5, 500, 7);
  REQUIRE(kg.size() == 500);
  auto s = split_kg(kg, 0.8, false, 7);
  std::set<Index> ents, rels;
  for (const auto& t : s.train.triples()) ents.insert({t.head, t.tail}), rels.insert(t.relation);
  // every entity that occurs anywhere occurs in train
  std::set<Index> all_ents;
  for (const auto& t : kg.triples()) all_ents.insert({t.head, t.tail});
  CHECK(ents == all_ents);
  CHECK(rels.size() == 5);
  CHECK(s.train.size() + s.test.size() == 500);
  std::vector<Triple> joined(s.train.triples().begin(), s.train.triples().end());
  joined.insert(joined.end(), s.test.triples().begin(), s.test.triples().end());
  CHECK(as_multiset(joined) == as_multiset(kg.triples()));

  auto again = split_kg(kg, 0.8, false, 7);
  CHECK(std::ranges::equal(again.train.triples(), s.train.triples()));
  CHECK(std::ranges::equal(again.test.triples(), s.test.triples()));

  auto v = split_kg(kg, 0.8, true, 7);
  REQUIRE(v.valid);
  CHECK(v.valid->size() == (500 - v.train.size()) / 2);
  CHECK(v.train.size() + v.valid->size() + v.test.size() == 500);
}

TEST_CASE("split rejects bad shares") {
  auto kg = load_triples("a\tr\tb\n");
  CHECK_THROWS_AS(split_kg(kg, 0.0, false, 0), Error);
  CHECK_THROWS_AS(split_kg(kg, 1.0, false, 0), Error);
}

TEST_CASE("corruption stats") {
  auto ents = std::make_shared<Dictionary>(std::vector<std::string>{"0", "1", "2"});
  auto rels = std::make_shared<Dictionary>(std::vector<std::string>{"r", "unused"});
  auto s = corruption_stats(KnowledgeGraph(ents, rels, {{0, 0, 1}, {0, 0, 2}}));
  CHECK(s.tph[0] == 2.0);
  CHECK(s.hpt[0] == 1.0);
  CHECK(s.tph[1] == 1.0);
  CHECK(s.hpt[1] == 1.0);
  CHECK(s.head_probability(1) == 0.5);
  auto m = corruption_stats(KnowledgeGraph(ents, rels, {{0, 0, 1}, {2, 0, 1}}));
  CHECK(m.tph[0] == 1.0);
  CHECK(m.hpt[0] == 2.0);
}

TEST_CASE("corruption stats match a counting oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto kg = oracle::random_graph(30, 6, 200 + seed * 25, seed);
    auto s = corruption_stats(kg);
    auto o = oracle::corruption_counts(kg);
    for (Index r = 0; r < kg.n_rel(); ++r) {
      CHECK(s.tph[r] >= 1.0);
      CHECK(s.hpt[r] >= 1.0);
      if (o.tph.contains(r)) {
        CHECK(s.tph[r] == o.tph[r]);
        CHECK(s.hpt[r] == o.hpt[r]);
      }
    }
  }
}

TEST_CASE("filter set membership") {
  auto kg = oracle::random_graph(20, 3, 60, 1);
  auto parts = split_kg(kg, 0.6, true, 3);
  FilterSet only_train{&parts.train};
  CHECK(only_train.contains(parts.train[0]));
  for (const auto& t : parts.test.triples()) CHECK(!only_train.contains(t));

  FilterSet all{&parts.train, &*parts.valid, &parts.test};
  std::vector<Triple> naive;
  for (const KnowledgeGraph* g : {&parts.train, &*parts.valid, &parts.test})
    for (const auto& t : g->triples())
      if (std::find(naive.begin(), naive.end(), t) == naive.end()) naive.push_back(t);
  CHECK(all.size() == naive.size());
  for (Index h = 0; h < 20; ++h)
    for (Index r = 0; r < 3; ++r)
      for (Index t = 0; t < 20; ++t)
        CHECK(all.contains({h, r, t}) == (std::find(naive.begin(), naive.end(), Triple{h, r, t}) != naive.end()));

  // equal labels count as the same dictionary, different labels do not
  auto twin = oracle::random_graph(20, 3, 10, 2);
  CHECK_NOTHROW((FilterSet{&parts.train, &twin}));
  auto other = oracle::ring_graph(20);
  CHECK_THROWS_AS((FilterSet{&parts.train, &other}), Error);
}

TEST_CASE("redundancy metrics") {
  auto ents = std::make_shared<Dictionary>(std::vector<std::string>{"0", "1"});
  auto rels = std::make_shared<Dictionary>(std::vector<std::string>{"a", "b"});
  CHECK(redundancy_metrics(KnowledgeGraph(ents, rels, {{0, 0, 1}, {0, 1, 1}})).duplicate_fraction == 1.0);
  CHECK(redundancy_metrics(KnowledgeGraph(ents, rels, {{0, 0, 1}, {1, 1, 0}})).reverse_duplicate_fraction ==
        1.0);
  auto lone = redundancy_metrics(KnowledgeGraph(ents, rels, {{0, 0, 0}}));
  CHECK(lone.reverse_duplicate_fraction == 0.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto kg = oracle::random_graph(15, 3, 300, seed);
    auto got = redundancy_metrics(kg);
    auto want = oracle::redundancy_scan(kg);
    CHECK(got.duplicate_fraction == want.duplicate_fraction);
    CHECK(got.reverse_duplicate_fraction == want.reverse_duplicate_fraction);
    CHECK(got.duplicate_fraction >= 0.0);
    CHECK(got.duplicate_fraction <= 1.0);
  }
}
