#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "kge/checkpoint.hpp"

using namespace kge;

TEST_CASE("checkpoints round-trip every model kind bitwise") {
  for (ModelKind k : kAllModelKinds) {
    Checkpoint c{init_model(k, 6, 2, 3, 4, 9), std::nullopt, std::nullopt};
    auto bytes = serialize_checkpoint(c);
    auto back = deserialize_checkpoint(bytes);
    CHECK(back.model == c.model);
    CHECK(!back.entities);
    CHECK(serialize_checkpoint(back) == bytes);
  }
}

TEST_CASE("header layout and dictionaries") {
  auto kg = load_triples("a\tr\tb\nb\ts\tc\n");
  Checkpoint c{init_model(ModelKind::TransE, 3, 2, 2, 2, 1), kg.entities(), kg.relations()};
  auto bytes = serialize_checkpoint(c);
  CHECK(bytes.substr(0, 8) == "KGECKPT1");
  std::uint32_t kind = 99;
  std::memcpy(&kind, bytes.data() + 8, 4);
  CHECK(kind == 0);
  std::uint64_t n_ent = 0;
  std::memcpy(&n_ent, bytes.data() + 16, 8);
  CHECK(n_ent == 3);
  // first tensor value right after the 48-byte header
  double first = 0;
  std::memcpy(&first, bytes.data() + 48, 8);
  CHECK(first == c.model.params[0].data[0]);

  auto back = deserialize_checkpoint(bytes);
  REQUIRE(back.entities);
  CHECK(*back.entities == kg.entities());
  CHECK(*back.relations == kg.relations());

  auto path = (std::filesystem::temp_directory_path() / "kge_ckpt_test.kge").string();
  save_checkpoint(c, path);
  auto loaded = load_checkpoint(path);
  CHECK(loaded.model == c.model);
  CHECK(*loaded.entities == kg.entities());
}

TEST_CASE("corrupt checkpoints are rejected") {
  Checkpoint c{init_model(ModelKind::ComplEx, 4, 1, 2, 2, 0), std::nullopt, std::nullopt};
  auto bytes = serialize_checkpoint(c);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad_magic), Error);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), Error);
  auto bad_kind = bytes;
  bad_kind[8] = 42;
  CHECK_THROWS_AS(deserialize_checkpoint(bad_kind), Error);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.kge"), Error);
}
