#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "semtok/digest.hpp"
#include "semtok/error.hpp"
#include "semtok/pipeline.hpp"
#include "support.hpp"

using namespace semtok;
using namespace semtok::testing;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

void write_toy(const TempDir& dir, std::size_t n, std::size_t dim, bool specials) {
  auto v = specials ? synthetic_vocab(n) : Vocabulary([&] {
    std::vector<std::string> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back("w" + std::to_string(i));
    return t;
  }());
  save_embeddings(v, random_matrix(n, dim, 17), dir / "emb.txt", EmbeddingFormat::W2vText);
}

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config parsing and validation") {
  json base = {{"embeddings", "emb.txt"}, {"output_dir", "out"}, {"stages", {{{"type", "pretrain"}}}}};
  auto cfg = parse_pipeline_config(base, "/data");
  CHECK(cfg.embeddings == "/data/emb.txt");
  CHECK(cfg.output_dir == "/data/out");

  auto bad_order = base;
  bad_order["stages"] = {{{"type", "group"}, {"ratio", 0.5}}, {{"type", "clsa"}}};
  CHECK(code_of([&] { parse_pipeline_config(bad_order); }) == ErrorCode::ConfigError);

  auto two_groups = base;
  two_groups["stages"] = {{{"type", "group"}, {"k", 3}}, {{"type", "group"}, {"k", 3}}};
  CHECK(code_of([&] { parse_pipeline_config(two_groups); }) == ErrorCode::ConfigError);

  auto trailing_pretrain = base;
  trailing_pretrain["stages"] = {{{"type", "group"}, {"k", 3}}, {{"type", "pretrain"}}};
  CHECK_NOTHROW(parse_pipeline_config(trailing_pretrain));

  auto unknown = base;
  unknown["stages"] = {{{"type", "finetune"}}};
  CHECK(code_of([&] { parse_pipeline_config(unknown); }) == ErrorCode::ConfigError);

  auto no_target = base;
  no_target["stages"] = {{{"type", "group"}}};
  CHECK(code_of([&] { parse_pipeline_config(no_target); }) == ErrorCode::ConfigError);

  auto no_out = base;
  no_out.erase("output_dir");
  CHECK(code_of([&] { parse_pipeline_config(no_out); }) == ErrorCode::ConfigError);
}

TEST_CASE("k-means with k = |V| reproduces every row") {
  TempDir dir("pipe_identity");
  write_toy(dir, 40, 6, false);
  json j = {{"embeddings", "emb.txt"},
            {"output_dir", "run"},
            {"stages", {{{"type", "group"}, {"k", 40}}}}};
  auto m = run_pipeline(parse_pipeline_config(j, dir.path()));
  REQUIRE(m.ratio);
  CHECK(m.ratio->value == 1.0);
  auto in = load_embeddings(dir / "emb.txt", EmbeddingFormat::W2vText);
  auto sem = load_embeddings(dir / "run/semantic.semb", EmbeddingFormat::SembBinary);
  auto map = read_grouping_map(dir / "run/grouping.tsv").map;
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(sem.matrix.at(map.assignment[i], j) == in.matrix.at(i, j));
}

TEST_CASE("dimreduce then group: shape arithmetic") {
  TempDir dir("pipe_shape");
  write_toy(dir, 205, 64, true);
  json j = {{"embeddings", "emb.txt"},
            {"output_dir", "run"},
            {"seed", 3},
            {"stages", {{{"type", "dimreduce"}, {"d", 32}}, {{"type", "group"}, {"ratio", 0.05}}}}};
  auto m = run_pipeline(parse_pipeline_config(j, dir.path()));
  CHECK(m.ok);
  // ceil(0.05 * 205) = 11 clusters plus the 5 specials
  CHECK(m.json["final_shape"] == json::array({16, 32}));
  auto sem = load_embeddings(dir / "run/semantic.semb", EmbeddingFormat::SembBinary);
  CHECK(sem.matrix.rows() == 16);
  CHECK(sem.matrix.dim() == 32);
  CHECK(verify_manifest(m.path).empty());

  // tampering is detected
  std::ofstream(dir / "run/grouping.tsv", std::ios::app) << "x";
  CHECK(verify_manifest(m.path).size() == 1);
}

TEST_CASE("a failing stage still leaves a manifest") {
  TempDir dir("pipe_fail");
  write_toy(dir, 30, 8, true);
  json j = {{"embeddings", "emb.txt"},
            {"output_dir", "run"},
            {"stages", {{{"type", "dimreduce"}, {"d", 4}}, {{"type", "dimreduce"}, {"d", 16}}}}};
  CHECK_THROWS_AS(run_pipeline(parse_pipeline_config(j, dir.path())), Error);
  std::ifstream in(dir / "run/manifest.json");
  REQUIRE(in);
  auto m = json::parse(in);
  CHECK(m["status"] == "failed");
  CHECK(m["failed_stage"] == "dimreduce");
  CHECK(m["outputs"].size() >= 1);
  CHECK(verify_manifest(dir / "run/manifest.json").empty());
}

TEST_CASE("first-k and pretrain stub") {
  TempDir dir("pipe_firstk");
  write_toy(dir, 50, 4, true);
  json j = {{"embeddings", "emb.txt"},
            {"output_dir", "run"},
            {"stages", {{{"type", "group"}, {"method", "first_k"}, {"k", 10}}, {{"type", "pretrain"}}}}};
  auto m = run_pipeline(parse_pipeline_config(j, dir.path()));
  CHECK(m.json["stages"].size() == 2);
  CHECK(m.json["stages"][1]["type"] == "pretrain");
  CHECK(m.ratio->semantic == 15);
}
