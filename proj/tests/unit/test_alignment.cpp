#include <doctest.h>

#include <cmath>

#include "semtok/alignment.hpp"
#include "semtok/error.hpp"
#include "semtok/rng.hpp"
#include "support.hpp"

using namespace semtok;
using namespace semtok::testing;

TEST_CASE("pair lexicon ingestion") {
  TempDir dir("lex");
  write_file(dir / "en-ru.tsv", "# comment\n\nen\tthey\tru\tони\nen\tmother\tru\tмать\r\n");
  auto r = ingest_lexicon(dir / "en-ru.tsv", LexiconFormat::PairTsv);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0] == LexiconPair{"they", "en", "они", "ru", "en-ru"});
  CHECK(r.pairs[1].word_b == "мать");

  write_file(dir / "bad.tsv", "en\tthey\tru\nen\ta\tru\tb\n");
  CHECK_THROWS_AS(ingest_lexicon(dir / "bad.tsv", LexiconFormat::PairTsv), Error);
  auto lenient = ingest_lexicon(dir / "bad.tsv", LexiconFormat::PairTsv, false, "tag");
  CHECK(lenient.pairs.size() == 1);
  CHECK(lenient.pairs[0].source == "tag");
  REQUIRE(lenient.skipped.size() == 1);
  CHECK(lenient.skipped[0].line == 1);
}

TEST_CASE("concept lexicon ingestion and expansion") {
  TempDir dir("concepts");
  write_file(dir / "c.tsv",
             "MOTHER\ten\tmother\nFATHER\ten\tfather\nMOTHER\tvi\tmẹ\nMOTHER\tde\tMutter\n"
             "MOTHER\ten\tmother\nMOTHER\tel\tμητέρα\n");
  auto r = ingest_lexicon(dir / "c.tsv", LexiconFormat::ConceptTsv);
  REQUIRE(r.concepts.size() == 2);
  CHECK(r.concepts[0].concept_id == "MOTHER");
  CHECK(r.concepts[0].entries.size() == 4);
  CHECK(r.concepts[1].entries.size() == 1);

  auto pairs = expand_concepts(r.concepts);
  CHECK(pairs.size() == 6);
  CHECK(pairs[0].word_a == "mother");
  CHECK(pairs[0].word_b == "mẹ");
  CHECK(pairs[0].source == "MOTHER");

  std::vector<ConceptSet> two{{"X", {{"a", "1"}, {"b", "2"}}}};
  CHECK(expand_concepts(two).size() == 1);
}

TEST_CASE("dedup is order-insensitive") {
  std::vector<LexiconPair> p{{"a", "en", "b", "de", "s1"},
                             {"b", "de", "a", "en", "s2"},
                             {"a", "en", "c", "de", "s1"}};
  auto d = dedup_pairs(p);
  REQUIRE(d.size() == 2);
  CHECK(d[0].source == "s1");
}

TEST_CASE("single-subword filter") {
  Vocabulary v({"[UNK]", "tomato", "##es", "томат", "mother"});
  v.mark_specials(kDefaultSpecialTokens);
  std::vector<LexiconPair> p{{"tomato", "en", "томат", "ru", ""},
                             {"tomatoes", "en", "томат", "ru", ""},
                             {"qqq", "en", "mother", "en", ""},
                             {"a b", "en", "mother", "en", ""}};
  auto r = filter_single_subword(p, v);
  CHECK(r.kept == std::vector<IdPair>{{1, 3}});
  CHECK(r.report.total == 4);
  CHECK(r.report.multi_piece == 1);
  CHECK(r.report.unknown == 1);
  CHECK(r.report.invalid_word == 1);
  CHECK(r.report.covered_subwords == 2);
  CHECK(r.report.coverage_percent() == "40.0%");
}

TEST_CASE("coverage prints to one decimal") {
  DropReport r;
  r.vocab_size = 1000;
  r.covered_subwords = 454;
  CHECK(r.coverage_percent() == "45.4%");
  r.vocab_size = 119547;
  r.covered_subwords = 54274;  // 45.40%
  CHECK(r.coverage_percent() == "45.4%");
}

TEST_CASE("round-trip mining small cases") {
  EmbeddingMatrix two(2, 2, {1, 0, 0, 1});
  std::vector<TokenId> ids{0, 1};
  CHECK(mine_roundtrip(two, ids) == std::vector<IdPair>{{0, 1}});

  // NN(a) = b, NN(b) = c, NN(c) = b
  const double pi = 3.14159265358979323846;
  auto unit = [&](double deg) {
    return std::pair{float(std::cos(deg * pi / 180)), float(std::sin(deg * pi / 180))};
  };
  auto [ax, ay] = unit(0);
  auto [bx, by] = unit(50);
  auto [cx, cy] = unit(80);
  EmbeddingMatrix three(3, 2, {ax, ay, bx, by, cx, cy});
  std::vector<TokenId> all{0, 1, 2};
  CHECK(mine_roundtrip(three, all) == std::vector<IdPair>{{1, 2}});
  CHECK(mine_roundtrip(three, all) == brute_force_roundtrip(three, all));

  auto m = random_matrix(200, 6, 4);
  std::vector<TokenId> subset;
  for (TokenId i = 0; i < 200; i += 3) subset.push_back(i);
  CHECK(mine_roundtrip(m, subset) == brute_force_roundtrip(m, subset));

  EmbeddingMatrix zero(2, 1, {0, 1});
  CHECK_THROWS_AS(mine_roundtrip(zero, ids), Error);
}

TEST_CASE("InfoNCE values") {
  EmbeddingMatrix single(2, 2, {1, 0, 0.5f, 0.5f});
  std::vector<IdPair> one{{0, 1}};
  CHECK(clsa_loss(one, single, 0.05).value == 0.0);

  // s = [[1,0],[0,1]] at tau = 1
  EmbeddingMatrix e(4, 2, {1, 0, 0, 1, 1, 0, 0, 1});
  std::vector<IdPair> batch{{0, 2}, {1, 3}};
  const double fwd = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  CHECK(fwd == doctest::Approx(0.3133).epsilon(1e-4));
  CHECK(clsa_loss(batch, e, 1.0, false).value == doctest::Approx(fwd).epsilon(1e-12));
  CHECK(clsa_loss(batch, e, 1.0, true).value == doctest::Approx(fwd).epsilon(1e-12));
}

TEST_CASE("InfoNCE is non-negative and gradients touch only batch rows") {
  Rng rng(5);
  auto m = random_matrix(50, 8, 6);
  for (int t = 0; t < 50; ++t) {
    std::vector<IdPair> batch;
    for (int b = 0; b < 6; ++b)
      batch.push_back({TokenId(rng.below(25)), TokenId(25 + rng.below(25))});
    for (bool sym : {false, true}) {
      auto l = clsa_loss(batch, m, t % 2 ? 0.05 : 1.0, sym);
      CHECK(l.value >= 0.0);
      for (const auto& [id, g] : l.gradient) {
        bool used = false;
        for (const auto& p : batch) used = used || p.a == id || p.b == id;
        CHECK(used);
        CHECK(g.size() == 8);
      }
    }
  }
}

TEST_CASE("train: zero epochs and untouched rows") {
  auto m = random_matrix(20, 4, 1);
  std::vector<IdPair> pairs{{0, 10}, {1, 11}, {2, 12}};
  ClsaConfig cfg;
  cfg.epochs = 0;
  auto r = train_clsa(m, pairs, cfg);
  CHECK(bitwise_equal(r.embeddings, m));
  CHECK(r.trace.empty());

  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.1;
  r = train_clsa(m, pairs, cfg);
  // 3 pairs at batch 2: one full batch, trailing single pair dropped
  CHECK(r.trace.size() == 3);
  for (std::size_t i = 0; i < 20; ++i) {
    const bool used = i <= 2 || (i >= 10 && i <= 12);
    if (used) continue;
    for (std::size_t j = 0; j < 4; ++j) CHECK(r.embeddings.at(i, j) == m.at(i, j));
  }
  cfg.max_steps = 2;
  CHECK(train_clsa(m, pairs, cfg).trace.size() == 2);
}

TEST_CASE("train is reproducible per seed") {
  auto m = random_matrix(100, 8, 2);
  std::vector<IdPair> pairs;
  for (TokenId i = 0; i < 40; ++i) pairs.push_back({i, TokenId(50 + i)});
  ClsaConfig cfg;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  auto a = train_clsa(m, pairs, cfg);
  auto b = train_clsa(m, pairs, cfg);
  CHECK(bitwise_equal(a.embeddings, b.embeddings));
  cfg.seed = 4;
  auto c = train_clsa(m, pairs, cfg);
  CHECK_FALSE(bitwise_equal(a.embeddings, c.embeddings));
}

TEST_CASE("trace and pair writers") {
  TempDir dir("writers");
  std::vector<ClsaTrace> t{{1, 0.5}, {2, 0.25}};
  write_loss_trace(t, dir / "loss.csv");
  CHECK(read_file(dir / "loss.csv") == "step,loss\n1,0.5\n2,0.25\n");
  Vocabulary v({"a", "b"});
  std::vector<IdPair> p{{0, 1}};
  write_id_pairs(p, v, dir / "p.tsv");
  CHECK(read_file(dir / "p.tsv").find("0\t1") != std::string::npos);
}
