#include <doctest.h>

#include <cmath>

#include "semtok/error.hpp"
#include "semtok/inspect.hpp"
#include "semtok/rng.hpp"
#include "support.hpp"

using namespace semtok;
using namespace semtok::testing;

TEST_CASE("cluster members") {
  Vocabulary v({"[UNK]", ".", "a", ";", "!"});
  v.mark_specials(kDefaultSpecialTokens);
  GroupingMap map;
  map.assignment = {0, 1, 2, 1, 1};
  map.num_semantic = 3;
  auto r = cluster_members(map, v, 1);
  CHECK(r.size == 3);
  REQUIRE(r.members.size() == 3);
  CHECK(r.members[0].second == ".");
  CHECK(r.members[1].second == ";");
  CHECK(r.members[2].second == "!");
  CHECK_FALSE(r.label);

  auto single = cluster_members(map, v, 2);
  CHECK(single.size == 1);
  CHECK(single.label == "a");
  CHECK_THROWS_AS(cluster_members(map, v, 3), Error);
}

TEST_CASE("label is the member nearest the group mean") {
  // centre token sits on the mean direction; others fan out around it
  Vocabulary v({"[UNK]", "left", "centre", "right", "far"});
  v.mark_specials(kDefaultSpecialTokens);
  EmbeddingMatrix e(5, 2, {0, 1, 1, 0.3f, 1, 0, 1, -0.3f, -1, 0});
  GroupingMap map;
  map.assignment = {0, 1, 1, 1, 2};
  map.num_semantic = 3;
  CHECK(cluster_members(map, v, 1, &e).label == "centre");
}

TEST_CASE("mother and mẹ share a group on a toy embedding") {
  Vocabulary v({"[UNK]", "mother", "father", "mẹ", "cha", "tomato"});
  v.mark_specials(kDefaultSpecialTokens);
  EmbeddingMatrix e(6, 3, {0, 0, 1,
                           1, 0.05f, 0,
                           0.05f, 1, 0,
                           0.98f, 0.1f, 0,
                           0.1f, 0.97f, 0,
                           -1, -1, 0});
  KMeansConfig cfg;
  cfg.k = 3;
  auto r = spherical_kmeans(e, cfg, v.special_ids());
  auto hit = find_token(r.map, v, "mother", &e);
  CHECK(hit.subword_id == 1);
  bool has_me = false;
  for (const auto& [id, tok] : hit.report.members) has_me = has_me || tok == "mẹ";
  CHECK(has_me);
  CHECK(hit.report.size == 2);

  try {
    find_token(r.map, v, "nope");
    FAIL("expected UnknownToken");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::UnknownToken);
  }
}

TEST_CASE("every subword appears in exactly one report") {
  auto v = synthetic_vocab(60);
  KMeansConfig cfg;
  cfg.k = 7;
  auto m = random_matrix(60, 5, 3);
  auto r = spherical_kmeans(m, cfg, v.special_ids());
  auto reports = all_cluster_reports(r.map, v, &m);
  std::vector<int> seen(60, 0);
  for (const auto& rep : reports) {
    CHECK(rep.label.has_value());
    for (const auto& [id, tok] : rep.members) {
      ++seen[id];
      CHECK(r.map.assignment[id] == rep.semantic_id);
    }
  }
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("cluster stats") {
  auto id = cluster_stats(identity_map(10));
  CHECK(id.singletons == 10);
  CHECK(id.max_size == 1);
  CHECK(id.ratio.value == 1.0);

  GroupingMap all;
  all.assignment.assign(10, 0);
  all.num_semantic = 1;
  CHECK(cluster_stats(all).max_size == 10);

  Rng rng(1);
  GroupingMap random;
  random.num_semantic = 30;
  for (int i = 0; i < 30; ++i) random.assignment.push_back(TokenId(i));
  for (int i = 0; i < 300; ++i) random.assignment.push_back(TokenId(rng.below(30)));
  std::vector<std::size_t> sizes(30, 0);
  for (auto g : random.assignment) ++sizes[g];
  std::map<std::size_t, std::size_t> hist;
  for (auto s : sizes) ++hist[s];
  auto s = cluster_stats(random);
  CHECK(s.size_histogram == hist);
  CHECK(s.groups == 30);
}

TEST_CASE("parameter accounting") {
  CHECK(embedding_param_ratio(119547, 768, 32, 0.05) == doctest::Approx(0.05 * 32 / 768.0));
  CHECK(embedding_param_ratio(119547, 768, 768, 1.0) == 1.0);
  CHECK(std::round(embedding_param_ratio(119547, 768, 32, 0.40) * 1e5) / 1e3 == 1.667);
  CHECK(model_param_count(0, 768, 12345) == 12345);
  CHECK(model_param_count(200, 32, 7) - model_param_count(100, 32, 7) == 100 * 32);
}

// Reference values from tests/oracles/pearson_oracle.py (50-digit mpmath).
TEST_CASE("pearson") {
  std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 6};
  auto r = pearson(x, y);
  CHECK(std::abs(r.rho - 0.82199493652678644446) <= 1e-9);
  CHECK(std::abs(r.p_one_tail - 0.043853323504032773625) <= 1e-6);

  std::vector<double> lin;
  for (double v : x) lin.push_back(2 * v + 1);
  CHECK(std::abs(pearson(x, lin).rho - 1.0) <= 1e-12);
  std::vector<double> a{1, 2, 3}, b{3, 2, 1};
  CHECK(pearson(a, b).rho == doctest::Approx(-1.0).epsilon(1e-12));

  std::vector<double> flat{1, 1, 1};
  CHECK_THROWS_AS(pearson(a, flat), Error);
  std::vector<double> two{1, 2};
  CHECK_THROWS_AS(pearson(two, two), Error);
}

TEST_CASE("t tail and incomplete beta") {
  CHECK(student_t_upper_tail(0.0, 5) == doctest::Approx(0.5).epsilon(1e-14));
  // nu = 1 is Cauchy: P(T >= 1) = 1/4
  CHECK(student_t_upper_tail(1.0, 1) == doctest::Approx(0.25).epsilon(1e-12));
  // nu = 2: P(T >= t) = (1 - t / sqrt(t^2 + 2)) / 2
  CHECK(student_t_upper_tail(1.5, 2) ==
        doctest::Approx((1 - 1.5 / std::sqrt(1.5 * 1.5 + 2)) / 2).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2, 3, 1.0) == 1.0);
  // I_x(1, b) = 1 - (1 - x)^b
  CHECK(regularized_incomplete_beta(1, 4, 0.3) ==
        doctest::Approx(1 - std::pow(0.7, 4)).epsilon(1e-12));
}

TEST_CASE("permutation p-values") {
  std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 6};
  auto ex = permutation_p_exhaustive(x, y);
  CHECK(ex.permutations == 120);
  // 6 of the 120 orderings reach the observed rho (oracle script)
  CHECK(ex.p == doctest::Approx(6.0 / 120).epsilon(1e-15));
  auto mc = permutation_p_sampled(x, y, 20000, 3);
  CHECK(std::abs(mc.p - ex.p) <= 4 * mc.standard_error + 1e-12);
  auto mc2 = permutation_p_sampled(x, y, 20000, 3);
  CHECK(mc.p == mc2.p);

  std::vector<double> big(13, 1.0);
  CHECK_THROWS_AS(permutation_p_exhaustive(big, big), Error);
}
