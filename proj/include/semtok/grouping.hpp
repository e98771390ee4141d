#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semtok/alignment.hpp"
#include "semtok/embed_store.hpp"

namespace semtok {

enum class GroupingMethod { KMeans, FirstK, Lexicon, Identity };

std::string_view grouping_method_name(GroupingMethod method) noexcept;
GroupingMethod parse_grouping_method(std::string_view name);

// Total, surjective subword-id -> semantic-id assignment.
struct GroupingMap {
  std::vector<TokenId> assignment;
  std::size_t num_semantic = 0;
  GroupingMethod method = GroupingMethod::Identity;
  std::uint64_t seed = 0;
  std::size_t k = 0;

  std::size_t size() const noexcept { return assignment.size(); }
  friend bool operator==(const GroupingMap&, const GroupingMap&) = default;
};

GroupingMap identity_map(std::size_t n);

// Every violated map invariant, as readable strings. With a vocabulary the
// length and special-token singleton checks are included (the unk group of a
// first-k map is the sink and exempt).
std::vector<std::string> validate_map(const GroupingMap& map, const Vocabulary* vocab = nullptr);

// Member ids per semantic id, ascending.
std::vector<std::vector<TokenId>> group_members(const GroupingMap& map);

enum class Metric { Cosine, Euclidean };
Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric metric) noexcept;

struct KMeansConfig {
  std::size_t k = 1;
  Metric metric = Metric::Cosine;
  std::size_t max_iters = 100;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // assignment workers; results do not depend on it
  std::size_t n_init = 1;   // independent seedings; the lowest final objective wins
};

struct KMeansResult {
  GroupingMap map;
  EmbeddingMatrix centroids;            // k x D; unit rows under the cosine metric
  std::vector<double> objective_trace;  // one entry per assignment step
  std::size_t iterations = 0;
  bool converged = false;
};

// Spherical k-means (cosine) or Lloyd's k-means (euclidean) over every row
// not listed in `exclude`, seeded with greedy k-means++. Cluster ids come
// first in centroid-creation order, then each excluded id as a singleton in
// ascending id order. Throws OutOfRange when k exceeds the clusterable row
// count and ZeroVector for an all-zero clusterable row under cosine.
KMeansResult spherical_kmeans(const EmbeddingMatrix& emb, const KMeansConfig& cfg,
                              std::span<const TokenId> exclude = {});

// Keeps the first k non-special ids as singletons; every other non-special id
// joins the unk token's group. Requires |specials| <= k <= |V|.
GroupingMap first_k(const Vocabulary& vocab, std::size_t k);

struct LexiconGroupResult {
  GroupingMap map;
  DropReport report;
  std::size_t special_dropped = 0;  // surviving pairs rejected for touching a special token
};

// Connected components of the surviving-pair graph. Pairs touching a special
// token are dropped so specials stay singletons.
LexiconGroupResult lexicon_group(const Vocabulary& vocab, std::span<const LexiconPair> pairs,
                                 const TokenizerOptions& options = {});

struct SemanticEmbeddings {
  EmbeddingMatrix matrix;
};

// Row g is the unweighted mean of the original rows in group g, accumulated
// in ascending id order in f64.
SemanticEmbeddings merge_embeddings(const EmbeddingMatrix& emb, const GroupingMap& map);

struct GroupingRatio {
  std::size_t semantic = 0;
  std::size_t total = 0;
  double value = 0.0;
};

GroupingRatio grouping_ratio(const GroupingMap& map);

// ceil(ratio * n), clamped to [1, n].
std::size_t count_for_ratio(std::size_t n, double ratio);

// Synthetic "<SEM_g>" tokens, or the supplied labels.
Vocabulary semantic_vocabulary(const GroupingMap& map, std::span<const std::string> labels = {});

// TSV: "#semtok-grouping v1  method=<m> seed=<s> k=<k>" then
// "subword_id<TAB>semantic_id<TAB>token" per subword.
void write_grouping_map(const GroupingMap& map, const Vocabulary& vocab,
                        const std::filesystem::path& path);

struct LoadedGroupingMap {
  GroupingMap map;
  std::vector<std::string> tokens;
};

LoadedGroupingMap read_grouping_map(const std::filesystem::path& path);

}  // namespace semtok
