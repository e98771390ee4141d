#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semtok/embed_store.hpp"
#include "semtok/grouping.hpp"

namespace semtok {

struct ClusterReport {
  TokenId semantic_id = 0;
  std::vector<std::pair<TokenId, std::string>> members;  // ascending subword id
  std::size_t size = 0;
  std::optional<std::string> label;
};

// Members of group g. With embeddings, the label is the member whose row is
// closest by cosine to the group mean (ties to the lowest id); a singleton is
// labelled with its own token either way.
ClusterReport cluster_members(const GroupingMap& map, const Vocabulary& vocab, TokenId g,
                              const EmbeddingMatrix* emb = nullptr);

// Reports for every group in one pass.
std::vector<ClusterReport> all_cluster_reports(const GroupingMap& map, const Vocabulary& vocab,
                                               const EmbeddingMatrix* emb = nullptr);

struct TokenLookup {
  TokenId subword_id = 0;
  TokenId semantic_id = 0;
  ClusterReport report;
};

TokenLookup find_token(const GroupingMap& map, const Vocabulary& vocab, std::string_view token,
                       const EmbeddingMatrix* emb = nullptr);

struct ClusterStats {
  std::map<std::size_t, std::size_t> size_histogram;  // group size -> number of groups
  std::size_t max_size = 0;
  std::size_t singletons = 0;
  std::size_t groups = 0;
  GroupingRatio ratio;
};

ClusterStats cluster_stats(const GroupingMap& map);

// Fraction of the original embedding parameters left after grouping to
// ratio r_G and keeping d of D dimensions: r_G * d / D.
double embedding_param_ratio(std::size_t vocab_size, std::size_t full_dim, std::size_t dim,
                             double grouping_ratio);

// |V'| * d + everything that is not the word-embedding matrix.
std::uint64_t model_param_count(std::uint64_t semantic_vocab, std::uint64_t dim,
                                std::uint64_t non_embedding_params);

// ---------------------------------------------------------------------------
// correlation

struct PearsonResult {
  double rho = 0.0;
  double t = 0.0;
  double p_one_tail = 0.0;  // P(T >= t) under H0, alternative rho > 0
  std::size_t n = 0;
};

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys);

struct PermutationResult {
  double p = 0.0;  // share of permutations with rho >= observed
  std::size_t permutations = 0;
  double standard_error = 0.0;  // sqrt(p (1 - p) / permutations)
};

// Enumerates all n! orderings of ys; n <= 12.
PermutationResult permutation_p_exhaustive(std::span<const double> xs, std::span<const double> ys);

// Seeded Monte-Carlo estimate over `samples` random orderings.
PermutationResult permutation_p_sampled(std::span<const double> xs, std::span<const double> ys,
                                        std::size_t samples, std::uint64_t seed);

// I_x(a, b) by continued fraction (modified Lentz, 1e-12 convergence).
double regularized_incomplete_beta(double a, double b, double x);

// P(T >= t) for Student's t with nu degrees of freedom.
double student_t_upper_tail(double t, double nu);

}  // namespace semtok
