#pragma once

// Shared helpers for the unit and acceptance tests: synthetic data, brute-force
// reference implementations and small utilities.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "semtok/alignment.hpp"
#include "semtok/embed_store.hpp"
#include "semtok/grouping.hpp"

namespace semtok::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

// Adjusted Rand index between two labelings of the same points.
double adjusted_rand(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct Planted {
  EmbeddingMatrix points;
  std::vector<std::size_t> truth;
  EmbeddingMatrix centres;  // unit rows
};

// `clusters` x `per_cluster` points in D=32 around well-separated unit centres
// (pairwise cosine <= 1/sqrt(32)). Each point has cosine >= min_cos to its centre
// and norm drawn log-uniformly from [1, norm_spread]. Points are shuffled.
Planted planted_clusters(std::size_t clusters, std::size_t per_cluster, double min_cos,
                         double norm_spread, std::uint64_t seed);

// i.i.d. standard normal entries.
EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed);

// Vocabulary "[PAD] [UNK] [CLS] [SEP] [MASK] t5 t6 ..." with the five specials marked.
Vocabulary synthetic_vocab(std::size_t n);

// Reference implementations ------------------------------------------------

std::vector<IdPair> brute_force_roundtrip(const EmbeddingMatrix& emb,
                                          std::span<const TokenId> candidates);

// Component labels (min member id) by breadth-first search over an edge list.
std::vector<TokenId> bfs_components(std::size_t n, std::span<const IdPair> edges);

// Whether two maps induce the same partition of ids.
bool same_partition(std::span<const TokenId> a, std::span<const TokenId> b);

// Units in the last place between two floats.
std::uint64_t ulp_distance(float a, float b);

}  // namespace semtok::testing
