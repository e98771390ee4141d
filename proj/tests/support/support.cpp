#include "support.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <unistd.h>

#include "semtok/rng.hpp"

namespace fs = std::filesystem;

namespace semtok::testing {

TempDir::TempDir(const std::string& tag) {
  static std::size_t counter = 0;
  path_ = fs::temp_directory_path() /
          ("semtok_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

double adjusted_rand(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sum_a = 0, sum_b = 0;
  for (const auto& [_, n] : joint) index += c2(n);
  for (const auto& [_, n] : rows) sum_a += c2(n);
  for (const auto& [_, n] : cols) sum_b += c2(n);
  const double expected = sum_a * sum_b / c2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

Planted planted_clusters(std::size_t clusters, std::size_t per_cluster, double min_cos,
                         double norm_spread, std::uint64_t seed) {
  constexpr std::size_t D = 32;
  Rng rng(seed);

  // Candidate centres: +-e_i and +-(Sylvester-Hadamard row)/sqrt(D).
  std::vector<std::vector<double>> candidates;
  for (int sign : {1, -1}) {
    for (std::size_t i = 0; i < D; ++i) {
      std::vector<double> e(D, 0.0);
      e[i] = sign;
      candidates.push_back(e);
      std::vector<double> h(D);
      for (std::size_t j = 0; j < D; ++j)
        h[j] = sign * ((std::popcount(i & j) % 2) ? -1.0 : 1.0) / std::sqrt(double(D));
      candidates.push_back(h);
    }
  }
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span(order));

  Planted out;
  out.centres = EmbeddingMatrix(clusters, D);
  for (std::size_t c = 0; c < clusters; ++c)
    for (std::size_t j = 0; j < D; ++j) out.centres.at(c, j) = float(candidates[order[c]][j]);

  const std::size_t n = clusters * per_cluster;
  std::vector<std::size_t> slots(n);
  for (std::size_t i = 0; i < n; ++i) slots[i] = i;
  rng.shuffle(std::span(slots));

  out.points = EmbeddingMatrix(n, D);
  out.truth.assign(n, 0);
  const double max_angle = 0.98 * std::acos(min_cos);
  for (std::size_t c = 0; c < clusters; ++c) {
    const auto& centre = candidates[order[c]];
    for (std::size_t p = 0; p < per_cluster; ++p) {
      // Random direction orthogonal to the centre.
      std::vector<double> w(D);
      double dot = 0;
      for (std::size_t j = 0; j < D; ++j) {
        w[j] = rng.normal();
        dot += w[j] * centre[j];
      }
      double wn = 0;
      for (std::size_t j = 0; j < D; ++j) {
        w[j] -= dot * centre[j];
        wn += w[j] * w[j];
      }
      wn = std::sqrt(wn);
      const double angle = max_angle * rng.uniform();
      const double norm = std::exp(std::log(norm_spread) * rng.uniform());
      const std::size_t row = slots[c * per_cluster + p];
      for (std::size_t j = 0; j < D; ++j)
        out.points.at(row, j) =
            float(norm * (std::cos(angle) * centre[j] + std::sin(angle) * w[j] / wn));
      out.truth[row] = c;
    }
  }
  return out;
}

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingMatrix m(rows, dim);
  for (auto& v : m.values()) v = float(rng.normal());
  return m;
}

Vocabulary synthetic_vocab(std::size_t n) {
  std::vector<std::string> tokens(kDefaultSpecialTokens.begin(), kDefaultSpecialTokens.end());
  for (std::size_t i = tokens.size(); i < n; ++i) tokens.push_back("t" + std::to_string(i));
  tokens.resize(n);
  Vocabulary v(tokens);
  v.mark_specials(kDefaultSpecialTokens);
  return v;
}

std::vector<IdPair> brute_force_roundtrip(const EmbeddingMatrix& emb,
                                          std::span<const TokenId> candidates) {
  const std::size_t n = candidates.size();
  std::vector<std::size_t> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -2;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto u = emb.row(candidates[i]), v = emb.row(candidates[j]);
      double d = 0, nu = 0, nv = 0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        d += double(u[k]) * v[k];
        nu += double(u[k]) * u[k];
        nv += double(v[k]) * v[k];
      }
      const double c = d / std::sqrt(nu * nv);
      if (c > best || (c == best && candidates[j] < candidates[nearest[i]])) {
        best = c;
        nearest[i] = j;
      }
    }
  }
  std::vector<IdPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = nearest[i];
    if (nearest[j] == i && candidates[i] < candidates[j]) out.push_back({candidates[i], candidates[j]});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TokenId> bfs_components(std::size_t n, std::span<const IdPair> edges) {
  std::vector<std::vector<TokenId>> adj(n);
  for (const auto& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<TokenId> label(n, TokenId(-1));
  for (TokenId s = 0; s < n; ++s) {
    if (label[s] != TokenId(-1)) continue;
    std::queue<TokenId> q;
    q.push(s);
    label[s] = s;
    while (!q.empty()) {
      const TokenId u = q.front();
      q.pop();
      for (TokenId v : adj[u])
        if (label[v] == TokenId(-1)) {
          label[v] = s;
          q.push(v);
        }
    }
  }
  return label;
}

bool same_partition(std::span<const TokenId> a, std::span<const TokenId> b) {
  if (a.size() != b.size()) return false;
  std::map<TokenId, TokenId> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

std::uint64_t ulp_distance(float a, float b) {
  auto key = [](float f) {
    std::int32_t i;
    std::memcpy(&i, &f, sizeof i);
    return i < 0 ? std::int64_t(INT32_MIN) - i : std::int64_t(i);
  };
  const std::int64_t d = key(a) - key(b);
  return std::uint64_t(d < 0 ? -d : d);
}

}  // namespace semtok::testing
