#include "semtok/grouping.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "parallel.hpp"
#include "semtok/error.hpp"
#include "semtok/rng.hpp"
#include "semtok/union_find.hpp"

namespace semtok {

std::string_view grouping_method_name(GroupingMethod method) noexcept {
  switch (method) {
    case GroupingMethod::KMeans: return "kmeans";
    case GroupingMethod::FirstK: return "first_k";
    case GroupingMethod::Lexicon: return "lexicon";
    case GroupingMethod::Identity: return "identity";
  }
  return "identity";
}

GroupingMethod parse_grouping_method(std::string_view name) {
  if (name == "kmeans") return GroupingMethod::KMeans;
  if (name == "first_k" || name == "firstk") return GroupingMethod::FirstK;
  if (name == "lexicon") return GroupingMethod::Lexicon;
  if (name == "identity") return GroupingMethod::Identity;
  throw Error(ErrorCode::ConfigError, "unknown grouping method '" + std::string(name) + "'");
}

Metric parse_metric(std::string_view name) {
  if (name == "cosine") return Metric::Cosine;
  if (name == "euclidean" || name == "l2") return Metric::Euclidean;
  throw Error(ErrorCode::ConfigError, "unknown metric '" + std::string(name) + "'");
}

std::string_view metric_name(Metric metric) noexcept {
  return metric == Metric::Cosine ? "cosine" : "euclidean";
}

GroupingMap identity_map(std::size_t n) {
  GroupingMap map;
  map.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) map.assignment[i] = static_cast<TokenId>(i);
  map.num_semantic = n;
  map.k = n;
  return map;
}

std::vector<std::string> validate_map(const GroupingMap& map, const Vocabulary* vocab) {
  std::vector<std::string> issues;
  std::vector<std::size_t> counts(map.num_semantic, 0);
  for (std::size_t i = 0; i < map.assignment.size(); ++i) {
    const TokenId g = map.assignment[i];
    if (g >= map.num_semantic) {
      issues.push_back("subword " + std::to_string(i) + " maps to " + std::to_string(g) +
                       " >= num_semantic " + std::to_string(map.num_semantic));
      continue;
    }
    ++counts[g];
  }
  for (std::size_t g = 0; g < counts.size(); ++g)
    if (counts[g] == 0) issues.push_back("semantic id " + std::to_string(g) + " is unused");
  if (vocab) {
    if (vocab->size() != map.assignment.size())
      issues.push_back("map covers " + std::to_string(map.assignment.size()) +
                       " subwords, vocabulary has " + std::to_string(vocab->size()));
    for (TokenId s : vocab->special_ids()) {
      if (s >= map.assignment.size()) continue;
      // under first-k the unk group is the designated sink
      if (map.method == GroupingMethod::FirstK && vocab->unk_id() == s) continue;
      const TokenId g = map.assignment[s];
      if (g < counts.size() && counts[g] != 1)
        issues.push_back("special token " + std::to_string(s) + " shares semantic id " +
                         std::to_string(g));
    }
  }
  return issues;
}

std::vector<std::vector<TokenId>> group_members(const GroupingMap& map) {
  std::vector<std::vector<TokenId>> members(map.num_semantic);
  for (std::size_t i = 0; i < map.assignment.size(); ++i) {
    const TokenId g = map.assignment[i];
    if (g >= members.size())
      throw Error(ErrorCode::OutOfRange, "semantic id " + std::to_string(g) + " out of range");
    members[g].push_back(static_cast<TokenId>(i));
  }
  return members;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double dot(std::span<const float> x, const double* c) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += static_cast<double>(x[j]) * c[j];
  return s;
}

double sq_dist(std::span<const float> x, const double* c) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = static_cast<double>(x[j]) - c[j];
    s += d * d;
  }
  return s;
}

// Rows taking part in clustering. Under the cosine metric each row is scaled
// by its f64 inverse norm on the fly, so points are unit length to f64
// precision rather than to f32 precision.
class PointSet {
 public:
  PointSet(const EmbeddingMatrix& emb, std::span<const TokenId> ids, Metric metric)
      : emb_(emb), ids_(ids.begin(), ids.end()), metric_(metric), inv_norm_(ids.size(), 1.0) {
    if (metric != Metric::Cosine) return;
    for (std::size_t p = 0; p < ids_.size(); ++p) {
      double norm = 0.0;
      for (float v : emb.row(ids_[p])) norm += static_cast<double>(v) * v;
      if (norm == 0.0)
        throw Error(ErrorCode::ZeroVector,
                    "row " + std::to_string(ids_[p]) + " is all zero under the cosine metric");
      inv_norm_[p] = 1.0 / std::sqrt(norm);
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return emb_.dim(); }

  // 1 - cos for unit rows, squared L2 otherwise.
  double distance(std::size_t p, const double* c) const {
    auto x = emb_.row(ids_[p]);
    return metric_ == Metric::Cosine ? 1.0 - dot(x, c) * inv_norm_[p] : sq_dist(x, c);
  }

  // out[j] += point(p)[j]
  void accumulate(std::size_t p, double* out) const {
    auto x = emb_.row(ids_[p]);
    const double s = inv_norm_[p];
    for (std::size_t j = 0; j < x.size(); ++j) out[j] += static_cast<double>(x[j]) * s;
  }

  void copy_to(std::size_t p, double* out) const {
    auto x = emb_.row(ids_[p]);
    const double s = inv_norm_[p];
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = static_cast<double>(x[j]) * s;
  }

 private:
  const EmbeddingMatrix& emb_;
  std::vector<TokenId> ids_;
  Metric metric_;
  std::vector<double> inv_norm_;
};

struct Centroids {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  double* row(std::size_t c) { return data.data() + c * dim; }
  const double* row(std::size_t c) const { return data.data() + c * dim; }
  void set_point(std::size_t c, const PointSet& points, std::size_t p) {
    points.copy_to(p, row(c));
  }
};

Centroids kmeans_pp(const PointSet& points, std::size_t k, Rng& rng, std::size_t threads) {
  const std::size_t n = points.size();
  Centroids cents{k, points.dim(), std::vector<double>(k * points.dim())};
  std::vector<char> chosen(n, 0);
  std::vector<double> min_dist(n);

  auto seed_point = [&](std::size_t c, std::size_t p) {
    cents.set_point(c, points, p);
    chosen[p] = 1;
  };

  std::size_t first = static_cast<std::size_t>(rng.below(n));
  seed_point(0, first);
  detail::parallel_ranges(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) min_dist[i] = std::max(0.0, points.distance(i, cents.row(0)));
  });

  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> cand_centre(points.dim());
  std::vector<double> best_dist(n), trial_dist(n);

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : min_dist) total += d;

    std::size_t pick = n;
    if (total <= 0.0) {
      // every remaining point coincides with a centre
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
      points.copy_to(pick, cand_centre.data());
      for (std::size_t i = 0; i < n; ++i)
        best_dist[i] =
            std::min(min_dist[i], std::max(0.0, points.distance(i, cand_centre.data())));
    } else {
      double best_potential = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < trials; ++t) {
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t cand = n;
        std::size_t last_positive = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (min_dist[i] <= 0.0) continue;
          last_positive = i;
          acc += min_dist[i];
          if (acc > u) {
            cand = i;
            break;
          }
        }
        if (cand == n) cand = last_positive;

        points.copy_to(cand, cand_centre.data());
        detail::parallel_ranges(n, threads, [&](std::size_t b, std::size_t e) {
          for (std::size_t i = b; i < e; ++i)
            trial_dist[i] =
                std::min(min_dist[i], std::max(0.0, points.distance(i, cand_centre.data())));
        });
        double potential = 0.0;
        for (double d : trial_dist) potential += d;
        if (potential < best_potential) {
          best_potential = potential;
          pick = cand;
          best_dist.swap(trial_dist);
        }
      }
    }
    seed_point(c, pick);
    min_dist.swap(best_dist);
  }
  return cents;
}

struct LloydRun {
  Centroids cents;
  std::vector<std::uint32_t> label;
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

// One k-means++ seeding followed by Lloyd iterations.
LloydRun lloyd(const PointSet& points, const KMeansConfig& cfg, std::uint64_t seed) {
  const std::size_t k = cfg.k;
  const std::size_t n = points.size();
  const std::size_t dim = points.dim();
  LloydRun result;
  Rng rng(seed);
  Centroids& cents = result.cents;
  cents = kmeans_pp(points, k, rng, cfg.threads);

  std::vector<std::uint32_t>& label = result.label;
  label.assign(n, 0);
  std::vector<std::uint32_t> prev_label(n, UINT32_MAX);
  std::vector<double> dist(n, 0.0);
  std::vector<std::size_t> counts(k);
  double prev_obj = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    // assignment
    detail::parallel_ranges(n, cfg.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        std::uint32_t best = 0;
        double best_d = points.distance(i, cents.row(0));
        for (std::size_t c = 1; c < k; ++c) {
          const double d = points.distance(i, cents.row(c));
          if (d < best_d) {
            best_d = d;
            best = static_cast<std::uint32_t>(c);
          }
        }
        label[i] = best;
        dist[i] = std::max(0.0, best_d);
      }
    });

    // empty clusters take the globally farthest point from a cluster that
    // can spare one
    std::fill(counts.begin(), counts.end(), 0);
    for (auto l : label) ++counts[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[label[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      if (far == n) break;
      --counts[label[far]];
      label[far] = static_cast<std::uint32_t>(c);
      ++counts[c];
      dist[far] = 0.0;
      cents.set_point(c, points, far);
    }

    double obj = 0.0;
    for (double d : dist) obj += d;
    const bool changed = label != prev_label;
    result.objective_trace.push_back(obj);
    result.iterations = iter + 1;

    const double slack = 1e-12 * std::max(1.0, std::abs(prev_obj));
    if (std::isfinite(prev_obj) && obj > prev_obj + slack)
      throw Error(ErrorCode::NumericFailure, "k-means objective increased at iteration " +
                                                 std::to_string(iter) + ": " +
                                                 std::to_string(prev_obj) + " -> " +
                                                 std::to_string(obj));
    if (!changed || obj == 0.0 ||
        (std::isfinite(prev_obj) && prev_obj - obj <= cfg.rel_tol * prev_obj)) {
      result.converged = true;
      break;
    }
    if (iter + 1 == cfg.max_iters) break;

    // update, accumulating in ascending point order
    std::vector<double> sums(k * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) points.accumulate(i, sums.data() + label[i] * dim);
    for (std::size_t c = 0; c < k; ++c) {
      double* s = sums.data() + c * dim;
      if (cfg.metric == Metric::Cosine) {
        double norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) norm += s[j] * s[j];
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;  // members cancel out; keep the previous direction
        for (std::size_t j = 0; j < dim; ++j) cents.row(c)[j] = s[j] / norm;
      } else {
        const auto inv = 1.0 / static_cast<double>(counts[c]);
        for (std::size_t j = 0; j < dim; ++j) cents.row(c)[j] = s[j] * inv;
      }
    }
    prev_label = label;
    prev_obj = obj;
  }

  return result;
}

}  // namespace

KMeansResult spherical_kmeans(const EmbeddingMatrix& emb, const KMeansConfig& cfg,
                              std::span<const TokenId> exclude) {
  if (cfg.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(cfg.rel_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rel_tol must be >= 0");
  if (cfg.n_init < 1) throw Error(ErrorCode::InvalidArgument, "n_init must be >= 1");

  std::vector<char> excluded(emb.rows(), 0);
  for (TokenId id : exclude) {
    if (id >= emb.rows())
      throw Error(ErrorCode::OutOfRange, "excluded id " + std::to_string(id) + " out of range");
    excluded[id] = 1;
  }
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < emb.rows(); ++i)
    if (!excluded[i]) ids.push_back(static_cast<TokenId>(i));

  const std::size_t k = cfg.k;
  if (k < 1 || k > ids.size())
    throw Error(ErrorCode::OutOfRange, "k=" + std::to_string(k) + " but only " +
                                           std::to_string(ids.size()) + " clusterable rows");

  const PointSet points(emb, ids, cfg.metric);
  const std::size_t n = points.size();
  const std::size_t dim = points.dim();
  // restart r > 0 draws its seed from a stream keyed by cfg.seed, so a
  // single start reproduces the plain algorithm exactly
  Rng restart_seeds(cfg.seed);
  LloydRun best;
  for (std::size_t r = 0; r < cfg.n_init; ++r) {
    const std::uint64_t seed = r == 0 ? cfg.seed : restart_seeds.next();
    LloydRun run = lloyd(points, cfg, seed);
    if (r == 0 || run.objective_trace.back() < best.objective_trace.back()) best = std::move(run);
  }
  const auto& label = best.label;
  const auto& cents = best.cents;
  std::vector<std::size_t> counts(k);
  KMeansResult result;
  result.objective_trace = best.objective_trace;
  result.iterations = best.iterations;
  result.converged = best.converged;

  // compact cluster ids (all non-empty under the reassignment policy)
  std::fill(counts.begin(), counts.end(), 0);
  for (auto l : label) ++counts[l];
  std::vector<TokenId> remap(k, 0);
  std::size_t used = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0) remap[c] = static_cast<TokenId>(used++);

  GroupingMap& map = result.map;
  map.method = GroupingMethod::KMeans;
  map.seed = cfg.seed;
  map.k = k;
  map.assignment.assign(emb.rows(), 0);
  for (std::size_t i = 0; i < n; ++i) map.assignment[ids[i]] = remap[label[i]];
  TokenId next = static_cast<TokenId>(used);
  for (std::size_t i = 0; i < emb.rows(); ++i)
    if (excluded[i]) map.assignment[i] = next++;
  map.num_semantic = next;

  result.centroids = EmbeddingMatrix(used, dim);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    auto out = result.centroids.row(remap[c]);
    for (std::size_t j = 0; j < dim; ++j) out[j] = static_cast<float>(cents.row(c)[j]);
  }
  return result;
}

// ---------------------------------------------------------------------------
// first-k and lexicon grouping

GroupingMap first_k(const Vocabulary& vocab, std::size_t k) {
  const std::size_t specials = vocab.special_ids().size();
  if (k < specials || k > vocab.size())
    throw Error(ErrorCode::OutOfRange, "k=" + std::to_string(k) + " outside [" +
                                           std::to_string(specials) + ", " +
                                           std::to_string(vocab.size()) + "]");
  const auto unk = vocab.unk_id();
  if (!unk) throw Error(ErrorCode::MissingUnkToken, "first-k needs an unk token as the sink");

  GroupingMap map;
  map.method = GroupingMethod::FirstK;
  map.k = k;
  map.assignment.assign(vocab.size(), 0);
  std::vector<char> sink(vocab.size(), 0);
  std::size_t kept = 0;
  TokenId next = 0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (vocab.is_special(id)) {
      map.assignment[i] = next++;
    } else if (kept < k) {
      ++kept;
      map.assignment[i] = next++;
    } else {
      sink[i] = 1;
    }
  }
  for (std::size_t i = 0; i < vocab.size(); ++i)
    if (sink[i]) map.assignment[i] = map.assignment[*unk];
  map.num_semantic = next;
  return map;
}

LexiconGroupResult lexicon_group(const Vocabulary& vocab, std::span<const LexiconPair> pairs,
                                 const TokenizerOptions& options) {
  LexiconGroupResult result;
  auto filtered = filter_single_subword(pairs, vocab, options);
  result.report = filtered.report;

  UnionFind uf(vocab.size());
  for (const auto& p : filtered.kept) {
    if (vocab.is_special(p.a) || vocab.is_special(p.b)) {
      ++result.special_dropped;
      continue;
    }
    uf.unite(p.a, p.b);
  }

  // number components by their smallest member
  GroupingMap& map = result.map;
  map.method = GroupingMethod::Lexicon;
  map.assignment.assign(vocab.size(), 0);
  std::vector<TokenId> root_group(vocab.size(), UINT32_MAX);
  TokenId next = 0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const std::size_t r = uf.find(i);
    if (root_group[r] == UINT32_MAX) root_group[r] = next++;
    map.assignment[i] = root_group[r];
  }
  map.num_semantic = next;
  map.k = next;
  return result;
}

// ---------------------------------------------------------------------------
// merging and ratios

SemanticEmbeddings merge_embeddings(const EmbeddingMatrix& emb, const GroupingMap& map) {
  if (emb.rows() != map.assignment.size())
    throw Error(ErrorCode::RowCountMismatch, "matrix has " + std::to_string(emb.rows()) +
                                                 " rows, map covers " +
                                                 std::to_string(map.assignment.size()));
  const std::size_t dim = emb.dim();
  std::vector<double> sums(map.num_semantic * dim, 0.0);
  std::vector<std::size_t> counts(map.num_semantic, 0);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    const TokenId g = map.assignment[i];
    if (g >= map.num_semantic)
      throw Error(ErrorCode::OutOfRange, "semantic id " + std::to_string(g) + " out of range");
    ++counts[g];
    double* s = sums.data() + g * dim;
    auto row = emb.row(i);
    for (std::size_t j = 0; j < dim; ++j) s[j] += row[j];
  }
  SemanticEmbeddings out{EmbeddingMatrix(map.num_semantic, dim)};
  for (std::size_t g = 0; g < map.num_semantic; ++g) {
    if (counts[g] == 0)
      throw Error(ErrorCode::InvalidArgument, "semantic id " + std::to_string(g) + " has no members");
    const double n = static_cast<double>(counts[g]);
    auto dst = out.matrix.row(g);
    for (std::size_t j = 0; j < dim; ++j) dst[j] = static_cast<float>(sums[g * dim + j] / n);
  }
  return out;
}

GroupingRatio grouping_ratio(const GroupingMap& map) {
  GroupingRatio r{map.num_semantic, map.assignment.size(), 0.0};
  if (r.total > 0) r.value = static_cast<double>(r.semantic) / static_cast<double>(r.total);
  return r;
}

std::size_t count_for_ratio(std::size_t n, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw Error(ErrorCode::OutOfRange, "ratio must lie in (0, 1]");
  // the epsilon keeps e.g. 0.05 * 10000 at 500 rather than 501
  auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

Vocabulary semantic_vocabulary(const GroupingMap& map, std::span<const std::string> labels) {
  if (!labels.empty() && labels.size() != map.num_semantic)
    throw Error(ErrorCode::RowCountMismatch, std::to_string(labels.size()) + " labels for " +
                                                 std::to_string(map.num_semantic) + " groups");
  std::vector<std::string> tokens;
  tokens.reserve(map.num_semantic);
  for (std::size_t g = 0; g < map.num_semantic; ++g)
    tokens.push_back(labels.empty() ? "<SEM_" + std::to_string(g) + ">" : labels[g]);
  return Vocabulary(std::move(tokens));
}

// ---------------------------------------------------------------------------
// grouping map file

void write_grouping_map(const GroupingMap& map, const Vocabulary& vocab,
                        const std::filesystem::path& path) {
  if (vocab.size() != map.assignment.size())
    throw Error(ErrorCode::RowCountMismatch, "vocabulary and map lengths differ");
  std::string out = "#semtok-grouping v1  method=" + std::string(grouping_method_name(map.method)) +
                    " seed=" + std::to_string(map.seed) + " k=" + std::to_string(map.k) + "\n";
  for (std::size_t i = 0; i < map.assignment.size(); ++i) {
    const auto& tok = vocab.tokens()[i];
    if (tok.find_first_of("\t\r\n") != std::string::npos)
      throw Error(ErrorCode::InvalidToken, "token at id " + std::to_string(i) +
                                               " contains a tab or newline");
    out += std::to_string(i);
    out.push_back('\t');
    out += std::to_string(map.assignment[i]);
    out.push_back('\t');
    out += tok;
    out.push_back('\n');
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot open for writing " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

LoadedGroupingMap read_grouping_map(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || !line.starts_with("#semtok-grouping v1  "))
    throw Error(ErrorCode::MalformedHeader, path.string() + ": not a semtok grouping file");

  LoadedGroupingMap loaded;
  GroupingMap& map = loaded.map;
  std::istringstream header(line.substr(std::string_view("#semtok-grouping v1  ").size()));
  std::string field;
  while (header >> field) {
    auto eq = field.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::MalformedHeader, field);
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "method") {
      map.method = parse_grouping_method(value);
    } else if (key == "seed") {
      map.seed = std::stoull(value);
    } else if (key == "k") {
      map.k = std::stoull(value);
    }
  }

  std::size_t lineno = 1;
  std::size_t max_group = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    std::size_t id = 0, group = 0;
    if (t2 == std::string::npos ||
        std::from_chars(line.data(), line.data() + t1, id).ptr != line.data() + t1 ||
        std::from_chars(line.data() + t1 + 1, line.data() + t2, group).ptr != line.data() + t2 ||
        id != map.assignment.size())
      throw Error(ErrorCode::MalformedLine, path.string() + ":" + std::to_string(lineno));
    map.assignment.push_back(static_cast<TokenId>(group));
    loaded.tokens.push_back(line.substr(t2 + 1));
    max_group = std::max(max_group, group + 1);
  }
  map.num_semantic = max_group;
  auto issues = validate_map(map);
  if (!issues.empty()) throw Error(ErrorCode::MalformedLine, path.string() + ": " + issues.front());
  return loaded;
}

}  // namespace semtok
