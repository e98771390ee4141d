#include "semtok/inspect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semtok/error.hpp"
#include "semtok/rng.hpp"

namespace semtok {

namespace {

ClusterReport make_report(TokenId g, const std::vector<TokenId>& ids, const Vocabulary& vocab,
                          const EmbeddingMatrix* emb) {
  ClusterReport report;
  report.semantic_id = g;
  report.size = ids.size();
  for (TokenId id : ids) report.members.emplace_back(id, vocab.token(id));
  if (ids.size() == 1) {
    report.label = vocab.token(ids[0]);
    return report;
  }
  if (!emb || ids.empty()) return report;

  const std::size_t dim = emb->dim();
  std::vector<double> mean(dim, 0.0);
  for (TokenId id : ids) {
    auto row = emb->row(id);
    for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
  }
  double mean_norm = 0.0;
  for (double& v : mean) {
    v /= static_cast<double>(ids.size());
    mean_norm += v * v;
  }
  mean_norm = std::sqrt(mean_norm);

  TokenId best_id = ids[0];
  if (mean_norm > 0.0) {
    double best = -std::numeric_limits<double>::infinity();
    for (TokenId id : ids) {
      auto row = emb->row(id);
      double d = 0.0, n = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        d += row[j] * mean[j];
        n += static_cast<double>(row[j]) * row[j];
      }
      const double cos = n > 0.0 ? d / (std::sqrt(n) * mean_norm) : -2.0;
      if (cos > best) {
        best = cos;
        best_id = id;
      }
    }
  }
  report.label = vocab.token(best_id);
  return report;
}

void check_lengths(const GroupingMap& map, const Vocabulary& vocab, const EmbeddingMatrix* emb) {
  if (map.assignment.size() != vocab.size())
    throw Error(ErrorCode::RowCountMismatch, "map and vocabulary lengths differ");
  if (emb && emb->rows() != vocab.size())
    throw Error(ErrorCode::RowCountMismatch, "embedding rows and vocabulary size differ");
}

}  // namespace

ClusterReport cluster_members(const GroupingMap& map, const Vocabulary& vocab, TokenId g,
                              const EmbeddingMatrix* emb) {
  check_lengths(map, vocab, emb);
  if (g >= map.num_semantic)
    throw Error(ErrorCode::OutOfRange, "semantic id " + std::to_string(g) + " >= " +
                                           std::to_string(map.num_semantic));
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < map.assignment.size(); ++i)
    if (map.assignment[i] == g) ids.push_back(static_cast<TokenId>(i));
  return make_report(g, ids, vocab, emb);
}

std::vector<ClusterReport> all_cluster_reports(const GroupingMap& map, const Vocabulary& vocab,
                                               const EmbeddingMatrix* emb) {
  check_lengths(map, vocab, emb);
  auto members = group_members(map);
  std::vector<ClusterReport> out;
  out.reserve(members.size());
  for (std::size_t g = 0; g < members.size(); ++g)
    out.push_back(make_report(static_cast<TokenId>(g), members[g], vocab, emb));
  return out;
}

TokenLookup find_token(const GroupingMap& map, const Vocabulary& vocab, std::string_view token,
                       const EmbeddingMatrix* emb) {
  auto id = vocab.find(token);
  if (!id) throw Error(ErrorCode::UnknownToken, "'" + std::string(token) + "'");
  if (*id >= map.assignment.size())
    throw Error(ErrorCode::RowCountMismatch, "map shorter than vocabulary");
  const TokenId g = map.assignment[*id];
  return {*id, g, cluster_members(map, vocab, g, emb)};
}

ClusterStats cluster_stats(const GroupingMap& map) {
  ClusterStats stats;
  std::vector<std::size_t> sizes(map.num_semantic, 0);
  for (TokenId g : map.assignment) {
    if (g >= sizes.size()) throw Error(ErrorCode::OutOfRange, "semantic id out of range");
    ++sizes[g];
  }
  for (std::size_t s : sizes) {
    if (s == 0) continue;
    ++stats.size_histogram[s];
    ++stats.groups;
    stats.max_size = std::max(stats.max_size, s);
    if (s == 1) ++stats.singletons;
  }
  stats.ratio = grouping_ratio(map);
  return stats;
}

double embedding_param_ratio(std::size_t vocab_size, std::size_t full_dim, std::size_t dim,
                             double grouping_ratio) {
  if (vocab_size == 0 || full_dim == 0 || dim == 0 || dim > full_dim)
    throw Error(ErrorCode::InvalidArgument, "need positive sizes with d <= D");
  if (!(grouping_ratio > 0.0) || grouping_ratio > 1.0)
    throw Error(ErrorCode::InvalidArgument, "grouping ratio must lie in (0, 1]");
  // (r_G |V| d) / (|V| D); the |V| cancels
  return grouping_ratio * static_cast<double>(dim) / static_cast<double>(full_dim);
}

std::uint64_t model_param_count(std::uint64_t semantic_vocab, std::uint64_t dim,
                                std::uint64_t non_embedding_params) {
  return semantic_vocab * dim + non_embedding_params;
}

// ---------------------------------------------------------------------------
// correlation

namespace {

struct Centered {
  std::vector<double> x, y;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
};

Centered center(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw Error(ErrorCode::DimensionMismatch, "xs and ys differ in length");
  if (xs.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 observations");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  Centered c;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    c.x.push_back(xs[i] - mx);
    c.y.push_back(ys[i] - my);
    c.sxx += c.x.back() * c.x.back();
    c.syy += c.y.back() * c.y.back();
    c.sxy += c.x.back() * c.y.back();
  }
  if (c.sxx == 0.0 || c.syy == 0.0)
    throw Error(ErrorCode::NumericFailure, "zero variance");
  return c;
}

// Continued fraction for I_x(a, b), Numerical-Recipes style.
double beta_cf(double a, double b, double x) {
  constexpr double kEps = 1e-12;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorCode::NumericFailure, "incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "a, b must be > 0");
  if (x < 0.0 || x > 1.0) throw Error(ErrorCode::OutOfRange, "x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_upper_tail(double t, double nu) {
  if (!(nu > 0.0)) throw Error(ErrorCode::InvalidArgument, "degrees of freedom must be > 0");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double tail = 0.5 * regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
  return t >= 0.0 ? tail : 1.0 - tail;
}

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys) {
  const Centered c = center(xs, ys);
  PearsonResult r;
  r.n = xs.size();
  r.rho = std::clamp(c.sxy / std::sqrt(c.sxx * c.syy), -1.0, 1.0);
  const double nu = static_cast<double>(r.n - 2);
  const double denom = 1.0 - r.rho * r.rho;
  r.t = denom <= 0.0 ? std::copysign(std::numeric_limits<double>::infinity(), r.rho)
                     : r.rho * std::sqrt(nu / denom);
  r.p_one_tail = student_t_upper_tail(r.t, nu);
  return r;
}

namespace {

PermutationResult finish(std::size_t hits, std::size_t total) {
  PermutationResult r;
  r.permutations = total;
  r.p = static_cast<double>(hits) / static_cast<double>(total);
  r.standard_error = std::sqrt(r.p * (1.0 - r.p) / static_cast<double>(total));
  return r;
}

}  // namespace

PermutationResult permutation_p_exhaustive(std::span<const double> xs, std::span<const double> ys) {
  const Centered c = center(xs, ys);
  const std::size_t n = xs.size();
  if (n > 12) throw Error(ErrorCode::OutOfRange, "exhaustive permutation limited to n <= 12");
  // rho is monotone in sum x_i y_pi(i) for fixed marginals
  const double threshold = c.sxy - 1e-12 * std::sqrt(c.sxx * c.syy);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t hits = 0, total = 0;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += c.x[i] * c.y[perm[i]];
    if (s >= threshold) ++hits;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return finish(hits, total);
}

PermutationResult permutation_p_sampled(std::span<const double> xs, std::span<const double> ys,
                                        std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  const Centered c = center(xs, ys);
  const double threshold = c.sxy - 1e-12 * std::sqrt(c.sxx * c.syy);
  std::vector<double> y = c.y;
  Rng rng(seed);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    rng.shuffle(std::span<double>(y));
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += c.x[i] * y[i];
    if (s >= threshold) ++hits;
  }
  return finish(hits, samples);
}

}  // namespace semtok
