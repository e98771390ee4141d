#include "semtok/alignment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "semtok/error.hpp"
#include "semtok/rng.hpp"

namespace semtok {

namespace fs = std::filesystem;

LexiconFormat parse_lexicon_format(std::string_view name) {
  if (name == "pair_tsv" || name == "pairs") return LexiconFormat::PairTsv;
  if (name == "concept_tsv" || name == "concepts") return LexiconFormat::ConceptTsv;
  throw Error(ErrorCode::ConfigError, "unknown lexicon format '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ingestion

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

bool valid_word(std::string_view w) { return !w.empty() && !contains_space(w); }

}  // namespace

IngestResult ingest_lexicon(const fs::path& path, LexiconFormat format, bool strict,
                            std::string source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  if (source.empty()) source = path.stem().string();

  IngestResult result;
  std::map<std::string, std::size_t, std::less<>> concept_index;
  std::vector<std::set<std::pair<std::string, std::string>>> seen_entries;

  auto reject = [&](std::size_t lineno, std::string message) {
    if (strict)
      throw Error(ErrorCode::MalformedLine,
                  path.string() + ":" + std::to_string(lineno) + ": " + message);
    result.skipped.push_back({lineno, std::move(message)});
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto f = split_tabs(line);

    if (format == LexiconFormat::PairTsv) {
      if (f.size() != 4) {
        reject(lineno, "expected 4 tab-separated fields, got " + std::to_string(f.size()));
        continue;
      }
      if (f[0].empty() || f[2].empty() || !valid_word(f[1]) || !valid_word(f[3])) {
        reject(lineno, "empty language or invalid word");
        continue;
      }
      result.pairs.push_back({std::string(f[1]), std::string(f[0]), std::string(f[3]),
                              std::string(f[2]), source});
    } else {
      if (f.size() != 3) {
        reject(lineno, "expected 3 tab-separated fields, got " + std::to_string(f.size()));
        continue;
      }
      if (f[0].empty() || f[1].empty() || !valid_word(f[2])) {
        reject(lineno, "empty concept/language or invalid word");
        continue;
      }
      auto [it, inserted] = concept_index.try_emplace(std::string(f[0]), result.concepts.size());
      if (inserted) {
        result.concepts.push_back({std::string(f[0]), {}});
        seen_entries.emplace_back();
      }
      std::pair<std::string, std::string> entry{std::string(f[1]), std::string(f[2])};
      if (seen_entries[it->second].insert(entry).second)
        result.concepts[it->second].entries.push_back(std::move(entry));
    }
  }
  return result;
}

std::vector<LexiconPair> expand_concepts(std::span<const ConceptSet> sets) {
  std::vector<LexiconPair> out;
  for (const auto& set : sets) {
    const auto& e = set.entries;
    for (std::size_t i = 0; i < e.size(); ++i)
      for (std::size_t j = i + 1; j < e.size(); ++j)
        out.push_back({e[i].second, e[i].first, e[j].second, e[j].first, set.concept_id});
  }
  return out;
}

std::vector<LexiconPair> dedup_pairs(std::span<const LexiconPair> pairs) {
  std::set<std::array<std::string, 4>> seen;
  std::vector<LexiconPair> out;
  for (const auto& p : pairs) {
    std::array<std::string, 4> key{p.lang_a, p.word_a, p.lang_b, p.word_b};
    if (std::tie(p.lang_b, p.word_b) < std::tie(p.lang_a, p.word_a))
      key = {p.lang_b, p.word_b, p.lang_a, p.word_a};
    if (seen.insert(std::move(key)).second) out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// single-subword filter

std::string DropReport::coverage_percent() const {
  return fmt::format("{:.1f}%", 100.0 * coverage());
}

std::string DropReport::summary() const {
  return fmt::format(
      "pairs: {} total, {} kept; dropped: {} multi-piece, {} unknown, {} invalid; "
      "subword coverage {} ({} of {})",
      total, kept, multi_piece, unknown, invalid_word, coverage_percent(), covered_subwords,
      vocab_size);
}

FilterResult filter_single_subword(std::span<const LexiconPair> pairs, const Vocabulary& vocab,
                                   const TokenizerOptions& options) {
  FilterResult result;
  auto& report = result.report;
  report.total = pairs.size();
  report.vocab_size = vocab.size();
  std::vector<char> covered(vocab.size(), 0);

  // nullopt plus the reason when `word` is not a single subword
  auto classify = [&](const std::string& word) -> std::pair<std::optional<TokenId>, DropReason> {
    if (!valid_word(word)) return {std::nullopt, DropReason::InvalidWord};
    auto enc = encode(word, vocab, options);
    if (enc.ids.size() == 1 && enc.ids[0] != *vocab.unk_id()) return {enc.ids[0], {}};
    return {std::nullopt, enc.ids.size() > 1 ? DropReason::MultiPiece : DropReason::Unknown};
  };

  for (const auto& p : pairs) {
    auto [a, why_a] = classify(p.word_a);
    std::optional<TokenId> b;
    DropReason why = why_a;
    if (a) std::tie(b, why) = classify(p.word_b);
    if (a && b) {
      result.kept.push_back({*a, *b});
      covered[*a] = covered[*b] = 1;
      continue;
    }
    switch (why) {
      case DropReason::MultiPiece: ++report.multi_piece; break;
      case DropReason::Unknown: ++report.unknown; break;
      case DropReason::InvalidWord: ++report.invalid_word; break;
    }
  }
  report.kept = result.kept.size();
  report.covered_subwords = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
  return result;
}

// ---------------------------------------------------------------------------
// round-trip mining

namespace {

std::vector<double> unit_row(std::span<const float> row, TokenId id) {
  double norm = 0.0;
  for (float v : row) norm += static_cast<double>(v) * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "row " + std::to_string(id) + " is all zero");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j] / norm;
  return out;
}

}  // namespace

std::vector<IdPair> mine_roundtrip(const EmbeddingMatrix& emb, std::span<const TokenId> candidate_ids) {
  std::vector<TokenId> ids(candidate_ids.begin(), candidate_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 candidates");
  for (TokenId id : ids)
    if (id >= emb.rows()) throw Error(ErrorCode::OutOfRange, "candidate " + std::to_string(id));

  const std::size_t n = ids.size(), dim = emb.dim();
  std::vector<std::vector<double>> unit;
  unit.reserve(n);
  for (TokenId id : ids) unit.push_back(unit_row(emb.row(id), id));

  // ids are ascending, so a strict '>' keeps the lowest id on ties
  std::vector<std::size_t> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += unit[i][d] * unit[j][d];
      if (s > best) {
        best = s;
        arg = j;
      }
    }
    nn[i] = arg;
  }

  std::vector<IdPair> out;
  for (std::size_t i = 0; i < n; ++i)
    if (nn[i] > i && nn[nn[i]] == i) out.push_back({ids[i], ids[nn[i]]});
  return out;
}

// ---------------------------------------------------------------------------
// InfoNCE

namespace {

struct RowGrads {
  double loss = 0.0;
  std::vector<std::vector<double>> left;   // d loss / d row(a_i)
  std::vector<std::vector<double>> right;  // d loss / d row(b_j)
};

// left[i], right[j] are raw rows; s_ij = cos(left_i, right_j).
RowGrads info_nce(const std::vector<std::vector<double>>& left,
                  const std::vector<std::vector<double>>& right, double tau, bool symmetric) {
  const std::size_t batch = left.size();
  const std::size_t dim = batch ? left[0].size() : 0;

  std::vector<double> norm_l(batch), norm_r(batch);
  std::vector<std::vector<double>> ul(batch, std::vector<double>(dim)),
      ur(batch, std::vector<double>(dim));
  for (std::size_t i = 0; i < batch; ++i) {
    double nl = 0.0, nr = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      nl += left[i][d] * left[i][d];
      nr += right[i][d] * right[i][d];
    }
    norm_l[i] = std::sqrt(nl);
    norm_r[i] = std::sqrt(nr);
    if (norm_l[i] == 0.0 || norm_r[i] == 0.0)
      throw Error(ErrorCode::ZeroVector, "batch position " + std::to_string(i) + " has a zero row");
    for (std::size_t d = 0; d < dim; ++d) {
      ul[i][d] = left[i][d] / norm_l[i];
      ur[i][d] = right[i][d] / norm_r[i];
    }
  }

  std::vector<double> sim(batch * batch);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < batch; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += ul[i][d] * ur[j][d];
      sim[i * batch + j] = s;
    }

  const double weight = symmetric ? 0.5 : 1.0;
  const double scale = weight / (tau * static_cast<double>(batch));
  std::vector<double> dsim(batch * batch, 0.0);  // d loss / d s_ij
  double fwd = 0.0, bwd = 0.0;

  // rows: a_i against every b_j
  for (std::size_t i = 0; i < batch; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < batch; ++j) m = std::max(m, sim[i * batch + j] / tau);
    double z = 0.0;
    for (std::size_t j = 0; j < batch; ++j) z += std::exp(sim[i * batch + j] / tau - m);
    const double lse = m + std::log(z);
    fwd += lse - sim[i * batch + i] / tau;
    for (std::size_t j = 0; j < batch; ++j) {
      const double p = std::exp(sim[i * batch + j] / tau - lse);
      dsim[i * batch + j] += scale * (p - (i == j ? 1.0 : 0.0));
    }
  }
  // columns: b_j against every a_i
  if (symmetric) {
    for (std::size_t j = 0; j < batch; ++j) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < batch; ++i) m = std::max(m, sim[i * batch + j] / tau);
      double z = 0.0;
      for (std::size_t i = 0; i < batch; ++i) z += std::exp(sim[i * batch + j] / tau - m);
      const double lse = m + std::log(z);
      bwd += lse - sim[j * batch + j] / tau;
      for (std::size_t i = 0; i < batch; ++i) {
        const double q = std::exp(sim[i * batch + j] / tau - lse);
        dsim[i * batch + j] += scale * (q - (i == j ? 1.0 : 0.0));
      }
    }
  }

  RowGrads out;
  const double n = static_cast<double>(batch);
  out.loss = symmetric ? weight * (fwd / n + bwd / n) : fwd / n;
  out.left.assign(batch, std::vector<double>(dim, 0.0));
  out.right.assign(batch, std::vector<double>(dim, 0.0));
  // d cos(u, v) / du = (v_hat - s * u_hat) / |u|
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < batch; ++j) {
      const double g = dsim[i * batch + j];
      if (g == 0.0) continue;
      const double s = sim[i * batch + j];
      const double gl = g / norm_l[i], gr = g / norm_r[j];
      for (std::size_t d = 0; d < dim; ++d) {
        out.left[i][d] += gl * (ur[j][d] - s * ul[i][d]);
        out.right[j][d] += gr * (ul[i][d] - s * ur[j][d]);
      }
    }
  return out;
}

template <typename RowFn>
ClsaLoss clsa_loss_impl(std::span<const IdPair> batch, std::size_t rows, std::size_t dim,
                        RowFn&& row_of, double temperature, bool symmetric) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  std::vector<std::vector<double>> left, right;
  left.reserve(batch.size());
  right.reserve(batch.size());
  for (const auto& p : batch) {
    if (p.a >= rows || p.b >= rows)
      throw Error(ErrorCode::OutOfRange, "batch id out of range: (" + std::to_string(p.a) + "," +
                                             std::to_string(p.b) + ")");
    left.push_back(row_of(p.a));
    right.push_back(row_of(p.b));
  }
  RowGrads g = info_nce(left, right, temperature, symmetric);

  ClsaLoss out;
  out.value = g.loss;
  auto add = [&](TokenId id, const std::vector<double>& grad) {
    auto [it, inserted] = out.gradient.try_emplace(id, dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) it->second[d] += grad[d];
  };
  for (std::size_t i = 0; i < batch.size(); ++i) {
    add(batch[i].a, g.left[i]);
    add(batch[i].b, g.right[i]);
  }
  return out;
}

}  // namespace

ClsaLoss clsa_loss(std::span<const IdPair> batch, const EmbeddingMatrix& emb, double temperature,
                   bool symmetric) {
  return clsa_loss_impl(
      batch, emb.rows(), emb.dim(),
      [&](TokenId id) {
        auto r = emb.row(id);
        return std::vector<double>(r.begin(), r.end());
      },
      temperature, symmetric);
}

ClsaLoss clsa_loss(std::span<const IdPair> batch, std::span<const double> table, std::size_t dim,
                   double temperature, bool symmetric) {
  if (dim == 0 || table.size() % dim != 0)
    throw Error(ErrorCode::DimensionMismatch, "table size is not a multiple of dim");
  return clsa_loss_impl(
      batch, table.size() / dim, dim,
      [&](TokenId id) {
        auto r = table.subspan(id * dim, dim);
        return std::vector<double>(r.begin(), r.end());
      },
      temperature, symmetric);
}

// ---------------------------------------------------------------------------
// training

ClsaResult train_clsa(const EmbeddingMatrix& emb, std::span<const IdPair> pairs,
                      const ClsaConfig& cfg) {
  if (!(cfg.temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  if (!(cfg.learning_rate > 0.0))
    throw Error(ErrorCode::InvalidArgument, "learning rate must be > 0");
  if (cfg.batch_size < 2) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 2");
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "no training pairs");
  for (const auto& p : pairs)
    if (p.a >= emb.rows() || p.b >= emb.rows())
      throw Error(ErrorCode::OutOfRange, "pair id out of range");

  ClsaResult result{emb, {}};
  EmbeddingMatrix& out = result.embeddings;
  Rng rng(cfg.seed);
  std::vector<IdPair> order(pairs.begin(), pairs.end());
  std::vector<IdPair> batch;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<IdPair>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (cfg.max_steps != 0 && step >= cfg.max_steps) return result;
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      if (len < 2) continue;
      batch.assign(order.begin() + start, order.begin() + start + len);
      ClsaLoss loss = clsa_loss(batch, out, cfg.temperature, cfg.symmetric_loss);
      if (!std::isfinite(loss.value))
        throw Error(ErrorCode::NumericFailure, "non-finite loss at step " + std::to_string(step));
      for (const auto& [id, grad] : loss.gradient) {
        auto row = out.row(id);
        for (std::size_t d = 0; d < row.size(); ++d)
          row[d] = static_cast<float>(static_cast<double>(row[d]) - cfg.learning_rate * grad[d]);
      }
      result.trace.push_back({step, loss.value});
      ++step;
    }
  }
  return result;
}

void write_loss_trace(std::span<const ClsaTrace> trace, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing " + path.string());
  out << "step,loss\n";
  char buf[64];
  for (const auto& t : trace) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, t.loss);
    out << t.step << ',' << std::string_view(buf, ptr - buf) << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void write_id_pairs(std::span<const IdPair> pairs, const Vocabulary& vocab, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing " + path.string());
  for (const auto& p : pairs)
    out << p.a << '\t' << p.b << '\t' << vocab.token(p.a) << '\t' << vocab.token(p.b) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace semtok
