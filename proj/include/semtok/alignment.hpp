#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semtok/embed_store.hpp"
#include "semtok/tokenizer.hpp"

namespace semtok {

// One cross-lingual translation pair from a bilingual dictionary.
struct LexiconPair {
  std::string word_a;
  std::string lang_a;
  std::string word_b;
  std::string lang_b;
  std::string source;

  friend bool operator==(const LexiconPair&, const LexiconPair&) = default;
};

// All words listed under one concept, across languages.
struct ConceptSet {
  std::string concept_id;
  std::vector<std::pair<std::string, std::string>> entries;  // (lang, word)
};

enum class LexiconFormat { PairTsv, ConceptTsv };
LexiconFormat parse_lexicon_format(std::string_view name);

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<LexiconPair> pairs;
  std::vector<ConceptSet> concepts;
  std::vector<LineError> skipped;  // lenient mode only
};

// pair_tsv:    lang_a<TAB>word_a<TAB>lang_b<TAB>word_b
// concept_tsv: concept_id<TAB>lang<TAB>word
// Records come back in file order. Concept lines sharing an id are gathered
// into one set, ordered by first appearance; repeated (lang, word) entries
// inside a set are collapsed. Empty lines and lines starting with '#' are
// ignored. `source` defaults to the file stem.
IngestResult ingest_lexicon(const std::filesystem::path& path, LexiconFormat format,
                            bool strict = true, std::string source = {});

// Each set of m entries contributes its C(m,2) unordered pairs, in entry
// order, tagged with the concept id.
std::vector<LexiconPair> expand_concepts(std::span<const ConceptSet> sets);

// Collapses repeated pairs, treating (a,b) and (b,a) as the same pair.
std::vector<LexiconPair> dedup_pairs(std::span<const LexiconPair> pairs);

struct IdPair {
  TokenId a = 0;
  TokenId b = 0;
  friend bool operator==(const IdPair&, const IdPair&) = default;
  friend auto operator<=>(const IdPair&, const IdPair&) = default;
};

enum class DropReason { MultiPiece, Unknown, InvalidWord };

struct DropReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t multi_piece = 0;   // a word segments into more than one subword
  std::size_t unknown = 0;       // a word maps to the unk token
  std::size_t invalid_word = 0;  // empty or contains whitespace
  std::size_t covered_subwords = 0;
  std::size_t vocab_size = 0;

  // Fraction of the vocabulary that appears in at least one kept pair.
  double coverage() const noexcept {
    return vocab_size == 0 ? 0.0
                           : static_cast<double>(covered_subwords) /
                                 static_cast<double>(vocab_size);
  }
  // e.g. "45.4%"
  std::string coverage_percent() const;
  std::string summary() const;
};

struct FilterResult {
  std::vector<IdPair> kept;
  DropReport report;
};

// Keeps a pair iff both words are single subwords; the first failing word
// decides the drop reason.
FilterResult filter_single_subword(std::span<const LexiconPair> pairs, const Vocabulary& vocab,
                                   const TokenizerOptions& options = {});

// Mutual nearest neighbours by cosine among the candidates: (i, j) with i < j
// is emitted iff each is the other's nearest candidate. Ties go to the lower id.
std::vector<IdPair> mine_roundtrip(const EmbeddingMatrix& emb,
                                   std::span<const TokenId> candidate_ids);

struct ClsaConfig {
  double temperature = 0.05;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t epochs = 5;
  std::size_t max_steps = 0;  // 0 = no cap
  std::uint64_t seed = 0;
  bool symmetric_loss = true;
};

// Loss and gradient of InfoNCE over cosine similarities with in-batch
// negatives. Gradient rows are keyed by token id and accumulate over every
// batch position in which the id occurs.
struct ClsaLoss {
  double value = 0.0;
  std::map<TokenId, std::vector<double>> gradient;
};

ClsaLoss clsa_loss(std::span<const IdPair> batch, const EmbeddingMatrix& emb,
                   double temperature, bool symmetric = true);

// Same computation over an f64 row-major table, used as the reference for
// finite-difference checks.
ClsaLoss clsa_loss(std::span<const IdPair> batch, std::span<const double> table,
                   std::size_t dim, double temperature, bool symmetric = true);

struct ClsaTrace {
  std::size_t step = 0;
  double loss = 0.0;
};

struct ClsaResult {
  EmbeddingMatrix embeddings;
  std::vector<ClsaTrace> trace;
};

// Plain SGD on clsa_loss over batches reshuffled every epoch. A trailing
// batch with fewer than two pairs is dropped. Only rows referenced by pairs
// can change.
ClsaResult train_clsa(const EmbeddingMatrix& emb, std::span<const IdPair> pairs,
                      const ClsaConfig& cfg);

void write_loss_trace(std::span<const ClsaTrace> trace, const std::filesystem::path& path);
void write_id_pairs(std::span<const IdPair> pairs, const Vocabulary& vocab,
                    const std::filesystem::path& path);

}  // namespace semtok
