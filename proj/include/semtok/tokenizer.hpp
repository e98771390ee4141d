#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "semtok/embed_store.hpp"

namespace semtok {

struct GroupingMap;

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct TokenizationResult {
  std::vector<TokenId> ids;
  std::vector<ByteSpan> offsets;  // one per id, into the original text
};

struct TokenizerOptions {
  bool lowercase = false;  // ASCII only
  std::size_t max_word_bytes = 100;
};

// Whitespace pre-tokenisation followed by greedy longest-match WordPiece
// segmentation. Non-initial pieces are looked up with the vocabulary's
// continuation prefix. A word without a full segmentation becomes a single
// unk id spanning the whole word. Throws MissingUnkToken if the vocabulary
// has no unk token and EmptyVocabulary if it is empty.
TokenizationResult encode(std::string_view text, const Vocabulary& vocab,
                          const TokenizerOptions& options = {});

// Id of `word` when it encodes to exactly one non-unk subword.
std::optional<TokenId> single_subword_id(std::string_view word, const Vocabulary& vocab,
                                         const TokenizerOptions& options = {});

bool is_single_subword(std::string_view word, const Vocabulary& vocab,
                       const TokenizerOptions& options = {});

// output[i] = map.assignment[ids[i]]
std::vector<TokenId> remap_ids(std::span<const TokenId> ids, const GroupingMap& map);

// True for the Unicode White_Space code points.
bool is_unicode_space(char32_t cp) noexcept;

// True if any code point of the UTF-8 text is whitespace.
bool contains_space(std::string_view text) noexcept;

}  // namespace semtok
