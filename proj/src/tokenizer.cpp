#include "semtok/tokenizer.hpp"

#include <string>

#include "semtok/error.hpp"
#include "semtok/grouping.hpp"

namespace semtok {

bool is_unicode_space(char32_t cp) noexcept {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 ||
         cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

namespace {

// Length in bytes of the UTF-8 sequence starting at text[i]; malformed
// sequences count as one byte.
std::size_t utf8_length(std::string_view text, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = 0xFFFD;
    return 1;
  }
  if (i + len > text.size()) {
    cp = 0xFFFD;
    return 1;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

void segment_word(std::string_view text, std::size_t begin, std::size_t end,
                  const Vocabulary& vocab, const TokenizerOptions& options, TokenId unk,
                  TokenizationResult& out) {
  const std::string_view word = text.substr(begin, end - begin);
  if (word.size() > options.max_word_bytes) {
    out.ids.push_back(unk);
    out.offsets.push_back({begin, end});
    return;
  }

  std::string lowered;
  std::string_view source = word;
  if (options.lowercase) {
    lowered.assign(word);
    for (char& c : lowered)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    source = lowered;
  }

  // character boundaries (byte offsets within the word)
  std::vector<std::size_t> bounds{0};
  for (std::size_t i = 0; i < source.size();) {
    char32_t cp;
    i += utf8_length(source, i, cp);
    bounds.push_back(i);
  }

  const std::size_t mark_ids = out.ids.size();
  std::string candidate;
  std::size_t bi = 0;
  while (bi + 1 < bounds.size()) {
    bool matched = false;
    for (std::size_t bj = bounds.size() - 1; bj > bi; --bj) {
      const auto piece = source.substr(bounds[bi], bounds[bj] - bounds[bi]);
      candidate.clear();
      if (bi > 0) candidate += vocab.continuation_prefix();
      candidate += piece;
      if (auto id = vocab.find(candidate)) {
        out.ids.push_back(*id);
        out.offsets.push_back({begin + bounds[bi], begin + bounds[bj]});
        bi = bj;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out.ids.resize(mark_ids);
      out.offsets.resize(mark_ids);
      out.ids.push_back(unk);
      out.offsets.push_back({begin, end});
      return;
    }
  }
}

}  // namespace

bool contains_space(std::string_view text) noexcept {
  for (std::size_t i = 0; i < text.size();) {
    char32_t cp;
    i += utf8_length(text, i, cp);
    if (is_unicode_space(cp)) return true;
  }
  return false;
}

TokenizationResult encode(std::string_view text, const Vocabulary& vocab,
                          const TokenizerOptions& options) {
  if (vocab.empty()) throw Error(ErrorCode::EmptyVocabulary, "cannot tokenize");
  const auto unk = vocab.unk_id();
  if (!unk) throw Error(ErrorCode::MissingUnkToken, "vocabulary has no unk token");

  TokenizationResult out;
  std::size_t i = 0;
  std::size_t word_begin = std::string_view::npos;
  while (i < text.size()) {
    char32_t cp;
    const std::size_t len = utf8_length(text, i, cp);
    if (is_unicode_space(cp)) {
      if (word_begin != std::string_view::npos) {
        segment_word(text, word_begin, i, vocab, options, *unk, out);
        word_begin = std::string_view::npos;
      }
    } else if (word_begin == std::string_view::npos) {
      word_begin = i;
    }
    i += len;
  }
  if (word_begin != std::string_view::npos)
    segment_word(text, word_begin, text.size(), vocab, options, *unk, out);
  return out;
}

std::optional<TokenId> single_subword_id(std::string_view word, const Vocabulary& vocab,
                                         const TokenizerOptions& options) {
  if (word.empty()) return std::nullopt;
  auto result = encode(word, vocab, options);
  if (result.ids.size() != 1 || result.ids[0] == *vocab.unk_id()) return std::nullopt;
  // a surrounding-whitespace word would still encode to one piece; reject it
  if (result.offsets[0].begin != 0 || result.offsets[0].end != word.size()) return std::nullopt;
  return result.ids[0];
}

bool is_single_subword(std::string_view word, const Vocabulary& vocab,
                       const TokenizerOptions& options) {
  return single_subword_id(word, vocab, options).has_value();
}

std::vector<TokenId> remap_ids(std::span<const TokenId> ids, const GroupingMap& map) {
  std::vector<TokenId> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (id >= map.assignment.size())
      throw Error(ErrorCode::OutOfRange, "subword id " + std::to_string(id) +
                                             " outside map of length " +
                                             std::to_string(map.assignment.size()));
    out.push_back(map.assignment[id]);
  }
  return out;
}

}  // namespace semtok
