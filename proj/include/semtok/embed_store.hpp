#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semtok {

using TokenId = std::uint32_t;

// Special tokens recognised by default when an embedding file is loaded.
// Only the ones actually present in the file are marked.
inline const std::vector<std::string> kDefaultSpecialTokens = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
inline constexpr std::string_view kDefaultUnkToken = "[UNK]";
inline constexpr std::string_view kDefaultContinuationPrefix = "##";

namespace detail {
struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};
}  // namespace detail

// Ordered subword list; the id of a token is its position. Construction does
// not reject duplicates so that validate() can report them; the loaders do.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens,
                      std::string continuation_prefix = std::string(kDefaultContinuationPrefix));

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& continuation_prefix() const noexcept { return prefix_; }

  // First id carrying this exact string.
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  // Sorted ascending, unique.
  const std::vector<TokenId>& special_ids() const noexcept { return specials_; }
  bool is_special(TokenId id) const noexcept;
  std::optional<TokenId> unk_id() const noexcept { return unk_; }

  // Replaces the special set verbatim (no implicit unk insertion).
  void set_specials(std::vector<TokenId> ids, std::optional<TokenId> unk);

  // Marks every listed token that is present; the unk token, when present,
  // is always added to the special set.
  void mark_specials(std::span<const std::string> names,
                     std::string_view unk_name = kDefaultUnkToken);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.prefix_ == b.prefix_ &&
           a.specials_ == b.specials_ && a.unk_ == b.unk_;
  }

 private:
  std::vector<std::string> tokens_;
  std::string prefix_ = std::string(kDefaultContinuationPrefix);
  std::unordered_map<std::string, TokenId, detail::StringHash, std::equal_to<>> index_;
  std::vector<TokenId> specials_;
  std::optional<TokenId> unk_;
};

// Row-major |V| x D matrix of f32 values.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim);
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  float at(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  float& at(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }

  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

// Same shape and identical bit patterns (distinguishes -0.0 from 0.0).
bool bitwise_equal(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept;

enum class EmbeddingFormat { W2vText, SembBinary };

EmbeddingFormat parse_embedding_format(std::string_view name);
std::string_view embedding_format_name(EmbeddingFormat format) noexcept;

struct LoadOptions {
  std::vector<std::string> special_tokens = kDefaultSpecialTokens;
  std::string unk_token = std::string(kDefaultUnkToken);
  std::string continuation_prefix = std::string(kDefaultContinuationPrefix);
};

struct LoadedEmbeddings {
  Vocabulary vocab;
  EmbeddingMatrix matrix;
};

LoadedEmbeddings load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                                 const LoadOptions& options = {});

void save_embeddings(const Vocabulary& vocab, const EmbeddingMatrix& emb,
                     const std::filesystem::path& path, EmbeddingFormat format);

// Sidecar holding the vocabulary of a `semb` file: "<path>.vocab".
std::filesystem::path vocab_sidecar_path(const std::filesystem::path& embedding_path);

inline constexpr std::size_t kSembHeaderBytes = 4 + 4 + 8 + 4;
inline constexpr std::uint32_t kSembVersion = 1;

enum class IssueKind {
  RowCountMismatch,   // a = |V|, b = matrix rows
  DuplicateToken,     // a = first id, b = repeated id
  NonFiniteValue,     // a = row, b = column
  EmptyToken,         // a = id
  SpecialOutOfRange,  // a = id
  UnkNotSpecial,      // a = unk id
};

struct ValidationIssue {
  IssueKind kind;
  std::size_t a = 0;
  std::size_t b = 0;

  std::string describe() const;
  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

using ValidationReport = std::vector<ValidationIssue>;

// Lists every violated invariant of the pair; an empty report means valid.
ValidationReport validate(const Vocabulary& vocab, const EmbeddingMatrix& emb);

}  // namespace semtok
