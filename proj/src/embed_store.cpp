#include "semtok/embed_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "semtok/error.hpp"

namespace semtok {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::string continuation_prefix)
    : tokens_(std::move(tokens)), prefix_(std::move(continuation_prefix)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    index_.emplace(tokens_[i], static_cast<TokenId>(i));  // keeps first occurrence
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::is_special(TokenId id) const noexcept {
  return std::binary_search(specials_.begin(), specials_.end(), id);
}

void Vocabulary::set_specials(std::vector<TokenId> ids, std::optional<TokenId> unk) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  specials_ = std::move(ids);
  unk_ = unk;
}

void Vocabulary::mark_specials(std::span<const std::string> names, std::string_view unk_name) {
  std::vector<TokenId> ids;
  for (const auto& name : names)
    if (auto id = find(name)) ids.push_back(*id);
  auto unk = find(unk_name);
  if (unk) ids.push_back(*unk);
  set_specials(std::move(ids), unk);
}

// ---------------------------------------------------------------------------
// EmbeddingMatrix

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "matrix data holds " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(rows_) + "x" + std::to_string(dim_));
}

bool bitwise_equal(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept {
  if (a.rows() != b.rows() || a.dim() != b.dim()) return false;
  auto va = a.values();
  auto vb = b.values();
  return va.empty() || std::memcmp(va.data(), vb.data(), va.size_bytes()) == 0;
}

// ---------------------------------------------------------------------------
// formats

EmbeddingFormat parse_embedding_format(std::string_view name) {
  if (name == "w2v_text" || name == "text") return EmbeddingFormat::W2vText;
  if (name == "semb_binary" || name == "semb") return EmbeddingFormat::SembBinary;
  throw Error(ErrorCode::ConfigError, "unknown embedding format '" + std::string(name) + "'");
}

std::string_view embedding_format_name(EmbeddingFormat format) noexcept {
  return format == EmbeddingFormat::W2vText ? "w2v_text" : "semb_binary";
}

fs::path vocab_sidecar_path(const fs::path& embedding_path) {
  fs::path p = embedding_path;
  p += ".vocab";
  return p;
}

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
  return content;
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

// Splits on runs of spaces/tabs; empty fields are dropped.
std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

float parse_float_field(std::string_view s, std::size_t row) {
  float v = 0.0f;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ptr != s.data() + s.size() || (ec != std::errc() && ec != std::errc::result_out_of_range))
    throw Error(ErrorCode::MalformedLine,
                "row " + std::to_string(row) + ": cannot parse '" + std::string(s) + "'");
  if (ec == std::errc::result_out_of_range || !std::isfinite(v))
    throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(row));
  return v;
}

void append_float(std::string& out, float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const std::string& in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

void check_rows_finite(const EmbeddingMatrix& emb) {
  for (std::size_t i = 0; i < emb.rows(); ++i)
    for (float v : emb.row(i))
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(i));
}

Vocabulary finish_vocab(std::vector<std::string> tokens, const LoadOptions& options) {
  Vocabulary vocab(std::move(tokens), options.continuation_prefix);
  for (const auto& issue : validate(vocab, EmbeddingMatrix(vocab.size(), 0)))
    if (issue.kind == IssueKind::DuplicateToken)
      throw Error(ErrorCode::DuplicateToken, issue.describe());
  vocab.mark_specials(options.special_tokens, options.unk_token);
  return vocab;
}

LoadedEmbeddings load_text(const fs::path& path, const LoadOptions& options) {
  const std::string content = read_file(path);
  std::string_view rest = content;
  auto next_line = [&rest]() {
    auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  auto header = split_fields(next_line());
  std::size_t rows = 0, dim = 0;
  if (header.size() != 2 || !parse_uint(header[0], rows) || !parse_uint(header[1], dim))
    throw Error(ErrorCode::MalformedHeader, path.string() + ": expected \"N D\"");
  if (rows == 0) throw Error(ErrorCode::EmptyVocabulary, path.string());
  if (dim == 0) throw Error(ErrorCode::MalformedHeader, path.string() + ": zero dimension");

  std::vector<std::string> tokens;
  tokens.reserve(rows);
  std::vector<float> data;
  data.reserve(rows * dim);
  while (!rest.empty()) {
    auto line = next_line();
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    const std::size_t row = tokens.size();
    if (row >= rows)
      throw Error(ErrorCode::RowCountMismatch,
                  "header declares " + std::to_string(rows) + " rows, file has more");
    if (fields.size() != dim + 1)
      throw Error(ErrorCode::DimensionMismatch,
                  "row " + std::to_string(row) + " has " + std::to_string(fields.size() - 1) +
                      " values, expected " + std::to_string(dim));
    tokens.emplace_back(fields[0]);
    for (std::size_t j = 1; j <= dim; ++j) data.push_back(parse_float_field(fields[j], row));
  }
  if (tokens.size() != rows)
    throw Error(ErrorCode::RowCountMismatch, "header declares " + std::to_string(rows) +
                                                 " rows, file has " + std::to_string(tokens.size()));

  Vocabulary vocab = finish_vocab(std::move(tokens), options);
  return {std::move(vocab), EmbeddingMatrix(rows, dim, std::move(data))};
}

LoadedEmbeddings load_binary(const fs::path& path, const LoadOptions& options) {
  const std::string content = read_file(path);
  if (content.size() < kSembHeaderBytes || content.compare(0, 4, "SEMB") != 0)
    throw Error(ErrorCode::MalformedHeader, path.string() + ": missing SEMB magic");
  const auto version = static_cast<std::uint32_t>(get_le(content, 4, 4));
  if (version != kSembVersion)
    throw Error(ErrorCode::MalformedHeader, "unsupported semb version " + std::to_string(version));
  const std::uint64_t rows = get_le(content, 8, 8);
  const auto dim = static_cast<std::uint32_t>(get_le(content, 16, 4));
  if (rows == 0) throw Error(ErrorCode::EmptyVocabulary, path.string());
  if (dim == 0) throw Error(ErrorCode::MalformedHeader, path.string() + ": zero dimension");
  const std::uint64_t payload = content.size() - kSembHeaderBytes;
  if (rows > payload / 4 / dim || rows * dim * 4 != payload)
    throw Error(ErrorCode::DimensionMismatch,
                path.string() + ": payload of " + std::to_string(payload) + " bytes does not hold " +
                    std::to_string(rows) + "x" + std::to_string(dim) + " f32 values");

  std::vector<float> data(rows * dim);
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = std::bit_cast<float>(
        static_cast<std::uint32_t>(get_le(content, kSembHeaderBytes + 4 * i, 4)));
  EmbeddingMatrix matrix(rows, dim, std::move(data));
  check_rows_finite(matrix);

  const std::string vocab_text = read_file(vocab_sidecar_path(path));
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < vocab_text.size()) {
    auto nl = vocab_text.find('\n', start);
    if (nl == std::string::npos) nl = vocab_text.size();
    tokens.emplace_back(vocab_text, start, nl - start);
    if (tokens.back().empty())
      throw Error(ErrorCode::InvalidToken, "empty token at id " + std::to_string(tokens.size() - 1));
    start = nl + 1;
  }
  if (tokens.size() != rows)
    throw Error(ErrorCode::RowCountMismatch, "vocabulary has " + std::to_string(tokens.size()) +
                                                 " tokens, matrix has " + std::to_string(rows) +
                                                 " rows");
  Vocabulary vocab = finish_vocab(std::move(tokens), options);
  return {std::move(vocab), std::move(matrix)};
}

}  // namespace

LoadedEmbeddings load_embeddings(const fs::path& path, EmbeddingFormat format,
                                 const LoadOptions& options) {
  return format == EmbeddingFormat::W2vText ? load_text(path, options)
                                            : load_binary(path, options);
}

void save_embeddings(const Vocabulary& vocab, const EmbeddingMatrix& emb, const fs::path& path,
                     EmbeddingFormat format) {
  if (vocab.empty()) throw Error(ErrorCode::EmptyVocabulary, path.string());
  if (vocab.size() != emb.rows())
    throw Error(ErrorCode::RowCountMismatch, std::to_string(vocab.size()) + " tokens vs " +
                                                 std::to_string(emb.rows()) + " rows");
  check_rows_finite(emb);

  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto& tok = vocab.tokens()[i];
    const bool bad = format == EmbeddingFormat::W2vText
                         ? std::any_of(tok.begin(), tok.end(), is_ascii_space)
                         : tok.find_first_of("\r\n") != std::string::npos;
    if (tok.empty() || bad)
      throw Error(ErrorCode::InvalidToken, "token at id " + std::to_string(i) +
                                               " is empty or contains a field separator");
  }

  std::string out;
  if (format == EmbeddingFormat::W2vText) {
    out.reserve(emb.rows() * (emb.dim() * 12 + 16));
    out += std::to_string(emb.rows()) + " " + std::to_string(emb.dim()) + "\n";
    for (std::size_t i = 0; i < emb.rows(); ++i) {
      out += vocab.tokens()[i];
      for (float v : emb.row(i)) {
        out.push_back(' ');
        append_float(out, v);
      }
      out.push_back('\n');
    }
    write_file(path, out);
    return;
  }

  if (emb.dim() > UINT32_MAX) throw Error(ErrorCode::OutOfRange, "dimension exceeds u32");
  out.reserve(kSembHeaderBytes + emb.values().size() * 4);
  out += "SEMB";
  put_u32(out, kSembVersion);
  put_u64(out, emb.rows());
  put_u32(out, static_cast<std::uint32_t>(emb.dim()));
  for (float v : emb.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  write_file(path, out);

  std::string vocab_text;
  for (const auto& tok : vocab.tokens()) {
    vocab_text += tok;
    vocab_text.push_back('\n');
  }
  write_file(vocab_sidecar_path(path), vocab_text);
}

// ---------------------------------------------------------------------------
// validation

std::string ValidationIssue::describe() const {
  switch (kind) {
    case IssueKind::RowCountMismatch:
      return "RowCountMismatch{" + std::to_string(a) + "," + std::to_string(b) + "}";
    case IssueKind::DuplicateToken:
      return "DuplicateToken{" + std::to_string(a) + "," + std::to_string(b) + "}";
    case IssueKind::NonFiniteValue:
      return "NonFiniteValue{row=" + std::to_string(a) + ",col=" + std::to_string(b) + "}";
    case IssueKind::EmptyToken:
      return "EmptyToken{" + std::to_string(a) + "}";
    case IssueKind::SpecialOutOfRange:
      return "SpecialOutOfRange{" + std::to_string(a) + "}";
    case IssueKind::UnkNotSpecial:
      return "UnkNotSpecial{" + std::to_string(a) + "}";
  }
  return "?";
}

ValidationReport validate(const Vocabulary& vocab, const EmbeddingMatrix& emb) {
  ValidationReport report;
  if (vocab.size() != emb.rows())
    report.push_back({IssueKind::RowCountMismatch, vocab.size(), emb.rows()});

  std::unordered_map<std::string_view, std::size_t> first_seen;
  first_seen.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto& tok = vocab.tokens()[i];
    if (tok.empty()) report.push_back({IssueKind::EmptyToken, i, 0});
    auto [it, inserted] = first_seen.emplace(tok, i);
    if (!inserted) report.push_back({IssueKind::DuplicateToken, it->second, i});
  }

  for (TokenId id : vocab.special_ids())
    if (id >= vocab.size()) report.push_back({IssueKind::SpecialOutOfRange, id, 0});
  if (auto unk = vocab.unk_id()) {
    if (*unk >= vocab.size())
      report.push_back({IssueKind::SpecialOutOfRange, *unk, 0});
    else if (!vocab.is_special(*unk))
      report.push_back({IssueKind::UnkNotSpecial, *unk, 0});
  }

  for (std::size_t i = 0; i < emb.rows(); ++i) {
    auto row = emb.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (!std::isfinite(row[j])) report.push_back({IssueKind::NonFiniteValue, i, j});
  }
  return report;
}

}  // namespace semtok
