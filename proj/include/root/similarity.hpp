#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace root {

/// Line-oriented word list: one entry per line, `#` starts a comment,
/// surrounding whitespace ignored, entries case-folded.
class TermList {
 public:
  TermList() = default;
  static TermList parse(std::string_view text);
  static TermList fromFile(const std::string& path);

  bool contains(std::string_view term) const;
  const std::set<std::string, std::less<>>& terms() const noexcept { return terms_; }

 private:
  std::set<std::string, std::less<>> terms_;
};

/// Shipped English stopword list (requirement modals such as "shall",
/// "must", "should" are deliberately absent).
const TermList& defaultStopwords();

using TokenStream = std::vector<std::string>;

/// Splits on non-alphanumeric characters and at camelCase boundaries,
/// lowercases, and drops one-character tokens and stopwords. No stemming.
TokenStream tokenize(std::string_view text, const TermList& stopwords = defaultStopwords());

/// Every lowercased word piece in order, stopwords included. `breakBefore`
/// marks a sentence-level separator (punctuation other than `-`, `_`, `/`,
/// `'`) between this piece and the previous one.
struct WordPiece {
  std::string text;
  bool breakBefore = false;
};
std::vector<WordPiece> wordPieces(std::string_view text);

/// Sparse term -> weight vector, sorted by term.
using SparseVector = std::vector<std::pair<std::string, double>>;

struct Document {
  std::string id;
  std::string text;
};

struct ScoredDoc {
  std::string docId;
  double score = 0.0;
  bool operator==(const ScoredDoc&) const = default;
};

class CorpusIndex;

/// Throws Error(DuplicateDocId) on repeated ids.
CorpusIndex buildIndex(std::span<const Document> docs,
                       const TermList& stopwords = defaultStopwords());

/// Immutable TF-IDF index: tf = 1 + ln(count), idf = ln((N+1)/(df+1)) + 1,
/// document vectors L2-normalised.
class CorpusIndex {
 public:
  const std::vector<std::string>& docIds() const noexcept { return docIds_; }
  const std::map<std::string, std::size_t, std::less<>>& vocabulary() const noexcept {
    return df_;
  }
  std::size_t size() const noexcept { return docIds_.size(); }

  std::size_t documentFrequency(std::string_view term) const;
  /// Smoothed idf; also defined for out-of-vocabulary terms (df = 0).
  double idf(std::string_view term) const;
  const SparseVector& vector(std::string_view docId) const;  // throws UnknownId
  const TokenStream& tokens(std::string_view docId) const;

  /// Query-side vector using this corpus' idf. Out-of-vocabulary terms are
  /// ignored; the result is normalised (or empty).
  SparseVector vectorize(std::string_view text) const;
  SparseVector vectorize(const TokenStream& tokens) const;

  friend CorpusIndex buildIndex(std::span<const Document> docs, const TermList& stopwords);

 private:
  std::vector<std::string> docIds_;
  std::map<std::string, std::size_t, std::less<>> df_;
  std::map<std::string, SparseVector, std::less<>> vectors_;
  std::map<std::string, TokenStream, std::less<>> tokens_;
};

/// Weighted, L2-normalised tf-idf vector for a token stream.
SparseVector weightTerms(const TokenStream& tokens, const CorpusIndex& index);

/// Dot product of two normalised non-negative sparse vectors, clamped to [0, 1].
double cosine(const SparseVector& a, const SparseVector& b);

/// Ranked by descending score, ties by ascending doc id; min(k, N) entries.
std::vector<ScoredDoc> topK(const CorpusIndex& index, std::string_view query, std::size_t k);

inline constexpr std::size_t kEmbeddingDimension = 256;
inline constexpr std::uint64_t kFeatureHashSeed = 0x5eedf00dcafe1234ULL;

struct Embedding {
  std::vector<double> values;
  bool zero = false;  // input had no usable tokens; values are all 0
  bool operator==(const Embedding&) const = default;
};

/// Signed dot product of two embeddings of equal dimension.
double similarity(const Embedding& a, const Embedding& b);

/// Seeded 64-bit FNV-1a over the term's bytes. Platform independent.
std::uint64_t featureHash(std::string_view term, std::uint64_t seed = kFeatureHashSeed);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// One unit-norm vector per text (or a flagged zero vector).
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
  virtual std::size_t dimension() const = 0;
};

/// Default provider: tf-idf weights computed over the batch, feature-hashed
/// with a sign bit into `kEmbeddingDimension` buckets, then normalised.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const override { return kEmbeddingDimension; }
};

std::vector<Embedding> hashEmbed(std::span<const std::string> texts);

}  // namespace root
