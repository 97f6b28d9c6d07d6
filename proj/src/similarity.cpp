#include "root/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "root/error.hpp"
#include "root/lexicons.hpp"
#include "root/model.hpp"

namespace root {

namespace {

bool isWordByte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
bool isUpper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
bool isLower(unsigned char c) { return c >= 'a' && c <= 'z'; }
bool isDigit(unsigned char c) { return c >= '0' && c <= '9'; }

bool isSentenceBreak(unsigned char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '(': case ')': case '[': case ']': case '{': case '}': case '"':
      return true;
    default:
      return false;
  }
}

// Splits one alphanumeric run at camelCase boundaries.
template <typename Emit>
void splitIdentifier(std::string_view run, Emit&& emit) {
  std::size_t start = 0;
  for (std::size_t i = 1; i < run.size(); ++i) {
    const auto prev = static_cast<unsigned char>(run[i - 1]);
    const auto cur = static_cast<unsigned char>(run[i]);
    const bool lowerToUpper = (isLower(prev) || isDigit(prev)) && isUpper(cur);
    const bool acronymEnd = isUpper(prev) && isUpper(cur) && i + 1 < run.size() &&
                            isLower(static_cast<unsigned char>(run[i + 1]));
    if (lowerToUpper || acronymEnd) {
      emit(run.substr(start, i - start));
      start = i;
    }
  }
  emit(run.substr(start));
}

// Calls emit(piece, breakBefore) for every lowercased word piece.
template <typename Emit>
void scanPieces(std::string_view text, Emit&& emit) {
  std::size_t i = 0;
  bool pendingBreak = false;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (!isWordByte(c)) {
      pendingBreak = pendingBreak || isSentenceBreak(c);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && isWordByte(static_cast<unsigned char>(text[j]))) ++j;
    bool first = true;
    splitIdentifier(text.substr(i, j - i), [&](std::string_view piece) {
      emit(lowercase(piece), first && pendingBreak);
      first = false;
    });
    pendingBreak = false;
    i = j;
  }
}

}  // namespace

TermList TermList::parse(std::string_view text) {
  TermList list;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    list.terms_.insert(lowercase(std::string_view(line).substr(first, last - first + 1)));
  }
  return list;
}

TermList TermList::fromFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::PathNotFound, "cannot read word list '" + path + "'", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool TermList::contains(std::string_view term) const { return terms_.contains(term); }

const TermList& defaultStopwords() {
  static const TermList list = TermList::parse(data::kStopwords);
  return list;
}

TokenStream tokenize(std::string_view text, const TermList& stopwords) {
  TokenStream tokens;
  scanPieces(text, [&](std::string piece, bool) {
    if (piece.size() < 2 || stopwords.contains(piece)) return;
    tokens.push_back(std::move(piece));
  });
  return tokens;
}

std::vector<WordPiece> wordPieces(std::string_view text) {
  std::vector<WordPiece> pieces;
  scanPieces(text, [&](std::string piece, bool breakBefore) {
    pieces.push_back({std::move(piece), breakBefore});
  });
  return pieces;
}

namespace {

void normalize(SparseVector& v) {
  double norm = 0.0;
  for (const auto& [t, w] : v) norm += w * w;
  if (norm <= 0.0) {
    v.clear();
    return;
  }
  norm = std::sqrt(norm);
  for (auto& [t, w] : v) w /= norm;
}

}  // namespace

std::size_t CorpusIndex::documentFrequency(std::string_view term) const {
  auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

double CorpusIndex::idf(std::string_view term) const {
  const auto n = static_cast<double>(docIds_.size());
  const auto df = static_cast<double>(documentFrequency(term));
  return std::log((n + 1.0) / (df + 1.0)) + 1.0;
}

const SparseVector& CorpusIndex::vector(std::string_view docId) const {
  auto it = vectors_.find(docId);
  if (it == vectors_.end()) {
    throw Error(ErrorCode::UnknownId, "document '" + std::string(docId) + "' not indexed");
  }
  return it->second;
}

const TokenStream& CorpusIndex::tokens(std::string_view docId) const {
  auto it = tokens_.find(docId);
  if (it == tokens_.end()) {
    throw Error(ErrorCode::UnknownId, "document '" + std::string(docId) + "' not indexed");
  }
  return it->second;
}

SparseVector weightTerms(const TokenStream& tokens, const CorpusIndex& index) {
  std::map<std::string_view, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  SparseVector v;
  v.reserve(counts.size());
  for (const auto& [term, count] : counts) {
    if (index.documentFrequency(term) == 0) continue;
    const double tf = 1.0 + std::log(static_cast<double>(count));
    v.emplace_back(std::string(term), tf * index.idf(term));
  }
  normalize(v);
  return v;
}

SparseVector CorpusIndex::vectorize(const TokenStream& tokens) const {
  return weightTerms(tokens, *this);
}

SparseVector CorpusIndex::vectorize(std::string_view text) const {
  return weightTerms(tokenize(text), *this);
}

CorpusIndex buildIndex(std::span<const Document> docs, const TermList& stopwords) {
  CorpusIndex index;
  index.docIds_.reserve(docs.size());
  for (const auto& doc : docs) {
    if (index.tokens_.contains(doc.id)) {
      throw Error(ErrorCode::DuplicateDocId, "duplicate document id '" + doc.id + "'", doc.id);
    }
    auto tokens = tokenize(doc.text, stopwords);
    std::set<std::string_view> distinct(tokens.begin(), tokens.end());
    for (auto term : distinct) {
      auto it = index.df_.find(term);
      if (it == index.df_.end()) {
        index.df_.emplace(std::string(term), 1);
      } else {
        ++it->second;
      }
    }
    index.docIds_.push_back(doc.id);
    index.tokens_.emplace(doc.id, std::move(tokens));
  }
  for (const auto& [id, tokens] : index.tokens_) {
    index.vectors_.emplace(id, weightTerms(tokens, index));
  }
  return index;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot, 0.0, 1.0);
}

std::vector<ScoredDoc> topK(const CorpusIndex& index, std::string_view query, std::size_t k) {
  if (k == 0) return {};
  const auto q = index.vectorize(query);
  std::vector<ScoredDoc> scored;
  scored.reserve(index.size());
  for (const auto& id : index.docIds()) scored.push_back({id, cosine(q, index.vector(id))});
  const auto byRank = [](const ScoredDoc& x, const ScoredDoc& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.docId < y.docId;
  };
  const auto n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    byRank);
  scored.resize(n);
  return scored;
}

std::uint64_t featureHash(std::string_view term, std::uint64_t seed) {
  constexpr std::uint64_t kOffset = 14695981039346656037ULL;
  constexpr std::uint64_t kPrime = 1099511628211ULL;
  std::uint64_t h = kOffset;
  for (int shift = 0; shift < 64; shift += 8) {
    h ^= (seed >> shift) & 0xffU;
    h *= kPrime;
  }
  for (unsigned char c : term) {
    h ^= c;
    h *= kPrime;
  }
  // splitmix64 finaliser spreads the low bits used for bucketing.
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

double similarity(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorCode::InvalidParams, "embedding dimensions differ");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return dot;
}

std::vector<Embedding> HashEmbeddingProvider::embed(std::span<const std::string> texts) {
  return hashEmbed(texts);
}

std::vector<Embedding> hashEmbed(std::span<const std::string> texts) {
  std::vector<Document> docs;
  docs.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) docs.push_back({std::to_string(i), texts[i]});
  const auto index = buildIndex(docs);

  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& doc : docs) {
    Embedding e;
    e.values.assign(kEmbeddingDimension, 0.0);
    for (const auto& [term, weight] : index.vector(doc.id)) {
      const auto h = featureHash(term);
      const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
      e.values[h % kEmbeddingDimension] += sign * weight;
    }
    double norm = 0.0;
    for (double v : e.values) norm += v * v;
    if (norm <= 0.0) {
      e.zero = true;
    } else {
      norm = std::sqrt(norm);
      for (double& v : e.values) v /= norm;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace root
