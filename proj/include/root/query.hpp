#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "root/model.hpp"
#include "root/provider.hpp"

namespace root {

inline constexpr std::size_t kDefaultChatK = 5;
inline constexpr std::size_t kChatSummaryDocs = 2;

struct ChatResponse {
  std::string text;  // empty when the provider was unavailable
  std::vector<std::string> citedArtifactIds;
  std::size_t usedK = 0;
  bool providerAvailable = true;
};

/// Retrieval-augmented answer: the top `k` artifacts for the question (by
/// cosine over name, summary and body, positive scores only) become the
/// provider's context and the response's citations.
ChatResponse chatQuery(const Project& project, std::string_view question, std::size_t k,
                       GenerationProvider& provider);

/// Case-insensitive subsequence test: every character of `pattern` occurs
/// in `text` in order.
bool fuzzyMatch(std::string_view pattern, std::string_view text);

struct SearchFilters {
  std::optional<std::string> type;
  std::optional<bool> flagged;
  /// Keeps artifacts that take part in at least one link with this status.
  std::optional<LinkStatus> status;
};

enum class SearchSort { score, id, name, type };
SearchSort parseSearchSort(std::string_view text);

struct SearchRow {
  std::string id;
  std::string type;
  std::string name;
  double score = 0.0;      // nameScore + bodyScore
  double nameScore = 0.0;  // 1 for a substring, 0.5 for a subsequence
  double bodyScore = 0.0;  // tf-idf cosine of query and body
  bool flagged = false;
};

/// Rows matching every filter. With a non-empty query only rows with a
/// positive score are kept. Score order is descending with ties by id; the
/// other orders are ascending with ties by id. `limit` 0 means no limit.
std::vector<SearchRow> searchArtifacts(const Project& project, std::string_view query,
                                       const SearchFilters& filters = {},
                                       SearchSort sort = SearchSort::score, std::size_t limit = 0);

}  // namespace root
