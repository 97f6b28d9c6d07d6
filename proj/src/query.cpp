#include "root/query.hpp"

#include <algorithm>
#include <cctype>

#include "root/artifact_text.hpp"
#include "root/similarity.hpp"

namespace root {

ChatResponse chatQuery(const Project& project, std::string_view question, std::size_t k,
                       GenerationProvider& provider) {
  if (question.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::EmptyQuestion, "question must not be empty");
  }
  ChatResponse response;
  response.usedK = k;
  const auto index = indexArtifacts(project);
  for (const auto& hit : topK(index, question, k)) {
    if (hit.score > 0.0) response.citedArtifactIds.push_back(hit.docId);
  }

  PromptRequest request;
  request.task = std::string(task::kChat);
  request.instruction =
      "Answer the question using only the project artifacts provided as context. Cite the "
      "artifacts you rely on.\nQuestion: " +
      std::string(question);
  std::vector<std::string> summaries;
  for (const auto& id : response.citedArtifactIds) {
    const auto& a = project.artifact(id);
    request.context.push_back({a.id, a.name, scoringText(a)});
    if (summaries.size() < kChatSummaryDocs) {
      summaries.push_back(a.summary && !a.summary->empty() ? *a.summary : a.name);
    }
  }
  request.facts["question"] = std::string(question);
  request.facts["summaries"] = summaries;
  try {
    response.text = provider.complete(request);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProviderUnavailable) throw;
    response.providerAvailable = false;
    response.text.clear();
  }
  return response;
}

bool fuzzyMatch(std::string_view pattern, std::string_view text) {
  std::size_t at = 0;
  for (char p : pattern) {
    const auto folded = static_cast<char>(std::tolower(static_cast<unsigned char>(p)));
    while (at < text.size() &&
           static_cast<char>(std::tolower(static_cast<unsigned char>(text[at]))) != folded) {
      ++at;
    }
    if (at == text.size()) return false;
    ++at;
  }
  return true;
}

SearchSort parseSearchSort(std::string_view text) {
  if (text.empty() || text == "score") return SearchSort::score;
  if (text == "id") return SearchSort::id;
  if (text == "name") return SearchSort::name;
  if (text == "type") return SearchSort::type;
  throw Error(ErrorCode::InvalidParams, "sort must be score, id, name or type", std::string(text));
}

std::vector<SearchRow> searchArtifacts(const Project& project, std::string_view query,
                                       const SearchFilters& filters, SearchSort sort,
                                       std::size_t limit) {
  std::set<std::string> withStatus;
  if (filters.status) {
    for (const auto& [key, link] : project.links()) {
      if (link.status != *filters.status) continue;
      withStatus.insert(link.childId);
      withStatus.insert(link.parentId);
    }
  }
  const auto trimmed = [&] {
    const auto first = query.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return std::string_view{};
    return query.substr(first, query.find_last_not_of(" \t\r\n") - first + 1);
  }();
  const auto needle = lowercase(trimmed);
  const auto index = indexBodies(project);
  const auto queryVec = index.vectorize(trimmed);

  std::vector<SearchRow> rows;
  for (const auto& [id, a] : project.artifacts()) {
    if (filters.type && a.type != *filters.type) continue;
    if (filters.flagged && a.flagged.has_value() != *filters.flagged) continue;
    if (filters.status && !withStatus.contains(id)) continue;
    SearchRow row{a.id, a.type, a.name, 0.0, 0.0, 0.0, a.flagged.has_value()};
    if (!needle.empty()) {
      if (lowercase(a.name).find(needle) != std::string::npos) {
        row.nameScore = 1.0;
      } else if (fuzzyMatch(needle, a.name)) {
        row.nameScore = 0.5;
      }
      row.bodyScore = cosine(queryVec, index.vector(id));
      row.score = row.nameScore + row.bodyScore;
      if (row.score <= 0.0) continue;
    }
    rows.push_back(std::move(row));
  }

  const auto byKey = [sort](const SearchRow& x, const SearchRow& y) {
    switch (sort) {
      case SearchSort::score:
        if (x.score != y.score) return x.score > y.score;
        break;
      case SearchSort::name:
        if (x.name != y.name) return x.name < y.name;
        break;
      case SearchSort::type:
        if (x.type != y.type) return x.type < y.type;
        break;
      case SearchSort::id:
        break;
    }
    return x.id < y.id;
  };
  std::stable_sort(rows.begin(), rows.end(), byKey);
  if (limit > 0 && rows.size() > limit) rows.resize(limit);
  return rows;
}

}  // namespace root
