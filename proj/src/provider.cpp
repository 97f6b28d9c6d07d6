#include "root/provider.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "root/csv.hpp"
#include "root/error.hpp"
#include "root/model.hpp"

namespace root {

namespace {

std::pair<std::string, std::string> unorderedKey(std::string_view a, std::string_view b) {
  std::string x(a), y(b);
  if (y < x) std::swap(x, y);
  return {std::move(x), std::move(y)};
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> stringList(const nlohmann::json& facts, const char* key) {
  std::vector<std::string> out;
  if (auto it = facts.find(key); it != facts.end() && it->is_array()) {
    for (const auto& v : *it) out.push_back(v.get<std::string>());
  }
  return out;
}

std::string stringFact(const nlohmann::json& facts, const char* key) {
  if (auto it = facts.find(key); it != facts.end() && it->is_string()) return it->get<std::string>();
  return {};
}

}  // namespace

ContradictionTable ContradictionTable::fromCsv(std::string_view csvText) {
  ContradictionTable table;
  const auto records = parseCsv(csvText);
  if (records.empty()) return table;
  const std::vector<std::string> header{"artifact_a", "artifact_b", "verdict", "explanation"};
  if (records.front().fields != header) {
    throw Error(ErrorCode::MissingHeader,
                "contradiction table header must be artifact_a,artifact_b,verdict,explanation");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != 4) {
      throw Error(ErrorCode::MalformedRow, "expected 4 fields on line " + std::to_string(rec.line),
                  std::to_string(rec.line));
    }
    const auto verdict = lowercase(rec.fields[2]);
    if (verdict != "yes" && verdict != "no") {
      throw Error(ErrorCode::MalformedRow, "verdict must be yes or no on line " +
                                               std::to_string(rec.line),
                  std::to_string(rec.line));
    }
    table.set(rec.fields[0], rec.fields[1], {verdict == "yes", rec.fields[3]});
  }
  return table;
}

ContradictionTable ContradictionTable::fromFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::PathNotFound, "cannot read '" + path + "'", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fromCsv(buf.str());
}

void ContradictionTable::set(std::string a, std::string b, ContradictionVerdict verdict) {
  verdicts_.insert_or_assign(unorderedKey(a, b), std::move(verdict));
}

std::optional<ContradictionVerdict> ContradictionTable::lookup(std::string_view a,
                                                               std::string_view b) const {
  auto it = verdicts_.find(unorderedKey(a, b));
  if (it == verdicts_.end()) return std::nullopt;
  return it->second;
}

std::string MockGenerationProvider::complete(const PromptRequest& request) {
  const auto& facts = request.facts;
  if (request.task == task::kExplainLink) {
    const auto terms = stringList(facts, "sharedTerms");
    return "Linked because both mention: " + (terms.empty() ? "(no shared terms)" : join(terms, ", "));
  }
  if (request.task == task::kGenerateLayer) {
    auto names = stringList(facts, "memberNames");
    std::sort(names.begin(), names.end());
    return stringFact(facts, "targetType") + " covering: " + join(names, ", ");
  }
  if (request.task == task::kSummarizeFile) {
    if (auto comment = stringFact(facts, "firstComment"); !comment.empty()) return comment;
    return "Code file " + stringFact(facts, "name") +
           " with terms: " + join(stringList(facts, "topTerms"), ", ");
  }
  if (request.task == task::kProjectSummary) {
    return facts.dump();
  }
  if (request.task == task::kChat) {
    const auto summaries = stringList(facts, "summaries");
    if (summaries.empty()) return "Based on the project: no relevant artifacts were found.";
    return "Based on the project: " + join(summaries, " ");
  }
  if (request.task == task::kContradiction) {
    const auto verdict = contradictions_.lookup(stringFact(facts, "a"), stringFact(facts, "b"));
    if (!verdict) return "no: no contradiction recorded for this pair";
    return std::string(verdict->contradicts ? "yes" : "no") + ": " + verdict->explanation;
  }
  throw Error(ErrorCode::InvalidParams, "mock provider has no template for task '" +
                                            request.task + "'");
}

ContradictionVerdict parseVerdict(std::string_view answer) {
  auto start = answer.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos) return {};
  answer.remove_prefix(start);
  const auto folded = lowercase(answer.substr(0, 3));
  ContradictionVerdict v;
  std::size_t skip = 0;
  if (folded == "yes") {
    v.contradicts = true;
    skip = 3;
  } else if (folded.starts_with("no")) {
    skip = 2;
  } else {
    v.explanation = std::string(answer);
    return v;
  }
  answer.remove_prefix(skip);
  const auto rest = answer.find_first_not_of(" :.,-\t");
  v.explanation = rest == std::string_view::npos ? std::string() : std::string(answer.substr(rest));
  return v;
}

std::optional<RemoteEndpoint> endpointFromEnvironment() {
  const char* url = std::getenv("ROOT_PROVIDER_URL");
  if (!url || !*url) return std::nullopt;
  RemoteEndpoint endpoint;
  endpoint.url = url;
  if (const char* key = std::getenv("ROOT_PROVIDER_KEY")) endpoint.apiKey = key;
  return endpoint;
}

std::shared_ptr<GenerationProvider> makeGenerationProvider(
    const std::optional<RemoteEndpoint>& endpoint, ContradictionTable contradictions) {
  if (endpoint) return std::make_shared<HttpGenerationProvider>(*endpoint);
  return std::make_shared<MockGenerationProvider>(std::move(contradictions));
}

}  // namespace root
