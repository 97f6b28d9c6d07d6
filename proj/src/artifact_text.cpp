#include "root/artifact_text.hpp"

#include <cctype>
#include <chrono>
#include <ctime>
#include <vector>

namespace root {

std::string scoringText(const Artifact& artifact) {
  std::string text = artifact.name;
  if (artifact.summary && !artifact.summary->empty()) {
    text += '\n';
    text += *artifact.summary;
  }
  text += '\n';
  text += artifact.body;
  return text;
}

namespace {

CorpusIndex indexWith(const Project& project, const std::function<bool(const Artifact&)>& keep,
                      bool bodyOnly) {
  std::vector<Document> docs;
  for (const auto& [id, a] : project.artifacts()) {
    if (keep && !keep(a)) continue;
    docs.push_back({id, bodyOnly ? a.body : scoringText(a)});
  }
  return buildIndex(docs);
}

bool isAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

CorpusIndex indexArtifacts(const Project& project,
                           const std::function<bool(const Artifact&)>& keep) {
  return indexWith(project, keep, false);
}

CorpusIndex indexBodies(const Project& project, const std::function<bool(const Artifact&)>& keep) {
  return indexWith(project, keep, true);
}

bool containsPhrase(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return false;
  const auto haystack = lowercase(text);
  const auto needle = lowercase(phrase);
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    const bool startOk = pos == 0 || !isAlnum(haystack[pos - 1]) || !isAlnum(needle.front());
    const auto end = pos + needle.size();
    const bool endOk = end == haystack.size() || !isAlnum(haystack[end]) || !isAlnum(needle.back());
    if (startOk && endOk) return true;
  }
  return false;
}

std::string utcTimestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto secs = time_point_cast<seconds>(now);
  const auto millis = duration_cast<milliseconds>(now - secs).count();
  const std::time_t t = system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
  return out;
}

}  // namespace root
