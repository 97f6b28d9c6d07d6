#pragma once

#include <functional>
#include <string>

#include "root/model.hpp"
#include "root/similarity.hpp"

namespace root {

/// Text used to score an artifact: name, summary, and body joined by newlines.
std::string scoringText(const Artifact& artifact);

/// Index over the scoring text of every artifact accepted by `keep`
/// (all artifacts when `keep` is empty), keyed by artifact id.
CorpusIndex indexArtifacts(const Project& project,
                           const std::function<bool(const Artifact&)>& keep = {});

/// Index over artifact bodies only.
CorpusIndex indexBodies(const Project& project,
                        const std::function<bool(const Artifact&)>& keep = {});

/// Case-insensitive occurrence of `phrase` in `text` delimited by
/// non-alphanumeric characters (or the text edges).
bool containsPhrase(std::string_view text, std::string_view phrase);

/// Current UTC time as ISO-8601 with milliseconds ("2024-01-01T00:00:00.000Z").
std::string utcTimestamp();

}  // namespace root
