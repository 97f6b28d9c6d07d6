#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "root/model.hpp"
#include "root/progress.hpp"
#include "root/provider.hpp"

namespace root {

inline constexpr double kDefaultTraceThreshold = 0.30;
inline constexpr std::size_t kDefaultMaxPerChild = 3;

struct PredictionRequest {
  std::set<std::string> childTypes;
  std::set<std::string> parentTypes;
  double threshold = kDefaultTraceThreshold;
  std::size_t maxPerChild = kDefaultMaxPerChild;
};

struct PredictionReport {
  std::vector<TraceLink> links;      // inserted, status pending, in child/rank order
  std::size_t belowThreshold = 0;    // candidates discarded by the threshold
  std::size_t alreadyLinked = 0;     // top candidates skipped because the pair exists
  std::size_t droppedForCycle = 0;   // top candidates that would close a cycle
};

/// Scores every (child, parent) pair of the requested types by cosine over
/// a tf-idf index of their scoring text, keeps the top `maxPerChild` at or
/// above `threshold`, and inserts those not already linked as pending links.
/// Ranking happens before existing pairs are skipped, so rerunning after a
/// full review proposes nothing new.
PredictionReport predictLinks(Project& project, const PredictionRequest& request,
                              const ProgressFn& progress = {});

/// Up to five shared terms of the two artifacts, ranked by the product of
/// their tf-idf weights in each (descending, ties by term).
std::vector<std::string> sharedTerms(const Project& project, std::string_view childId,
                                     std::string_view parentId, std::size_t limit = 5);

/// Asks the provider for an explanation and stores it on the link. On
/// ProviderUnavailable the link is left untouched and the error propagates.
std::string explainLink(Project& project, std::string_view childId, std::string_view parentId,
                        GenerationProvider& provider);

enum class ReviewDecision { approve, reject };
ReviewDecision parseDecision(std::string_view text);

/// Moves a pending link to approved or rejected. Review is terminal.
std::uint64_t reviewLink(Project& project, std::string_view childId, std::string_view parentId,
                         ReviewDecision decision, std::string reviewer,
                         std::string timestamp = {});

}  // namespace root
