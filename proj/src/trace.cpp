#include "root/trace.hpp"

#include <algorithm>
#include <map>

#include "root/artifact_text.hpp"
#include "root/similarity.hpp"

namespace root {

PredictionReport predictLinks(Project& project, const PredictionRequest& request,
                              const ProgressFn& progress) {
  PredictionReport report;
  std::vector<const Artifact*> children;
  std::vector<const Artifact*> parents;
  for (const auto& [id, a] : project.artifacts()) {
    if (request.childTypes.contains(a.type)) children.push_back(&a);
    if (request.parentTypes.contains(a.type)) parents.push_back(&a);
  }
  if (children.empty() || parents.empty()) {
    reportProgress(progress, 1.0);
    return report;
  }

  const auto index = indexArtifacts(project, [&](const Artifact& a) {
    return request.childTypes.contains(a.type) || request.parentTypes.contains(a.type);
  });

  struct Candidate {
    std::string parentId;
    double score;
  };
  std::vector<std::pair<std::string, std::vector<Candidate>>> proposals;
  for (std::size_t i = 0; i < children.size(); ++i) {
    reportProgress(progress, 0.9 * static_cast<double>(i) / static_cast<double>(children.size()));
    const auto& child = *children[i];
    const auto& childVec = index.vector(child.id);
    std::vector<Candidate> ranked;
    for (const auto* parent : parents) {
      if (parent->id == child.id) continue;
      const double score = cosine(childVec, index.vector(parent->id));
      if (score < request.threshold) {
        ++report.belowThreshold;
        continue;
      }
      ranked.push_back({parent->id, score});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Candidate& x, const Candidate& y) {
      if (x.score != y.score) return x.score > y.score;
      return x.parentId < y.parentId;
    });
    if (ranked.size() > request.maxPerChild) ranked.resize(request.maxPerChild);
    proposals.emplace_back(child.id, std::move(ranked));
  }

  for (auto& [childId, ranked] : proposals) {
    for (auto& candidate : ranked) {
      if (project.findLink(childId, candidate.parentId)) {
        ++report.alreadyLinked;
        continue;
      }
      if (project.wouldCreateCycle(childId, candidate.parentId)) {
        ++report.droppedForCycle;
        continue;
      }
      TraceLink link;
      link.childId = childId;
      link.parentId = candidate.parentId;
      link.score = candidate.score;
      link.status = LinkStatus::pending;
      link.createdBy = LinkOrigin::trace_engine;
      project.addLink(link);
      report.links.push_back(std::move(link));
    }
  }
  reportProgress(progress, 1.0);
  return report;
}

std::vector<std::string> sharedTerms(const Project& project, std::string_view childId,
                                     std::string_view parentId, std::size_t limit) {
  const auto& child = project.artifact(childId);
  const auto& parent = project.artifact(parentId);
  const auto index = indexArtifacts(project);
  const auto& a = index.vector(child.id);
  const auto& b = index.vector(parent.id);

  std::vector<std::pair<std::string, double>> shared;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      shared.emplace_back(ia->first, ia->second * ib->second);
      ++ia;
      ++ib;
    }
  }
  std::sort(shared.begin(), shared.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < shared.size() && i < limit; ++i) out.push_back(shared[i].first);
  return out;
}

std::string explainLink(Project& project, std::string_view childId, std::string_view parentId,
                        GenerationProvider& provider) {
  const auto* existing = project.findLink(childId, parentId);
  if (!existing) {
    throw Error(ErrorCode::UnknownLink,
                "no link " + std::string(childId) + " -> " + std::string(parentId));
  }
  const auto& child = project.artifact(childId);
  const auto& parent = project.artifact(parentId);

  PromptRequest request;
  request.task = std::string(task::kExplainLink);
  request.instruction =
      "Explain in one or two sentences why the first artifact (" + child.type +
      ") traces to the second artifact (" + parent.type +
      "). Mention the concrete functionality they share.";
  request.context = {{child.id, child.name, scoringText(child)},
                     {parent.id, parent.name, scoringText(parent)}};
  request.facts["sharedTerms"] = sharedTerms(project, childId, parentId);

  auto explanation = provider.complete(request);
  TraceLink updated = *existing;
  updated.explanation = explanation;
  project.updateLink(std::move(updated));
  return explanation;
}

ReviewDecision parseDecision(std::string_view text) {
  const auto folded = lowercase(text);
  if (folded == "approve" || folded == "approved" || folded == "accept") {
    return ReviewDecision::approve;
  }
  if (folded == "reject" || folded == "rejected") return ReviewDecision::reject;
  throw Error(ErrorCode::InvalidParams, "decision must be 'approve' or 'reject'");
}

std::uint64_t reviewLink(Project& project, std::string_view childId, std::string_view parentId,
                         ReviewDecision decision, std::string reviewer, std::string timestamp) {
  const auto* existing = project.findLink(childId, parentId);
  if (!existing) {
    throw Error(ErrorCode::UnknownLink,
                "no link " + std::string(childId) + " -> " + std::string(parentId));
  }
  if (existing->status != LinkStatus::pending) {
    throw Error(ErrorCode::NotPending,
                "link " + std::string(childId) + " -> " + std::string(parentId) + " is " +
                    std::string(to_string(existing->status)) + ", not pending");
  }
  TraceLink updated = *existing;
  updated.status = decision == ReviewDecision::approve ? LinkStatus::approved : LinkStatus::rejected;
  updated.reviewedBy = reviewer.empty() ? std::string("anonymous") : std::move(reviewer);
  updated.reviewedAt = timestamp.empty() ? utcTimestamp() : std::move(timestamp);
  return project.updateLink(std::move(updated));
}

}  // namespace root
