#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "root/model.hpp"
#include "root/progress.hpp"
#include "root/provider.hpp"
#include "root/similarity.hpp"

namespace root {

inline constexpr std::size_t kDefaultCandidateCount = 25;
inline constexpr double kPredictedConceptThreshold = 0.30;
inline constexpr std::size_t kContradictionMinSharedTerms = 2;

struct ConceptCandidate {
  std::string term;           // lowercased, pieces joined by one space
  double score = 0.0;         // total frequency x idf
  std::size_t frequency = 0;  // occurrences across the corpus
  std::size_t documents = 0;  // artifacts containing it
  bool operator==(const ConceptCandidate&) const = default;
};

/// 1-3 word sequences from the bodies of every artifact that is neither Code
/// nor a Concept. Each word must be a content word: two or more characters,
/// not a stopword, not a requirement modal, not a pure number. Sequences do
/// not cross sentence punctuation. Existing vocabulary terms are excluded.
/// Sorted by descending score, ties alphabetical; at most `topN`.
std::vector<ConceptCandidate> extractConcepts(const Project& project,
                                              std::size_t topN = kDefaultCandidateCount);

/// Shipped ambiguity lexicon (data/ambiguity.txt).
const TermList& ambiguityLexicon();

/// Adds a vocabulary term backed by a Concept artifact.
std::uint64_t addConcept(Project& project, std::string term, std::string definition,
                         ConceptOrigin origin = ConceptOrigin::manual);

/// Runs every health check on one artifact and reconciles the stored
/// findings, which are keyed by (artifactId, kind, subject): dismissed
/// findings stay dismissed, resolved ones reopen when detected again, and
/// open ones that are no longer detected are resolved. Returns the open
/// findings in detection order. When the provider is unavailable the
/// contradiction pass is skipped and a transient `warning` finding (never
/// stored) is appended instead.
std::vector<HealthFinding> healthCheck(Project& project, std::string_view artifactId,
                                       GenerationProvider& provider);

/// Health check over every non-Code, non-Concept artifact with a body.
/// Returns the number of open findings reported.
std::size_t healthSweep(Project& project, GenerationProvider& provider,
                        const ProgressFn& progress = {});

enum class FindingAction { resolve, dismiss, promote_term };
FindingAction parseFindingAction(std::string_view text);

/// Closes an open finding. promote-term (undefined-concept only) also adds
/// the subject to the vocabulary with an empty, flagged definition.
std::uint64_t resolveFinding(Project& project, std::string_view findingId, FindingAction action);

/// Stores a reviewer note on the artifact; an empty note clears it.
std::uint64_t flagArtifact(Project& project, std::string_view artifactId, std::string note);

}  // namespace root
