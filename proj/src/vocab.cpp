#include "root/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "root/artifact_text.hpp"
#include "root/lexicons.hpp"

namespace root {

namespace {

constexpr std::size_t kMaxGram = 3;

bool isModal(std::string_view w) {
  return w == "shall" || w == "must" || w == "should" || w == "will" || w == "may";
}

bool isContentWord(std::string_view w) {
  if (w.size() < 2 || isModal(w) || defaultStopwords().contains(w)) return false;
  return !std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

bool extractionSource(const Artifact& a) { return a.type != kCodeType && a.type != kConceptType; }

// Every content n-gram occurrence in `text`, in reading order.
std::vector<std::string> ngrams(std::string_view text) {
  const auto pieces = wordPieces(text);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    std::string gram;
    for (std::size_t n = 0; n < kMaxGram && i + n < pieces.size(); ++n) {
      const auto& piece = pieces[i + n];
      if (n > 0 && piece.breakBefore) break;
      if (!isContentWord(piece.text)) break;
      if (n > 0) gram += ' ';
      gram += piece.text;
      out.push_back(gram);
    }
  }
  return out;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

using FindingKey = std::tuple<std::string, FindingKind, std::string>;

FindingKey keyOf(const HealthFinding& f) { return {f.artifactId, f.kind, lowercase(f.subject)}; }

struct Detected {
  FindingKind kind;
  std::string subject;
  std::string explanation;
};

// Stores a detection, honouring the dismissed/resolved rules. Returns the
// stored finding when it is open afterwards.
std::optional<HealthFinding> reconcile(Project& project, std::string_view artifactId,
                                       const Detected& d) {
  const FindingKey key{std::string(artifactId), d.kind, lowercase(d.subject)};
  for (const auto& [id, existing] : project.findings()) {
    if (keyOf(existing) != key) continue;
    if (existing.state == FindingState::dismissed) return std::nullopt;
    if (existing.state == FindingState::open && existing.explanation == d.explanation) return existing;
    HealthFinding updated = existing;
    updated.state = FindingState::open;
    updated.explanation = d.explanation;
    project.upsertFinding(updated);
    return updated;
  }
  HealthFinding created;
  created.id = project.nextFindingId();
  created.artifactId = std::string(artifactId);
  created.kind = d.kind;
  created.subject = d.subject;
  created.explanation = d.explanation;
  project.upsertFinding(created);
  return created;
}

void resolveStale(Project& project, const std::set<FindingKey>& seen,
                  const std::function<bool(const HealthFinding&)>& inScope) {
  std::vector<HealthFinding> stale;
  for (const auto& [id, f] : project.findings()) {
    if (f.state == FindingState::open && inScope(f) && !seen.contains(keyOf(f))) stale.push_back(f);
  }
  for (auto& f : stale) {
    f.state = FindingState::resolved;
    project.upsertFinding(std::move(f));
  }
}

std::set<std::string> tokenTypes(std::string_view text) {
  const auto tokens = tokenize(text);
  return {tokens.begin(), tokens.end()};
}

std::size_t sharedCount(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

}  // namespace

std::vector<ConceptCandidate> extractConcepts(const Project& project, std::size_t topN) {
  std::map<std::string, ConceptCandidate> byTerm;
  std::size_t corpus = 0;
  for (const auto& [id, a] : project.artifacts()) {
    if (!extractionSource(a)) continue;
    ++corpus;
    std::set<std::string> inDoc;
    for (auto& gram : ngrams(a.body)) {
      auto& c = byTerm[gram];
      ++c.frequency;
      if (inDoc.insert(gram).second) ++c.documents;
    }
  }
  std::vector<ConceptCandidate> out;
  for (auto& [term, c] : byTerm) {
    if (project.findConcept(term)) continue;
    c.term = term;
    const double idf = std::log(static_cast<double>(corpus + 1) / static_cast<double>(c.documents + 1)) + 1.0;
    c.score = static_cast<double>(c.frequency) * idf;
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const ConceptCandidate& x, const ConceptCandidate& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.term < y.term;
  });
  if (out.size() > topN) out.resize(topN);
  return out;
}

const TermList& ambiguityLexicon() {
  static const TermList list = TermList::parse(data::kAmbiguityLexicon);
  return list;
}

std::uint64_t addConcept(Project& project, std::string term, std::string definition,
                         ConceptOrigin origin) {
  Concept entry;
  entry.term = std::move(term);
  entry.definition = std::move(definition);
  entry.origin = origin;
  return project.addConcept(std::move(entry));
}

std::vector<HealthFinding> healthCheck(Project& project, std::string_view artifactId,
                                       GenerationProvider& provider) {
  const Artifact subject = project.artifact(artifactId);
  if (subject.type == kCodeType) {
    throw Error(ErrorCode::WrongType,
                "health checks apply to natural-language artifacts; '" + subject.id + "' is Code",
                subject.id);
  }
  const std::string id = subject.id;
  std::vector<HealthFinding> emitted;
  std::set<FindingKey> seen;
  const auto record = [&](const Detected& d) {
    seen.insert({id, d.kind, lowercase(d.subject)});
    if (auto f = reconcile(project, id, d)) emitted.push_back(std::move(*f));
  };
  const auto ownScope = [&](const HealthFinding& f) {
    return f.artifactId == id && f.kind != FindingKind::contradiction;
  };
  if (subject.body.empty()) {
    resolveStale(project, seen, [&](const HealthFinding& f) { return f.artifactId == id; });
    return emitted;
  }

  // (a) cited concepts, each backed by an artifact -> concept link.
  const auto concepts = project.concepts();
  std::set<std::string> cited;
  for (const auto& c : concepts) {
    if (c.artifactId == id || !containsPhrase(subject.body, c.term)) continue;
    cited.insert(c.term);
    if (!project.findLink(id, c.artifactId) && !project.wouldCreateCycle(id, c.artifactId)) {
      TraceLink link;
      link.childId = id;
      link.parentId = c.artifactId;
      link.status = LinkStatus::approved;
      link.createdBy = LinkOrigin::vocab_health;
      project.addLink(link);
    }
    record({FindingKind::cited_concept, c.term,
            "Concept '" + c.term + "' is cited in " + id + " and linked to " + c.artifactId + "."});
  }

  // (b) predicted concepts: definition text close to the body.
  {
    // Vocabulary entries stay out of the idf corpus, as in extraction.
    const auto index = indexBodies(project, [&](const Artifact& a) {
      return a.type != kCodeType && (a.type != kConceptType || a.id == id);
    });
    const auto& body = index.vector(id);
    for (const auto& c : concepts) {
      if (c.artifactId == id || cited.contains(c.term)) continue;
      const double score = cosine(index.vectorize(c.term + "\n" + c.definition), body);
      if (score < kPredictedConceptThreshold) continue;
      record({FindingKind::predicted_concept, c.term,
              "Concept '" + c.term + "' is not cited but its definition matches " + id +
                  " (similarity " + fixed2(score) + ")."});
    }
  }

  // (c) undefined concepts: strong extraction candidates used here.
  {
    const auto candidates = extractConcepts(project);
    if (!candidates.empty()) {
      std::vector<double> scores;
      for (const auto& c : candidates) scores.push_back(c.score);
      std::sort(scores.begin(), scores.end());
      const auto mid = scores.size() / 2;
      const double median = scores.size() % 2 ? scores[mid] : (scores[mid - 1] + scores[mid]) / 2.0;
      const auto grams = ngrams(subject.body);
      const std::set<std::string> here(grams.begin(), grams.end());
      for (const auto& c : candidates) {
        if (c.score <= median || !here.contains(c.term)) continue;
        record({FindingKind::undefined_concept, c.term,
                "Term '" + c.term + "' recurs in " + std::to_string(c.documents) +
                    " artifact(s) but is not in the project vocabulary."});
      }
    }
  }

  // (d) ambiguous wording.
  for (const auto& term : ambiguityLexicon().terms()) {
    if (!containsPhrase(subject.body, term)) continue;
    record({FindingKind::ambiguity, term,
            "'" + term + "' is vague; replace it with a measurable quantity or criterion."});
  }

  // (e) contradictions with same-type artifacts that share vocabulary.
  std::optional<HealthFinding> warning;
  std::set<std::string> contradicting;
  try {
    const auto mine = tokenTypes(subject.body);
    std::vector<std::pair<std::string, ContradictionVerdict>> verdicts;
    for (const auto* other : project.artifactsOfType(subject.type)) {
      if (other->id == id || other->body.empty()) continue;
      if (sharedCount(mine, tokenTypes(other->body)) < kContradictionMinSharedTerms) continue;
      PromptRequest request;
      request.task = std::string(task::kContradiction);
      request.instruction =
          "Do these two requirements contradict each other? Answer 'yes: <explanation>' or "
          "'no: <explanation>'.";
      request.context = {{id, subject.name, subject.body}, {other->id, other->name, other->body}};
      request.facts["a"] = id;
      request.facts["b"] = other->id;
      verdicts.emplace_back(other->id, parseVerdict(provider.complete(request)));
    }
    for (const auto& [otherId, verdict] : verdicts) {
      if (!verdict.contradicts) continue;
      contradicting.insert(otherId);
      const auto explanation = verdict.explanation.empty()
                                   ? id + " and " + otherId + " contradict each other."
                                   : verdict.explanation;
      record({FindingKind::contradiction, otherId, explanation});
      // Mirror so the pair is visible from either side.
      seen.insert({otherId, FindingKind::contradiction, lowercase(id)});
      reconcile(project, otherId, {FindingKind::contradiction, id, explanation});
    }
    resolveStale(project, seen, [&](const HealthFinding& f) {
      if (f.kind != FindingKind::contradiction) return false;
      return f.artifactId == id || f.subject == id;
    });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProviderUnavailable) throw;
    warning = HealthFinding{"", id, FindingKind::warning, "contradiction",
                            std::string("Contradiction check skipped: ") + e.what(),
                            FindingState::open};
  }

  resolveStale(project, seen, ownScope);
  if (warning) emitted.push_back(std::move(*warning));
  return emitted;
}

std::size_t healthSweep(Project& project, GenerationProvider& provider, const ProgressFn& progress) {
  std::vector<std::string> ids;
  for (const auto& [id, a] : project.artifacts()) {
    if (extractionSource(a) && !a.body.empty()) ids.push_back(id);
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    reportProgress(progress, static_cast<double>(i) / static_cast<double>(ids.size()));
    total += healthCheck(project, ids[i], provider).size();
  }
  reportProgress(progress, 1.0);
  return total;
}

FindingAction parseFindingAction(std::string_view text) {
  const auto folded = lowercase(text);
  if (folded == "resolve") return FindingAction::resolve;
  if (folded == "dismiss") return FindingAction::dismiss;
  if (folded == "promote-term" || folded == "promote") return FindingAction::promote_term;
  throw Error(ErrorCode::InvalidAction, "action must be resolve, dismiss or promote-term",
              std::string(text));
}

std::uint64_t resolveFinding(Project& project, std::string_view findingId, FindingAction action) {
  const auto* existing = project.findFinding(findingId);
  if (!existing) {
    throw Error(ErrorCode::UnknownFinding, "unknown finding '" + std::string(findingId) + "'",
                std::string(findingId));
  }
  if (existing->state != FindingState::open) {
    throw Error(ErrorCode::AlreadyClosed,
                "finding " + existing->id + " is already " + std::string(to_string(existing->state)),
                existing->id);
  }
  HealthFinding updated = *existing;
  if (action == FindingAction::promote_term) {
    if (updated.kind != FindingKind::undefined_concept) {
      throw Error(ErrorCode::InvalidAction, "only undefined-concept findings can be promoted",
                  updated.id);
    }
    addConcept(project, updated.subject, "", ConceptOrigin::extracted);
  }
  updated.state = action == FindingAction::dismiss ? FindingState::dismissed : FindingState::resolved;
  return project.upsertFinding(std::move(updated));
}

std::uint64_t flagArtifact(Project& project, std::string_view artifactId, std::string note) {
  Artifact updated = project.artifact(artifactId);
  if (note.empty()) {
    updated.flagged.reset();
  } else {
    updated.flagged = std::move(note);
  }
  return project.upsertArtifact(std::move(updated), UpsertMode::update);
}

}  // namespace root
