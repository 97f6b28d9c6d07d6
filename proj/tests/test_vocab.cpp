#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "root/ingestion.hpp"
#include "root/serialization.hpp"
#include "root/vocab.hpp"

using namespace root;

namespace {

ErrorCode codeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

std::set<std::string> subjects(const std::vector<HealthFinding>& findings, FindingKind kind) {
  std::set<std::string> out;
  for (const auto& f : findings)
    if (f.kind == kind) out.insert(f.subject);
  return out;
}

const HealthFinding* find(const Project& p, std::string_view artifact, FindingKind kind, std::string_view subject) {
  for (const auto& [id, f] : p.findings())
    if (f.artifactId == artifact && f.kind == kind && lowercase(f.subject) == lowercase(subject)) return &f;
  return nullptr;
}

class DownProvider : public GenerationProvider {
 public:
  std::string complete(const PromptRequest&) override { throw Error(ErrorCode::ProviderUnavailable, "offline"); }
  std::string name() const override { return "down"; }
};

void addRequirement(Project& p, std::string id, std::string body) {
  Artifact a;
  a.id = id;
  a.type = "Requirement";
  a.name = std::move(id);
  a.body = std::move(body);
  p.upsertArtifact(std::move(a));
}

}  // namespace

TEST(Walkthrough, HealthOfR1) {
  auto p = fixtures::walkthroughProject();
  MockGenerationProvider mock(fixtures::walkthroughContradictions());
  const auto findings = healthCheck(p, "R1", mock);
  EXPECT_EQ(subjects(findings, FindingKind::cited_concept), std::set<std::string>{"Job"});
  EXPECT_EQ(subjects(findings, FindingKind::predicted_concept), std::set<std::string>{"Database Entity"});
  EXPECT_TRUE(subjects(findings, FindingKind::undefined_concept).count("system"));
  EXPECT_EQ(subjects(findings, FindingKind::contradiction), std::set<std::string>{"R4"});
  EXPECT_EQ(subjects(findings, FindingKind::ambiguity), std::set<std::string>{"some"});
  EXPECT_TRUE(subjects(findings, FindingKind::warning).empty());

  // Detection order: cited, predicted, undefined, ambiguity, contradiction.
  std::vector<FindingKind> order;
  for (const auto& f : findings)
    if (order.empty() || order.back() != f.kind) order.push_back(f.kind);
  EXPECT_EQ(order, (std::vector<FindingKind>{FindingKind::cited_concept, FindingKind::predicted_concept,
                                             FindingKind::undefined_concept, FindingKind::ambiguity,
                                             FindingKind::contradiction}));
  const auto jobArtifact = p.findConcept("Job")->artifactId;
  const auto* link = p.findLink("R1", jobArtifact);
  ASSERT_NE(link, nullptr);
  EXPECT_EQ(link->createdBy, LinkOrigin::vocab_health);
}

TEST(Walkthrough, IdempotentAndByteStable) {
  auto p = fixtures::walkthroughProject();
  MockGenerationProvider mock(fixtures::walkthroughContradictions());
  const auto first = healthCheck(p, "R1", mock);
  const auto afterFirst = serializeProject(p);
  const auto second = healthCheck(p, "R1", mock);
  EXPECT_EQ(first, second);
  EXPECT_EQ(serializeProject(p), afterFirst);

  auto q = fixtures::walkthroughProject();
  healthCheck(q, "R1", mock);
  EXPECT_EQ(serializeProject(q), afterFirst);
}

TEST(Walkthrough, ContradictionIsSymmetric) {
  auto p = fixtures::walkthroughProject();
  MockGenerationProvider mock(fixtures::walkthroughContradictions());
  healthCheck(p, "R1", mock);
  const auto* mirror = find(p, "R4", FindingKind::contradiction, "R1");
  ASSERT_NE(mirror, nullptr);
  EXPECT_EQ(mirror->state, FindingState::open);
  const auto fromR4 = healthCheck(p, "R4", mock);
  EXPECT_TRUE(subjects(fromR4, FindingKind::contradiction).count("R1"));
}

TEST(Health, ProviderDownKeepsOtherFindings) {
  auto p = fixtures::walkthroughProject();
  DownProvider down;
  const auto findings = healthCheck(p, "R1", down);
  EXPECT_EQ(subjects(findings, FindingKind::cited_concept), std::set<std::string>{"Job"});
  EXPECT_TRUE(subjects(findings, FindingKind::contradiction).empty());
  ASSERT_FALSE(findings.empty());
  EXPECT_EQ(findings.back().kind, FindingKind::warning);
  for (const auto& [id, f] : p.findings()) EXPECT_NE(f.kind, FindingKind::warning);
}

TEST(Health, EmptyBodyHasNoFindings) {
  auto p = fixtures::walkthroughProject();
  addRequirement(p, "R5", "");
  MockGenerationProvider mock;
  EXPECT_TRUE(healthCheck(p, "R5", mock).empty());
}

TEST(Health, CodeIsWrongType) {
  auto p = fixtures::brakingProject();
  MockGenerationProvider mock;
  EXPECT_EQ(codeOf([&] { healthCheck(p, "src/common/logger.cpp", mock); }), ErrorCode::WrongType);
  EXPECT_EQ(codeOf([&] { healthCheck(p, "nope", mock); }), ErrorCode::UnknownId);
}

TEST(Health, DismissedStaysDismissed) {
  auto p = fixtures::walkthroughProject();
  MockGenerationProvider mock;
  healthCheck(p, "R1", mock);
  const auto* some = find(p, "R1", FindingKind::ambiguity, "some");
  ASSERT_NE(some, nullptr);
  const auto id = some->id;
  resolveFinding(p, id, FindingAction::dismiss);
  const auto again = healthCheck(p, "R1", mock);
  EXPECT_TRUE(subjects(again, FindingKind::ambiguity).empty());
  EXPECT_EQ(p.findFinding(id)->state, FindingState::dismissed);
  EXPECT_EQ(codeOf([&] { resolveFinding(p, id, FindingAction::resolve); }), ErrorCode::AlreadyClosed);
}

TEST(Health, StaleFindingsResolveAndConceptRemovalClosesCited) {
  auto p = fixtures::walkthroughProject();
  MockGenerationProvider mock;
  healthCheck(p, "R1", mock);
  const auto citedId = find(p, "R1", FindingKind::cited_concept, "Job")->id;
  p.removeConcept("Job");
  EXPECT_FALSE(p.findFinding(citedId) && p.findFinding(citedId)->state == FindingState::open);
  auto edited = p.artifact("R1");
  edited.body = "The database shall respond.";
  p.upsertArtifact(edited);
  healthCheck(p, "R1", mock);
  const auto* some = find(p, "R1", FindingKind::ambiguity, "some");
  ASSERT_NE(some, nullptr);
  EXPECT_EQ(some->state, FindingState::resolved);
}

TEST(Health, EveryCitedFindingHasALink) {
  auto p = fixtures::walkthroughProject();
  MockGenerationProvider mock(fixtures::walkthroughContradictions());
  healthSweep(p, mock);
  for (const auto& [id, f] : p.findings()) {
    if (f.kind != FindingKind::cited_concept || f.state != FindingState::open) continue;
    EXPECT_TRUE(p.findLink(f.artifactId, p.findConcept(f.subject)->artifactId)) << f.artifactId;
  }
  EXPECT_TRUE(p.integrityProblems().empty());
}

TEST(Resolve, PromoteTerm) {
  auto p = fixtures::walkthroughProject();
  MockGenerationProvider mock;
  healthCheck(p, "R1", mock);
  const auto* undefined = find(p, "R1", FindingKind::undefined_concept, "system");
  ASSERT_NE(undefined, nullptr);
  const auto id = undefined->id;
  resolveFinding(p, id, FindingAction::promote_term);
  const auto* c = p.findConcept("system");
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->definition, "");
  EXPECT_EQ(c->origin, ConceptOrigin::extracted);
  EXPECT_TRUE(p.artifact(c->artifactId).flagged.has_value());
  EXPECT_EQ(p.findFinding(id)->state, FindingState::resolved);
  EXPECT_EQ(codeOf([&] { resolveFinding(p, id, FindingAction::resolve); }), ErrorCode::AlreadyClosed);
  EXPECT_EQ(codeOf([&] { resolveFinding(p, "H999", FindingAction::resolve); }), ErrorCode::UnknownFinding);
  const auto* cited = find(p, "R1", FindingKind::cited_concept, "Job");
  EXPECT_EQ(codeOf([&] { resolveFinding(p, cited->id, FindingAction::promote_term); }), ErrorCode::InvalidAction);
  EXPECT_EQ(codeOf([&] { parseFindingAction("explode"); }), ErrorCode::InvalidAction);
  EXPECT_EQ(parseFindingAction("promote-term"), FindingAction::promote_term);
}

TEST(Extract, EmptyAndAllKnown) {
  EXPECT_TRUE(extractConcepts(Project("p", "P")).empty());
  Project p("p", "P");
  addRequirement(p, "R1", "brake torque");
  addConcept(p, "brake", "");
  addConcept(p, "torque", "");
  addConcept(p, "brake torque", "");
  EXPECT_TRUE(extractConcepts(p).empty());
}

TEST(Extract, DatabaseEntityRecurring) {
  Project p("p", "P");
  addRequirement(p, "R1", "The system shall save each database entity within 5 seconds.");
  addRequirement(p, "R2", "Every database entity shall carry an owner.");
  addRequirement(p, "R3", "The service shall archive a database entity after a year.");
  addRequirement(p, "R4", "Reports shall be exported as PDF.");
  const auto candidates = extractConcepts(p, 5);
  std::vector<std::string> terms;
  for (const auto& c : candidates) terms.push_back(c.term);
  EXPECT_NE(std::find(terms.begin(), terms.end(), "database entity"), terms.end());
  for (const auto& c : candidates) {
    EXPECT_NE(c.term, "shall");
    EXPECT_EQ(c.term.find("5"), std::string::npos);
  }
}

TEST(Extract, ScoreOracle) {
  auto p = fixtures::walkthroughProject();
  const auto candidates = extractConcepts(p, 50);
  ASSERT_FALSE(candidates.empty());
  // N counts the four requirements; "system" occurs 3 times in 3 of them.
  const auto it = std::find_if(candidates.begin(), candidates.end(),
                               [](const ConceptCandidate& c) { return c.term == "system"; });
  ASSERT_NE(it, candidates.end());
  EXPECT_EQ(it->frequency, 3u);
  EXPECT_EQ(it->documents, 3u);
  EXPECT_NEAR(it->score, 3 * (std::log(5.0 / 4.0) + 1), 1e-12);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& a = candidates[i - 1];
    const auto& b = candidates[i];
    EXPECT_TRUE(a.score > b.score || (a.score == b.score && a.term < b.term));
  }
  for (const auto& c : candidates) EXPECT_NE(lowercase(c.term), "database entity");
}

TEST(Concepts, AddViaVocab) {
  Project p("p", "P");
  addConcept(p, "Job", "work");
  EXPECT_EQ(p.artifact(p.findConcept("job")->artifactId).type, kConceptType);
  EXPECT_EQ(codeOf([&] { addConcept(p, "job", ""); }), ErrorCode::DuplicateTerm);
  EXPECT_EQ(codeOf([&] { addConcept(p, "", ""); }), ErrorCode::EmptyField);
}

TEST(Flag, SetAndClear) {
  auto p = fixtures::walkthroughProject();
  flagArtifact(p, "R2", "verify timing");
  EXPECT_EQ(p.artifact("R2").flagged, "verify timing");
  flagArtifact(p, "R2", "");
  EXPECT_FALSE(p.artifact("R2").flagged.has_value());
  EXPECT_EQ(codeOf([&] { flagArtifact(p, "R9", "x"); }), ErrorCode::UnknownId);
}

TEST(Ambiguity, LexiconShipsCoreTerms) {
  for (auto t : {"some", "appropriate", "fast", "user-friendly", "etc.", "as needed"})
    EXPECT_TRUE(ambiguityLexicon().contains(t)) << t;
  Project p("p", "P");
  addRequirement(p, "R1", "The UI shall be user-friendly and fast, etc.");
  MockGenerationProvider mock;
  const auto s = subjects(healthCheck(p, "R1", mock), FindingKind::ambiguity);
  EXPECT_TRUE(s.count("user-friendly"));
  EXPECT_TRUE(s.count("fast"));
  EXPECT_TRUE(s.count("etc."));
}
