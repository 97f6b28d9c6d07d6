#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "root/query.hpp"
#include "root/vocab.hpp"

using namespace root;

namespace {

class DownProvider : public GenerationProvider {
 public:
  std::string complete(const PromptRequest&) override { throw Error(ErrorCode::ProviderUnavailable, "offline"); }
  std::string name() const override { return "down"; }
};

std::string randomWord(std::mt19937_64& rng, std::size_t maxLen) {
  static const std::string alphabet = "abcdeBRAKg_ -/";
  std::string out;
  for (std::size_t i = 0, n = rng() % (maxLen + 1); i < n; ++i) out += alphabet[rng() % alphabet.size()];
  return out;
}

}  // namespace

TEST(Search, BrakingSubtreeRanksFirst) {
  const auto p = fixtures::brakingProject();
  const auto rows = searchArtifacts(p, "braking");
  const auto subtree = fixtures::brakingSubtree();
  ASSERT_GE(rows.size(), subtree.size());
  std::set<std::string> top;
  for (std::size_t i = 0; i < subtree.size(); ++i) top.insert(rows[i].id);
  EXPECT_EQ(top, std::set<std::string>(subtree.begin(), subtree.end()));
  // The subsequence trap still matches, below the subtree.
  const auto trap = std::find_if(rows.begin(), rows.end(), [](const SearchRow& r) { return r.id == "F4"; });
  ASSERT_NE(trap, rows.end());
  EXPECT_EQ(trap->nameScore, 0.5);
}

TEST(Search, FuzzyMatchAgreesWithOracle) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 20000; ++i) {
    const auto pattern = randomWord(rng, 4);
    const auto text = randomWord(rng, 12);
    ASSERT_EQ(fuzzyMatch(pattern, text), oracle::subsequence(pattern, text)) << pattern << " / " << text;
  }
  EXPECT_TRUE(fuzzyMatch("BRK", "braking"));
  EXPECT_FALSE(fuzzyMatch("kb", "braking"));
  EXPECT_TRUE(fuzzyMatch("", "x"));
}

TEST(Search, NameScoresAgreeWithOracle) {
  const auto p = fixtures::brakingProject();
  for (std::string q : {"braking", "brk", "map", "ot", "zzz"}) {
    for (const auto& row : searchArtifacts(p, q)) {
      const auto name = lowercase(p.artifact(row.id).name);
      const double expected = name.find(lowercase(q)) != std::string::npos ? 1.0
                              : oracle::subsequence(q, name)              ? 0.5
                                                                          : 0.0;
      EXPECT_EQ(row.nameScore, expected) << q << " " << row.id;
      EXPECT_GT(row.score, 0.0);
    }
  }
}

TEST(Search, FiltersAndSorting) {
  auto p = fixtures::brakingProject();
  flagArtifact(p, "FR2", "check force split");
  auto rows = searchArtifacts(p, "", {.type = std::string("Feature")}, SearchSort::name);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].name, "Braking");
  EXPECT_EQ(rows[3].name, "Perception");
  rows = searchArtifacts(p, "", {.flagged = true});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].id, "FR2");
  rows = searchArtifacts(p, "braking", {.type = std::string("Functional Requirement"), .flagged = false});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].id, "FR1");
  rows = searchArtifacts(p, "", {.status = LinkStatus::approved}, SearchSort::id, 3);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.id < b.id; }));
  EXPECT_EQ(parseSearchSort("type"), SearchSort::type);
  EXPECT_THROW(parseSearchSort("random"), Error);
}

TEST(Search, StableScoreOrder) {
  const auto p = fixtures::brakingProject();
  const auto rows = searchArtifacts(p, "src");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    EXPECT_TRUE(a.score > b.score || (a.score == b.score && a.id < b.id));
  }
}

TEST(Chat, BrakingQuestionCitesFeature) {
  const auto p = fixtures::brakingProject();
  MockGenerationProvider mock;
  const auto r = chatQuery(p, "braking", kDefaultChatK, mock);
  EXPECT_NE(std::find(r.citedArtifactIds.begin(), r.citedArtifactIds.end(), "F1"), r.citedArtifactIds.end());
  EXPECT_LE(r.citedArtifactIds.size(), 5u);
  EXPECT_EQ(r.usedK, 5u);
  EXPECT_EQ(r.text.rfind("Based on the project: ", 0), 0u);
  for (const auto& id : r.citedArtifactIds) EXPECT_TRUE(p.findArtifact(id));
}

TEST(Chat, UsesTopTwoSummaries) {
  auto p = fixtures::brakingProject();
  auto f1 = p.artifact("F1");
  f1.summary = "Braking summary.";
  p.upsertArtifact(f1);
  MockGenerationProvider mock;
  const auto r = chatQuery(p, "braking", 1, mock);
  ASSERT_EQ(r.citedArtifactIds.size(), 1u);
  EXPECT_EQ(r.text, "Based on the project: " +
                        (r.citedArtifactIds[0] == "F1" ? std::string("Braking summary.")
                                                       : p.artifact(r.citedArtifactIds[0]).name));
}

TEST(Chat, ProviderDownKeepsCitations) {
  const auto p = fixtures::brakingProject();
  DownProvider down;
  MockGenerationProvider mock;
  const auto r = chatQuery(p, "braking", 3, down);
  EXPECT_FALSE(r.providerAvailable);
  EXPECT_EQ(r.text, "");
  EXPECT_EQ(r.citedArtifactIds, chatQuery(p, "braking", 3, mock).citedArtifactIds);
}

TEST(Chat, EmptyQuestion) {
  const auto p = fixtures::brakingProject();
  MockGenerationProvider mock;
  try {
    chatQuery(p, "   ", 5, mock);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyQuestion);
  }
}
