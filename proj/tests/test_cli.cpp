#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "fixtures.hpp"
#include "root/cli.hpp"
#include "root/ingestion.hpp"
#include "root/serialization.hpp"
#include "root/server.hpp"

namespace fs = std::filesystem;
using namespace root;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
  json envelope() const { return json::parse(out); }
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "root");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = runCli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void writeFile(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string readFile(const fs::path& path) { return readTextFile(path); }

const char* kTable =
    "id,type,name,body\n"
    "src/brake.cpp,Code,brake.cpp,\"// Applies brake pressure when the obstacle sensor reports a stop.\n"
    "void applyBrake(double pressure);\"\n"
    "src/log.cpp,Code,log.cpp,\"// Writes log lines to disk.\nvoid writeLog();\"\n"
    "R1,Requirement,Braking,The vehicle shall apply brake pressure when the obstacle sensor reports a stop.\n"
    "R2,Requirement,Logging,The system shall write every log line to disk.\n"
    "R3,Requirement,Speed,The vehicle shall limit speed near obstacles.\n";

const char* kMatrix = "child_id,parent_id\nR3,R1\n";

// Review timestamps depend on the wall clock; everything else must agree.
json withoutClock(json project) {
  for (auto& l : project["links"]) l.erase("reviewedAt");
  return project;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli({}).code, kExitUserError);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUserError);
  EXPECT_EQ(cli({"trace", "--project", "x.json"}).code, kExitUserError);  // missing --child
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, MissingProjectReportsError) {
  const auto dir = fixtures::tempDir("cli-missing");
  auto r = cli({"--json", "search", "--project", (dir / "none.json").string(), "brake"});
  EXPECT_EQ(r.code, kExitUserError);
  const auto env = r.envelope();
  EXPECT_EQ(env["command"], "search");
  EXPECT_EQ(env["ok"], false);
  EXPECT_EQ(env["error"]["error"], "PathNotFound");
  r = cli({"search", "--project", (dir / "none.json").string(), "brake"});
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("PathNotFound"), std::string::npos);
}

TEST(Cli, InternalFailureExitsTwo) {
  // A non-empty directory as the output file makes the final rename fail.
  const auto dir = fixtures::tempDir("cli-internal");
  fixtures::writeSyntheticCodebase(dir / "code", 3);
  fs::create_directories(dir / "out.json");
  writeFile(dir / "out.json" / "keep", "x");
  const auto r = cli({"--quiet", "onboard", "--dir", (dir / "code").string(), "--out", (dir / "out.json").string()});
  EXPECT_EQ(r.code, kExitInternal) << r.err;
}

TEST(Cli, JsonEnvelopeAndExport) {
  const auto dir = fixtures::tempDir("cli-export");
  const auto file = dir / "w.json";
  saveProject(fixtures::walkthroughProject(), file);
  auto r = cli({"--json", "export", "--project", file.string()});
  ASSERT_EQ(r.code, kExitOk);
  const auto env = r.envelope();
  EXPECT_EQ(env["ok"], true);
  EXPECT_EQ(env["result"]["content"], readFile(file));
  r = cli({"export", "--project", file.string(), "--format", "matrix-csv"});
  EXPECT_EQ(r.out.rfind("child_id,parent_id\r\n", 0), 0u);
  r = cli({"--json", "export", "--project", file.string(), "--format", "yaml"});
  EXPECT_EQ(r.code, kExitUserError);
  EXPECT_EQ(r.envelope()["error"]["error"], "InvalidParams");
}

TEST(Cli, HealthWithScriptedContradictions) {
  const auto dir = fixtures::tempDir("cli-health");
  const auto file = dir / "w.json";
  const auto table = dir / "contradictions.csv";
  saveProject(fixtures::walkthroughProject(), file);
  writeFile(table, fixtures::walkthroughContradictionsCsv());
  auto r = cli({"--json", "--mock-contradictions", table.string(), "health", "--project", file.string(), "R1"});
  ASSERT_EQ(r.code, kExitOk) << r.out;
  std::set<std::string> kinds;
  const auto env = r.envelope();
  for (const auto& f : env["result"]["findings"]) kinds.insert(f["kind"].get<std::string>());
  EXPECT_TRUE(kinds.count("contradiction"));
  EXPECT_TRUE(kinds.count("cited-concept"));
  // Findings were persisted.
  EXPECT_FALSE(loadProject(file).findings().empty());
  r = cli({"health", "--project", file.string()});
  EXPECT_EQ(r.code, kExitUserError);
}

TEST(Cli, OnboardBuildsConnectedHierarchyDeterministically) {
  const auto dir = fixtures::tempDir("cli-onboard");
  fixtures::writeSyntheticCodebase(dir / "code", 30);
  const auto a = dir / "a.json";
  const auto b = dir / "b.json";
  auto r = cli({"--quiet", "onboard", "--dir", (dir / "code").string(), "--out", a.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("Imported 30 code file(s)"), std::string::npos);
  ASSERT_EQ(cli({"--quiet", "onboard", "--dir", (dir / "code").string(), "--out", b.string()}).code, kExitOk);
  EXPECT_EQ(readFile(a), readFile(b));
  const auto p = loadProject(a);
  std::vector<std::string> features;
  std::size_t code = 0;
  for (const auto& [id, art] : p.artifacts()) {
    if (art.type == "Feature") features.push_back(id);
  }
  ASSERT_FALSE(features.empty());
  for (const auto& [id, art] : p.artifacts()) {
    if (art.type != kCodeType) continue;
    ++code;
    EXPECT_FALSE(art.summary.value_or("").empty()) << id;
    bool reached = false;
    for (const auto& f : features) reached = reached || fixtures::reaches(p, id, f);
    EXPECT_TRUE(reached) << id;
  }
  EXPECT_EQ(code, 30u);
  EXPECT_TRUE(p.summary().has_value());
}

// The same sequence of operations through the CLI and through the REST API
// yields the same project.
TEST(Cli, MatchesRestApi) {
  const auto dir = fixtures::tempDir("cli-golden");
  const auto file = dir / "golden.json";
  writeFile(dir / "table.csv", kTable);
  writeFile(dir / "matrix.csv", kMatrix);
  const auto pf = file.string();
  auto ok = [](const CliRun& r) { ASSERT_EQ(r.code, kExitOk) << r.out << r.err; };
  ok(cli({"--quiet", "import", "--project", pf, "--table", (dir / "table.csv").string()}));
  ok(cli({"--quiet", "import", "--project", pf, "--matrix", (dir / "matrix.csv").string()}));
  ok(cli({"--quiet", "trace", "--project", pf, "--child", "Code", "--parent", "Requirement", "--threshold",
          "0.05"}));
  ok(cli({"review", "--project", pf, "--child-id", "src/brake.cpp", "--parent-id", "R1", "--decision", "approve",
          "--reviewer", "qa"}));
  ok(cli({"concepts", "--project", pf, "--add", "Obstacle", "--definition", "Anything in the path"}));
  ok(cli({"flag", "--project", pf, "R2", "--note", "check disk"}));
  ok(cli({"health", "--project", pf, "R1"}));

  Engine engine(EngineOptions{});
  Server server(engine);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.serve(); });
  httplib::Client c("127.0.0.1", port);
  c.set_read_timeout(30, 0);
  auto post = [&](const std::string& path, const json& body) {
    auto res = c.Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (res) EXPECT_LT(res->status, 300) << path << " " << res->body;
  };
  for (int i = 0; i < 200 && !c.Get("/projects"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  post("/projects", {{"name", "golden"}});
  const std::string P = "/projects/golden";
  post(P + "/import/table?wait=true", {{"path", fs::absolute(dir / "table.csv").string()}});
  post(P + "/import/matrix?wait=true", {{"path", fs::absolute(dir / "matrix.csv").string()}});
  post(P + "/jobs?wait=true", {{"kind", "predict-links"},
                               {"params", {{"childTypes", "Code"}, {"parentTypes", "Requirement"},
                                           {"threshold", 0.05}}}});
  post(P + "/links/review", {{"childId", "src/brake.cpp"}, {"parentId", "R1"}, {"decision", "approve"},
                             {"reviewer", "qa"}});
  post(P + "/concepts", {{"term", "Obstacle"}, {"definition", "Anything in the path"}});
  post(P + "/artifacts/R2/flag", {{"note", "check disk"}});
  post(P + "/artifacts/R1/health", json::object());
  auto res = c.Get(P);
  server.stop();
  t.join();
  ASSERT_TRUE(res);
  const auto api = withoutClock(json::parse(res->body));
  const auto viaCli = withoutClock(json::parse(readFile(file)));
  EXPECT_EQ(api, viaCli) << api.dump(1) << "\n---\n" << viaCli.dump(1);
  EXPECT_FALSE(viaCli["links"].empty());
}
