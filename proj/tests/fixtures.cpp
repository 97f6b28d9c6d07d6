#include "fixtures.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>

namespace fs = std::filesystem;
using namespace root;

namespace fixtures {

Project walkthroughProject() {
  Project p("walkthrough", "Job service");
  const auto req = [&](const char* id, const char* body) {
    Artifact a;
    a.id = id;
    a.type = kRequirement;
    a.name = id;
    a.body = body;
    p.upsertArtifact(a, UpsertMode::create);
  };
  req("R1",
      "The system shall be able to save some entities to the database, perform a job, and return "
      "the result of the job to the user in under 1 minute.");
  req("R2", "The system shall record every database entity that a job creates so that results can be audited.");
  req("R3", "The system shall notify the user when a job fails and keep each database entity unchanged.");
  req("R4", "Saving entities to the database shall take between 0.5 seconds to 5 seconds to complete.");
  p.addConcept({"Job", "A unit of work that the system performs on behalf of a user.", ConceptOrigin::manual, ""});
  p.addConcept({"Database Entity", "A persistent record; the system saves entities to the database and returns the result to the user.",
                ConceptOrigin::manual, ""});
  return p;
}

std::string walkthroughContradictionsCsv() {
  return "artifact_a,artifact_b,verdict,explanation\n"
         "R1,R4,yes,\"R1 allows up to 1 minute for saving entities, while R4 bounds saving entities "
         "to between 0.5 and 5 seconds.\"\n";
}

ContradictionTable walkthroughContradictions() {
  return ContradictionTable::fromCsv(walkthroughContradictionsCsv());
}

Project brakingProject() {
  Project p("autoware", "Vehicle stack");
  const auto add = [&](const char* id, const char* type, const char* name, const char* body) {
    Artifact a;
    a.id = id;
    a.type = type;
    a.name = name;
    a.body = body;
    p.upsertArtifact(a, UpsertMode::create);
  };
  add("F1", "Feature", "Braking", "Braking decelerates the vehicle safely using the brake actuators.");
  add("F2", "Feature", "Perception", "Perception detects obstacles with lidar and camera sensors.");
  add("F3", "Feature", "Localization", "Localization estimates the vehicle pose on the map.");
  add("F4", "Feature", "Obstacle tracking", "Tracks detected obstacles over time with a motion model.");
  add("FR1", "Functional Requirement", "Emergency braking",
      "The vehicle shall apply emergency braking when a collision is imminent.");
  add("FR2", "Functional Requirement", "Braking force distribution",
      "The controller shall distribute braking force between front and rear axles.");
  add("FR3", "Functional Requirement", "Lidar point filtering",
      "The perception module shall filter lidar points outside the region of interest.");
  add("FR4", "Functional Requirement", "Map matching", "The localizer shall match scans against the map.");
  add("src/control/braking_controller.cpp", kCodeType, "src/control/braking_controller.cpp",
      "// braking controller\ndouble computeBrakingForce(double speed) { return speed * 0.4; }\n");
  add("src/control/braking_monitor.cpp", kCodeType, "src/control/braking_monitor.cpp",
      "// monitors braking status\nbool brakingActive() { return status.active; }\n");
  add("src/perception/lidar_filter.cpp", kCodeType, "src/perception/lidar_filter.cpp",
      "// lidar filter\nvoid filterPoints(Cloud& cloud) { cloud.crop(roi); }\n");
  add("src/localization/matcher.cpp", kCodeType, "src/localization/matcher.cpp",
      "// scan matcher\nPose matchScan(const Scan& scan) { return ndt.align(scan); }\n");
  add("src/common/logger.cpp", kCodeType, "src/common/logger.cpp",
      "// logging helpers\nvoid logMessage(const char* text) { sink.write(text); }\n");
  const auto link = [&](const char* c, const char* parent) { p.addLink(c, parent, LinkStatus::approved); };
  link("FR1", "F1");
  link("FR2", "F1");
  link("FR3", "F2");
  link("FR4", "F3");
  link("src/control/braking_controller.cpp", "FR2");
  link("src/control/braking_monitor.cpp", "FR1");
  link("src/perception/lidar_filter.cpp", "FR3");
  link("src/localization/matcher.cpp", "FR4");
  return p;
}

std::vector<std::string> brakingSubtree() {
  return {"F1", "FR1", "FR2", "src/control/braking_controller.cpp", "src/control/braking_monitor.cpp"};
}

void writeSyntheticCodebase(const fs::path& root, std::size_t fileCount) {
  struct Subsystem {
    const char* dir;
    const char* topic;
    std::vector<const char*> words;
  };
  const std::vector<Subsystem> subsystems = {
      {"brake", "brake control", {"brake", "pressure", "actuator", "torque", "deceleration", "pedal"}},
      {"camera", "camera capture", {"camera", "frame", "exposure", "lens", "image", "shutter"}},
      {"lidar", "lidar processing", {"lidar", "point", "cloud", "scan", "voxel", "intensity"}},
      {"planner", "route planning", {"route", "waypoint", "trajectory", "planner", "lane", "cost"}},
      {"logging", "log output", {"log", "message", "severity", "sink", "timestamp", "rotate"}},
      {"network", "network transport", {"socket", "packet", "connection", "retry", "endpoint", "buffer"}},
  };
  for (std::size_t i = 0; i < fileCount; ++i) {
    const auto& s = subsystems[i % subsystems.size()];
    const auto n = i / subsystems.size();
    const auto dir = root / "src" / s.dir;
    fs::create_directories(dir);
    const auto w = [&](std::size_t k) { return std::string(s.words[(n + k) % s.words.size()]); };
    std::ofstream out(dir / (std::string(s.dir) + "_" + w(0) + "_" + std::to_string(n) + ".cpp"));
    if (n % 2 == 0) out << "// " << s.topic << ": " << w(0) << " " << w(1) << " handling\n";
    out << "#include \"" << s.dir << ".hpp\"\n\n"
        << "namespace " << s.dir << " {\n\n"
        << "double update" << char(std::toupper(w(0)[0])) << w(0).substr(1) << "(double " << w(1)
        << ", double " << w(2) << ") {\n"
        << "  const double " << w(3) << " = " << w(1) << " * " << w(2) << ";\n"
        << "  return " << w(3) << " + " << w(4) << "_" << w(5) << "(" << w(0) << "_state);\n"
        << "}\n\n}  // namespace " << s.dir << "\n";
  }
}

namespace {

std::string randomText(std::mt19937_64& rng, std::size_t maxWords) {
  static const std::vector<std::string> words = {
      "brake", "sensor", "the", "shall", "job", "database", "entity", "camera", "frame", "route",
      "controller", "\xC3\xA9t\xC3\xA9", "\xE2\x82\xAC", "quote\"d", "comma,", "line\nbreak", "tab\t", "\xF0\x9F\x9A\x97"};
  std::uniform_int_distribution<std::size_t> count(0, maxWords);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::string out;
  for (std::size_t i = 0, n = count(rng); i < n; ++i) {
    if (i) out += ' ';
    out += words[pick(rng)];
  }
  return out;
}

bool coin(std::mt19937_64& rng) { return std::bernoulli_distribution(0.5)(rng); }

}  // namespace

Project randomProject(std::mt19937_64& rng, std::size_t maxArtifacts) {
  Project p("p" + std::to_string(rng() % 1000), "Random " + randomText(rng, 3));
  static const std::vector<std::string> types = {"Code", "Requirement", "Functional Requirement", "Feature"};
  const std::size_t n = 1 + rng() % maxArtifacts;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    Artifact a;
    a.type = types[rng() % types.size()];
    a.id = coin(rng) ? p.nextGeneratedId(a.type) : "art/" + std::to_string(i);
    a.name = "n" + std::to_string(i) + " " + randomText(rng, 3);
    a.body = randomText(rng, 12);
    if (coin(rng)) a.summary = randomText(rng, 5);
    if (coin(rng)) a.flagged = "check " + randomText(rng, 2);
    a.provenance = static_cast<Provenance>(rng() % 3);
    for (std::size_t k = 0, m = rng() % 3; k < m; ++k) a.attributes["attr" + std::to_string(k)] = randomText(rng, 2);
    p.upsertArtifact(a, UpsertMode::create);
    ids.push_back(a.id);
  }
  // Links always point from a lower to a higher position: acyclic by construction.
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (rng() % 4 != 0) continue;
      TraceLink l;
      l.childId = ids[i];
      l.parentId = ids[j];
      l.status = static_cast<LinkStatus>(rng() % 4);
      l.createdBy = l.status == LinkStatus::manual ? LinkOrigin::user : static_cast<LinkOrigin>(rng() % 4);
      if (coin(rng) || l.status == LinkStatus::pending)
        l.score = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      if (coin(rng)) l.explanation = randomText(rng, 6);
      if (l.status == LinkStatus::approved || l.status == LinkStatus::rejected) {
        l.reviewedBy = "reviewer";
        l.reviewedAt = "2024-05-01T10:00:00.000Z";
      }
      p.addLink(l);
    }
  }
  for (std::size_t c = 0, m = rng() % 3; c < m; ++c) {
    const auto term = "Term" + std::to_string(c) + " " + randomText(rng, 1);
    if (!p.findConcept(term)) p.addConcept({term, randomText(rng, 4), static_cast<ConceptOrigin>(rng() % 2), ""});
  }
  for (std::size_t f = 0, m = rng() % 4; f < m; ++f) {
    HealthFinding h;
    h.id = p.nextFindingId();
    h.artifactId = ids[rng() % ids.size()];
    h.kind = static_cast<FindingKind>(rng() % 5);
    h.subject = h.kind == FindingKind::contradiction ? ids[rng() % ids.size()] : "term " + std::to_string(f);
    h.explanation = randomText(rng, 5);
    h.state = static_cast<FindingState>(rng() % 3);
    p.upsertFinding(h);
  }
  if (coin(rng)) {
    ProjectSummary s;
    s.overview = randomText(rng, 8);
    for (std::size_t k = 0, m = rng() % 3; k < m; ++k) s.subsystems.push_back({randomText(rng, 2), randomText(rng, 5)});
    for (std::size_t k = 0, m = rng() % 4; k < m; ++k) s.entities.push_back(randomText(rng, 1));
    for (std::size_t k = 0, m = rng() % 3; k < m; ++k) s.features.push_back(randomText(rng, 2));
    s.dataFlow = randomText(rng, 6);
    p.setSummary(s);
  }
  return p;
}

fs::path tempDir(const std::string& tag) {
  static std::mt19937_64 rng{std::random_device{}()};
  auto dir = fs::temp_directory_path() / ("root-test-" + tag + "-" + std::to_string(rng() % 1000000000));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

namespace {

std::map<std::string, std::vector<std::string>> activeEdges(const Project& project) {
  std::map<std::string, std::vector<std::string>> edges;
  for (const auto& [key, link] : project.links()) {
    if (link.status != LinkStatus::rejected) edges[link.childId].push_back(link.parentId);
  }
  return edges;
}

}  // namespace

bool hasCycle(const Project& project) {
  const auto edges = activeEdges(project);
  std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
  std::function<bool(const std::string&)> visit = [&](const std::string& v) {
    color[v] = 1;
    if (auto it = edges.find(v); it != edges.end()) {
      for (const auto& w : it->second) {
        if (color[w] == 1) return true;
        if (color[w] == 0 && visit(w)) return true;
      }
    }
    color[v] = 2;
    return false;
  };
  for (const auto& [id, a] : project.artifacts()) {
    if (color[id] == 0 && visit(id)) return true;
  }
  return false;
}

bool reaches(const Project& project, const std::string& from, const std::string& to) {
  const auto edges = activeEdges(project);
  std::set<std::string> seen{from};
  std::vector<std::string> stack{from};
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    if (auto it = edges.find(v); it != edges.end()) {
      for (const auto& w : it->second) {
        if (seen.insert(w).second) stack.push_back(w);
      }
    }
  }
  return false;
}

}  // namespace fixtures
