#include "root/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "root/csv.hpp"
#include "root/docgen.hpp"
#include "root/engine.hpp"
#include "root/query.hpp"
#include "root/serialization.hpp"
#include "root/server.hpp"
#include "root/trace.hpp"
#include "root/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace root {

namespace {

constexpr const char* kFunctionalRequirement = "Functional Requirement";
constexpr const char* kFeature = "Feature";

ErrorCode codeFromName(std::string_view name) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::Internal); ++c) {
    if (to_string(static_cast<ErrorCode>(c)) == name) return static_cast<ErrorCode>(c);
  }
  return ErrorCode::Internal;
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct GlobalOptions {
  std::string project;
  bool json = false;
  bool quiet = false;
  std::string mockContradictions;
};

// One CLI run: an in-process engine plus the project file it works on.
class Session {
 public:
  Session(const GlobalOptions& options, std::ostream& err) : options_(options), err_(err) {}

  Engine& engine() {
    if (!engine_) {
      EngineOptions eo;
      eo.workers = 1;
      ContradictionTable table;
      if (!options_.mockContradictions.empty()) {
        table = ContradictionTable::fromFile(options_.mockContradictions);
      }
      eo.provider = makeGenerationProvider(endpointFromEnvironment(), std::move(table));
      engine_ = std::make_unique<Engine>(std::move(eo));
    }
    return *engine_;
  }

  /// Loads the --project file (or starts a new project when allowed).
  const std::string& open(bool createIfMissing, const std::string& name = {}) {
    if (!projectId_.empty()) return projectId_;
    if (options_.project.empty()) {
      throw Error(ErrorCode::InvalidParams, "--project <file> is required", "--project");
    }
    path_ = options_.project;
    if (fs::exists(path_)) {
      auto project = loadProject(path_);
      projectId_ = project.id();
      engine().adoptProject(std::move(project));
    } else if (createIfMissing) {
      projectId_ = engine().createProject({}, name.empty() ? path_.stem().string() : name);
    } else {
      throw Error(ErrorCode::PathNotFound, "project file not found: " + path_.string(), path_.string());
    }
    return projectId_;
  }

  /// Starts a fresh project that will be written to `path`.
  const std::string& fresh(const fs::path& path, const std::string& name) {
    path_ = path;
    projectId_ = engine().createProject({}, name);
    return projectId_;
  }

  void save() {
    if (projectId_.empty()) return;
    engine().store().read(projectId_, [&](const Project& p) { saveProject(p, path_); });
  }

  template <typename Fn>
  auto read(Fn&& fn) {
    return engine().store().read(projectId_, std::forward<Fn>(fn));
  }

  template <typename Fn>
  auto write(Fn&& fn) {
    return engine().store().write(projectId_, std::forward<Fn>(fn));
  }

  /// Runs a job to completion, rendering progress; throws its error.
  json job(std::string_view kind, json params) {
    auto& eng = engine();
    const auto id = eng.submit(projectId_, kind, std::move(params));
    auto sub = eng.jobs().subscribe(id);
    int shown = -1;
    while (true) {
      auto event = sub->next(std::chrono::milliseconds(100));
      if (!event) {
        if (sub->ended()) break;
        continue;
      }
      const int percent = static_cast<int>(event->progress * 100.0 + 0.5);
      if (!options_.quiet && !options_.json && percent != shown) {
        shown = percent;
        err_ << '\r' << kind << ": " << percent << "%" << std::flush;
      }
    }
    if (!options_.quiet && !options_.json && shown >= 0) err_ << '\n';
    const auto snap = eng.jobs().status(id);
    if (snap.state == JobState::completed) return snap.result.value_or(json::object());
    if (snap.state == JobState::cancelled) throw Error(ErrorCode::Cancelled, "job cancelled");
    const auto error = snap.error.value_or("Internal: job failed");
    const auto colon = error.find(':');
    const auto code = codeFromName(error.substr(0, colon));
    const auto message = colon == std::string::npos ? error : error.substr(colon + 2);
    throw Error(code, message);
  }

 private:
  const GlobalOptions& options_;
  std::ostream& err_;
  std::unique_ptr<Engine> engine_;
  std::string projectId_;
  fs::path path_;
};

struct Command {
  std::function<json(Session&)> action;
  std::function<void(const json&, std::ostream&)> render;
};

void printLinks(const json& links, std::ostream& out) {
  out << links.size() << " pending link(s)\n";
  for (const auto& l : links) {
    out << "  " << l["childId"].get<std::string>() << " -> " << l["parentId"].get<std::string>()
        << "  score " << fixed(l["score"].get<double>());
    if (l.contains("explanation")) out << "  " << l["explanation"].get<std::string>();
    out << '\n';
  }
}

void printFindings(const json& findings, std::ostream& out) {
  if (findings.empty()) out << "no open findings\n";
  for (const auto& f : findings) {
    const auto id = f["id"].get<std::string>();
    out << (id.empty() ? std::string("-") : id) << "  " << f["kind"].get<std::string>() << "  "
        << f["subject"].get<std::string>() << "  " << f["explanation"].get<std::string>() << '\n';
  }
}

// Guards the `serve` loop so Ctrl-C shuts the server down cleanly.
std::atomic<Server*> gServing{nullptr};
extern "C" void onSignal(int) {
  if (auto* s = gServing.load()) s->stop();
}

}  // namespace

int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Traceability, documentation and requirement health for software projects", "root"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--project", g.project, "Project file (canonical JSON)");
  app.add_flag("--json", g.json, "Emit one JSON document on standard output");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.add_option("--mock-contradictions", g.mockContradictions,
                 "CSV artifact_a,artifact_b,verdict,explanation scripting the offline provider")
      ->check(CLI::ExistingFile);

  std::string commandName;
  Command command;
  const auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->callback([&commandName, name] { commandName = name; });
    return s;
  };

  // onboard
  std::string dir, outFile, name;
  std::vector<std::string> includes, excludes;
  double tau = kDefaultClusterTau;
  {
    auto* s = sub("onboard", "Import a codebase, summarise it and generate Functional Requirements and Features");
    s->add_option("--dir", dir, "Working tree to import")->required()->check(CLI::ExistingDirectory);
    s->add_option("--out", outFile, "Project file to write (defaults to --project)");
    s->add_option("--name", name, "Project name (defaults to the directory name)");
    s->add_option("--include", includes, "Glob of files to import (repeatable)");
    s->add_option("--exclude", excludes, "Glob of files to skip (repeatable)");
    s->add_option("--tau", tau, "Clustering threshold")->check(CLI::Range(0.0, 1.0));
  }

  // import
  std::string table, matrix;
  bool includeHidden = false;
  {
    auto* s = sub("import", "Import a directory, an artifact table or a trace matrix");
    s->add_option("--dir", dir, "Working tree to import")->check(CLI::ExistingDirectory);
    s->add_option("--table", table, "Artifact table (CSV id,type,name,body or JSON array)")->check(CLI::ExistingFile);
    s->add_option("--matrix", matrix, "Trace matrix (CSV child_id,parent_id)")->check(CLI::ExistingFile);
    s->add_option("--name", name, "Project name when the project file is new");
    s->add_option("--include", includes, "Glob of files to import (repeatable)");
    s->add_option("--exclude", excludes, "Glob of files to skip (repeatable)");
    s->add_flag("--include-hidden", includeHidden, "Descend into hidden directories");
  }

  // summarize
  bool noFiles = false, noOverview = false;
  std::string fileId;
  {
    auto* s = sub("summarize", "Summarise code files and the whole project");
    s->add_option("--file", fileId, "Summarise one Code artifact only");
    s->add_flag("--no-files", noFiles, "Skip per-file summaries");
    s->add_flag("--no-project-summary", noOverview, "Skip the project summary");
  }

  // gen-docs
  std::string source = kCodeType, target;
  std::size_t maxCluster = kDefaultMaxClusterSize;
  {
    auto* s = sub("gen-docs", "Generate one documentation layer above an artifact type");
    s->add_option("--source", source, "Source artifact type")->capture_default_str();
    s->add_option("--target", target, "Type of the generated artifacts")->required();
    s->add_option("--tau", tau, "Clustering threshold")->check(CLI::Range(0.0, 1.0));
    s->add_option("--max-cluster-size", maxCluster, "Largest cluster")->check(CLI::PositiveNumber);
  }

  // trace
  std::vector<std::string> childTypes, parentTypes;
  double threshold = kDefaultTraceThreshold;
  std::size_t maxPerChild = kDefaultMaxPerChild;
  bool explain = false;
  {
    auto* s = sub("trace", "Predict trace links between artifact types (added as pending)");
    s->add_option("--child", childTypes, "Child artifact type (repeatable)")->required();
    s->add_option("--parent", parentTypes, "Parent artifact type (repeatable)")->required();
    s->add_option("--threshold", threshold, "Minimum cosine score")->check(CLI::Range(0.0, 1.0));
    s->add_option("--max-per-child", maxPerChild, "Links proposed per child")->check(CLI::PositiveNumber);
    s->add_flag("--explain", explain, "Ask the provider to explain each new link");
  }

  // review
  std::string childId, parentId, decision, reviewer;
  {
    auto* s = sub("review", "Approve or reject a pending trace link");
    s->add_option("--child-id", childId, "Child artifact id")->required();
    s->add_option("--parent-id", parentId, "Parent artifact id")->required();
    s->add_option("--decision", decision, "approve or reject")->required();
    s->add_option("--reviewer", reviewer, "Reviewer name");
  }

  // health
  std::vector<std::string> artifactIds;
  bool all = false;
  {
    auto* s = sub("health", "Run requirement health checks");
    s->add_option("artifacts", artifactIds, "Artifact ids to check");
    s->add_flag("--all", all, "Check every natural-language artifact");
  }

  // findings
  std::string findingId, action, findingArtifact;
  {
    auto* s = sub("findings", "List health findings, or close one with --resolve");
    s->add_option("--artifact", findingArtifact, "Only findings of this artifact");
    s->add_option("--resolve", findingId, "Finding id to close");
    s->add_option("--action", action, "resolve, dismiss or promote-term")->default_val("resolve");
  }

  // concepts
  std::string addTerm, definition, removeTerm;
  bool extract = false, promoteAll = false;
  std::size_t topN = kDefaultCandidateCount;
  {
    auto* s = sub("concepts", "List, add, remove or extract project vocabulary");
    s->add_option("--add", addTerm, "Term to add");
    s->add_option("--definition", definition, "Definition for --add");
    s->add_option("--remove", removeTerm, "Term to remove");
    s->add_flag("--extract", extract, "Show candidate terms mined from the artifacts");
    s->add_option("--top", topN, "Number of candidates")->check(CLI::PositiveNumber);
    s->add_flag("--promote-all", promoteAll, "Add every extracted candidate to the vocabulary");
  }

  // flag
  std::string flagId, note;
  {
    auto* s = sub("flag", "Attach a reviewer note to an artifact (empty note clears it)");
    s->add_option("artifact", flagId, "Artifact id")->required();
    s->add_option("--note", note, "Note text");
  }

  // chat
  std::string question;
  std::size_t k = kDefaultChatK;
  {
    auto* s = sub("chat", "Ask a question answered from the project's artifacts");
    s->add_option("question", question, "Question")->required();
    s->add_option("-k", k, "Artifacts retrieved as context");
  }

  // search
  std::string queryText, filterType, filterStatus, sortKey = "score";
  std::optional<bool> filterFlagged;
  std::size_t limit = 0;
  {
    auto* s = sub("search", "Fuzzy search over artifact names and bodies");
    s->add_option("query", queryText, "Search text");
    s->add_option("--type", filterType, "Only this artifact type");
    s->add_option("--status", filterStatus, "Only artifacts in a link with this status");
    s->add_option("--flagged", filterFlagged, "true or false");
    s->add_option("--sort", sortKey, "score, id, name or type")->capture_default_str();
    s->add_option("--limit", limit, "Maximum rows (0 = all)");
  }

  // export
  std::string format = "json";
  {
    auto* s = sub("export", "Write the project as canonical JSON, an artifact table or a trace matrix");
    s->add_option("--out", outFile, "Output file (standard output when omitted)");
    s->add_option("--format", format, "json, artifacts-csv or matrix-csv")->capture_default_str();
  }

  // serve
  std::string host = "127.0.0.1", dataDir;
  int port = 8080;
  {
    auto* s = sub("serve", "Serve the REST API");
    s->add_option("--host", host, "Bind address")->capture_default_str();
    s->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
    s->add_option("--data-dir", dataDir, "Directory for project files and jobs.json");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUserError;
  }

  const auto directoryParams = [&](const std::string& path) {
    json p = {{"source", "directory"}, {"path", fs::absolute(path).string()}};
    if (!includes.empty()) p["include"] = includes;
    if (!excludes.empty()) p["exclude"] = excludes;
    if (includeHidden) p["includeHidden"] = true;
    return p;
  };

  if (commandName == "onboard") {
    command.action = [&](Session& s) {
      if (outFile.empty()) outFile = g.project;
      if (outFile.empty()) throw Error(ErrorCode::InvalidParams, "--out <file> is required", "--out");
      const auto dirName = fs::absolute(dir).lexically_normal().filename().string();
      s.fresh(outFile, name.empty() ? (dirName.empty() ? "project" : dirName) : name);
      json result;
      result["import"] = s.job("import", directoryParams(dir));
      result["summarize"] = s.job("summarize", {{"tau", tau}});
      result["requirements"] =
          s.job("generate-layer", {{"sourceType", kCodeType}, {"targetType", kFunctionalRequirement}, {"tau", tau}});
      result["features"] = s.job("generate-layer",
                                 {{"sourceType", kFunctionalRequirement}, {"targetType", kFeature}, {"tau", tau}});
      s.save();
      result["projectFile"] = outFile;
      return result;
    };
    command.render = [](const json& r, std::ostream& o) {
      o << "Imported " << r["import"]["artifactsCreated"].get<std::size_t>() << " code file(s), summarised "
        << r["summarize"]["filesSummarized"].get<std::size_t>() << ", generated "
        << r["requirements"]["artifactIds"].size() << " " << kFunctionalRequirement << "(s) and "
        << r["features"]["artifactIds"].size() << " " << kFeature << "(s).\n"
        << "Saved " << r["projectFile"].get<std::string>() << '\n';
    };
  } else if (commandName == "import") {
    command.action = [&](Session& s) {
      const int sources = !dir.empty() + !table.empty() + !matrix.empty();
      if (sources != 1) {
        throw Error(ErrorCode::InvalidParams, "give exactly one of --dir, --table, --matrix");
      }
      s.open(true, name);
      json params = !dir.empty() ? directoryParams(dir)
                                 : json{{"source", table.empty() ? "matrix" : "table"},
                                        {"path", fs::absolute(table.empty() ? matrix : table).string()}};
      auto result = s.job("import", std::move(params));
      s.save();
      return result;
    };
    command.render = [](const json& r, std::ostream& o) {
      o << "created " << r["artifactsCreated"] << ", updated " << r["artifactsUpdated"] << ", links "
        << r["linksCreated"] << ", skipped " << r["skippedFiles"].size() << '\n';
      for (const auto& w : r["warnings"]) o << "warning: " << w.get<std::string>() << '\n';
    };
  } else if (commandName == "summarize") {
    command.action = [&](Session& s) {
      s.open(false);
      if (!fileId.empty()) {
        auto& provider = s.engine().provider();
        auto text = s.write([&](Project& p) { return summarizeFile(p, fileId, provider); });
        s.save();
        return json{{"filesSummarized", 1}, {"file", fileId}, {"text", text}};
      }
      auto result = s.job("summarize", {{"files", !noFiles}, {"project", !noOverview}});
      s.save();
      return result;
    };
    command.render = [](const json& r, std::ostream& o) {
      o << "summarised " << r["filesSummarized"] << " file(s)\n";
      if (r.contains("text")) o << r["text"].get<std::string>() << '\n';
      if (r.contains("summary")) o << r["summary"]["overview"].get<std::string>() << '\n';
    };
  } else if (commandName == "gen-docs") {
    command.action = [&](Session& s) {
      s.open(false);
      auto result = s.job("generate-layer", {{"sourceType", source},
                                             {"targetType", target},
                                             {"tau", tau},
                                             {"maxClusterSize", maxCluster}});
      s.save();
      return result;
    };
    command.render = [&](const json& r, std::ostream& o) {
      o << "generated " << r["artifactIds"].size() << " " << target << " artifact(s), "
        << r["links"].size() << " link(s)\n";
      for (const auto& id : r["artifactIds"]) o << "  " << id.get<std::string>() << '\n';
    };
  } else if (commandName == "trace") {
    command.action = [&](Session& s) {
      s.open(false);
      auto result = s.job("predict-links", {{"childTypes", childTypes},
                                            {"parentTypes", parentTypes},
                                            {"threshold", threshold},
                                            {"maxPerChild", maxPerChild},
                                            {"explain", explain}});
      s.save();
      return result;
    };
    command.render = [](const json& r, std::ostream& o) { printLinks(r["links"], o); };
  } else if (commandName == "review") {
    command.action = [&](Session& s) {
      s.open(false);
      const auto d = parseDecision(decision);
      auto link = s.write([&](Project& p) {
        reviewLink(p, childId, parentId, d, reviewer);
        return json(*p.findLink(childId, parentId));
      });
      s.save();
      return link;
    };
    command.render = [](const json& r, std::ostream& o) {
      o << r["childId"].get<std::string>() << " -> " << r["parentId"].get<std::string>() << ": "
        << r["status"].get<std::string>() << '\n';
    };
  } else if (commandName == "health") {
    command.action = [&](Session& s) {
      s.open(false);
      if (all == !artifactIds.empty()) {
        throw Error(ErrorCode::InvalidParams, "give artifact ids or --all");
      }
      if (all) {
        auto result = s.job("health-sweep", json::object());
        s.save();
        result["findings"] = s.read([](const Project& p) {
          json open = json::array();
          for (const auto& [id, f] : p.findings()) {
            if (f.state == FindingState::open) open.push_back(f);
          }
          return open;
        });
        return result;
      }
      auto& provider = s.engine().provider();
      json findings = json::array();
      for (const auto& id : artifactIds) {
        for (auto& f : s.write([&](Project& p) { return healthCheck(p, id, provider); })) {
          findings.push_back(f);
        }
      }
      s.save();
      return json{{"findings", findings}};
    };
    command.render = [](const json& r, std::ostream& o) { printFindings(r["findings"], o); };
  } else if (commandName == "findings") {
    command.action = [&](Session& s) {
      s.open(false);
      if (!findingId.empty()) {
        const auto act = parseFindingAction(action);
        auto f = s.write([&](Project& p) {
          resolveFinding(p, findingId, act);
          return json(*p.findFinding(findingId));
        });
        s.save();
        return json{{"findings", json::array({f})}};
      }
      return json{{"findings", s.read([&](const Project& p) {
                     json rows = json::array();
                     for (const auto& [id, f] : p.findings()) {
                       if (findingArtifact.empty() || f.artifactId == findingArtifact) rows.push_back(f);
                     }
                     return rows;
                   })}};
    };
    command.render = [](const json& r, std::ostream& o) {
      for (const auto& f : r["findings"]) {
        o << f["id"].get<std::string>() << "  " << f["state"].get<std::string>() << "  "
          << f["artifactId"].get<std::string>() << "  " << f["kind"].get<std::string>() << "  "
          << f["subject"].get<std::string>() << '\n';
      }
    };
  } else if (commandName == "concepts") {
    command.action = [&](Session& s) {
      s.open(false);
      json result;
      if (!addTerm.empty()) {
        s.write([&](Project& p) { addConcept(p, addTerm, definition); });
        result["added"] = json::array({addTerm});
      }
      if (!removeTerm.empty()) {
        s.write([&](Project& p) { p.removeConcept(removeTerm); });
        result["removed"] = removeTerm;
      }
      if (extract || promoteAll) {
        auto extracted = s.job("extract-concepts", {{"topN", topN}, {"add", promoteAll}});
        result["candidates"] = extracted["candidates"];
        if (promoteAll) result["added"] = extracted["added"];
      }
      s.save();
      result["concepts"] = s.read([](const Project& p) { return json(p.concepts()); });
      return result;
    };
    command.render = [](const json& r, std::ostream& o) {
      if (r.contains("candidates")) {
        o << "candidates:\n";
        for (const auto& c : r["candidates"]) {
          o << "  " << c["term"].get<std::string>() << "  " << fixed(c["score"].get<double>()) << '\n';
        }
      }
      o << "vocabulary:\n";
      for (const auto& c : r["concepts"]) {
        o << "  " << c["term"].get<std::string>() << "  (" << c["artifactId"].get<std::string>() << ")";
        const auto def = c["definition"].get<std::string>();
        if (!def.empty()) o << "  " << def;
        o << '\n';
      }
    };
  } else if (commandName == "flag") {
    command.action = [&](Session& s) {
      s.open(false);
      auto a = s.write([&](Project& p) {
        flagArtifact(p, flagId, note);
        return json(p.artifact(flagId));
      });
      s.save();
      return a;
    };
    command.render = [](const json& r, std::ostream& o) {
      o << r["id"].get<std::string>() << ": "
        << (r.contains("flagged") ? r["flagged"].get<std::string>() : std::string("flag cleared")) << '\n';
    };
  } else if (commandName == "chat") {
    command.action = [&](Session& s) {
      s.open(false);
      auto& provider = s.engine().provider();
      const auto answer = s.read([&](const Project& p) { return chatQuery(p, question, k, provider); });
      return json{{"text", answer.text},
                  {"citedArtifactIds", answer.citedArtifactIds},
                  {"usedK", answer.usedK},
                  {"providerAvailable", answer.providerAvailable}};
    };
    command.render = [](const json& r, std::ostream& o) {
      const auto text = r["text"].get<std::string>();
      o << (text.empty() ? std::string("(the generation provider is unavailable)") : text) << '\n';
      if (!r["citedArtifactIds"].empty()) {
        o << "Sources:";
        for (const auto& id : r["citedArtifactIds"]) o << ' ' << id.get<std::string>();
        o << '\n';
      }
    };
  } else if (commandName == "search") {
    command.action = [&](Session& s) {
      s.open(false);
      SearchFilters filters;
      if (!filterType.empty()) filters.type = filterType;
      if (!filterStatus.empty()) filters.status = parse_enum<LinkStatus>(filterStatus);
      filters.flagged = filterFlagged;
      const auto sort = parseSearchSort(sortKey);
      json rows = json::array();
      s.read([&](const Project& p) {
        for (const auto& r : searchArtifacts(p, queryText, filters, sort, limit)) {
          rows.push_back({{"id", r.id}, {"type", r.type}, {"name", r.name}, {"score", r.score},
                          {"nameScore", r.nameScore}, {"bodyScore", r.bodyScore}, {"flagged", r.flagged}});
        }
        return 0;
      });
      return json{{"query", queryText}, {"results", rows}};
    };
    command.render = [](const json& r, std::ostream& o) {
      for (const auto& row : r["results"]) {
        o << fixed(row["score"].get<double>()) << "  " << row["id"].get<std::string>() << "  "
          << row["type"].get<std::string>() << "  " << row["name"].get<std::string>() << '\n';
      }
    };
  } else if (commandName == "export") {
    command.action = [&](Session& s) {
      s.open(false);
      std::string text = s.read([&](const Project& p) {
        if (format == "json") return serializeProject(p);
        std::ostringstream csv;
        if (format == "artifacts-csv") {
          csv << "id,type,name,body\r\n";
          for (const auto& [id, a] : p.artifacts()) {
            csv << csvField(a.id) << ',' << csvField(a.type) << ',' << csvField(a.name) << ','
                << csvField(a.body) << "\r\n";
          }
        } else if (format == "matrix-csv") {
          csv << "child_id,parent_id\r\n";
          for (const auto& [key, l] : p.links()) {
            if (l.active()) csv << csvField(l.childId) << ',' << csvField(l.parentId) << "\r\n";
          }
        } else {
          throw Error(ErrorCode::InvalidParams, "format must be json, artifacts-csv or matrix-csv", format);
        }
        return csv.str();
      });
      if (outFile.empty()) return json{{"format", format}, {"content", text}};
      std::ofstream file(outFile, std::ios::binary | std::ios::trunc);
      if (!file) throw Error(ErrorCode::PathNotFound, "cannot write " + outFile, outFile);
      file << text;
      return json{{"format", format}, {"path", outFile}, {"bytes", text.size()}};
    };
    command.render = [](const json& r, std::ostream& o) {
      if (r.contains("content")) {
        o << r["content"].get<std::string>();
      } else {
        o << "wrote " << r["bytes"] << " bytes to " << r["path"].get<std::string>() << '\n';
      }
    };
  } else if (commandName == "serve") {
    command.action = [&](Session&) -> json {
      EngineOptions eo;
      if (!dataDir.empty()) eo.dataDir = fs::path(dataDir);
      ContradictionTable scripted;
      if (!g.mockContradictions.empty()) scripted = ContradictionTable::fromFile(g.mockContradictions);
      eo.provider = makeGenerationProvider(endpointFromEnvironment(), std::move(scripted));
      Engine engine(std::move(eo));
      if (!g.project.empty() && fs::exists(g.project)) {
        auto project = loadProject(g.project);
        if (!engine.store().contains(project.id())) engine.adoptProject(std::move(project));
      }
      Server server(engine);
      const int bound = server.bind(host, port);
      if (bound < 0) {
        throw Error(ErrorCode::InvalidParams, "cannot bind " + host + ":" + std::to_string(port));
      }
      err << "listening on http://" << host << ":" << bound << std::endl;
      gServing = &server;
      auto previousInt = std::signal(SIGINT, onSignal);
      auto previousTerm = std::signal(SIGTERM, onSignal);
      server.serve();
      std::signal(SIGINT, previousInt);
      std::signal(SIGTERM, previousTerm);
      gServing = nullptr;
      return json{{"stopped", true}};
    };
    command.render = [](const json&, std::ostream&) {};
  }

  Session session(g, err);
  try {
    const auto result = command.action(session);
    if (g.json) {
      out << json{{"command", commandName}, {"ok", true}, {"result", result}}.dump(2) << '\n';
    } else {
      command.render(result, out);
    }
    return kExitOk;
  } catch (const Error& e) {
    if (g.json) {
      out << json{{"command", commandName}, {"ok", false}, {"error", errorBody(e)}}.dump(2) << '\n';
    } else {
      err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    }
    return e.code() == ErrorCode::Internal ? kExitInternal : kExitUserError;
  } catch (const std::exception& e) {
    if (g.json) {
      out << json{{"command", commandName},
                  {"ok", false},
                  {"error", {{"error", "Internal"}, {"message", e.what()}}}}
                 .dump(2)
          << '\n';
    } else {
      err << "internal error: " << e.what() << '\n';
    }
    return kExitInternal;
  }
}

}  // namespace root
