#include "root/engine.hpp"

#include <cctype>
#include <set>

#include "root/docgen.hpp"
#include "root/serialization.hpp"
#include "root/trace.hpp"
#include "root/vocab.hpp"

namespace root {

namespace {

using nlohmann::json;

[[noreturn]] void badParam(const std::string& key, const std::string& expectation) {
  throw Error(ErrorCode::InvalidParams, "parameter '" + key + "' " + expectation, key);
}

// Typed accessors over the params object. Absent keys give the fallback.
class Params {
 public:
  explicit Params(const json& p) : p_(p) {
    if (!p_.is_object()) throw Error(ErrorCode::InvalidParams, "job params must be a JSON object");
  }

  bool has(const std::string& key) const { return p_.contains(key) && !p_.at(key).is_null(); }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      badParam(key, "is required");
    }
    if (!p_.at(key).is_string()) badParam(key, "must be a string");
    return p_.at(key).get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!p_.at(key).is_boolean()) badParam(key, "must be a boolean");
    return p_.at(key).get<bool>();
  }

  double number(const std::string& key, double fallback, double lo, double hi) const {
    if (!has(key)) return fallback;
    if (!p_.at(key).is_number()) badParam(key, "must be a number");
    const double v = p_.at(key).get<double>();
    if (v < lo || v > hi) {
      badParam(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min) const {
    if (!has(key)) return fallback;
    if (!p_.at(key).is_number_integer() || p_.at(key).get<long long>() < static_cast<long long>(min)) {
      badParam(key, "must be an integer >= " + std::to_string(min));
    }
    return p_.at(key).get<std::size_t>();
  }

  // A string or an array of strings.
  std::vector<std::string> list(const std::string& key, bool required) const {
    if (!has(key)) {
      if (required) badParam(key, "is required");
      return {};
    }
    const auto& v = p_.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) badParam(key, "must be a string or an array of strings");
    std::vector<std::string> out;
    for (const auto& item : v) {
      if (!item.is_string()) badParam(key, "must be a string or an array of strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

 private:
  const json& p_;
};

std::string slugify(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "project" : out;
}

Workload importWorkload(const Params& p) {
  const auto source = p.text("source");
  if (source == "directory") {
    DirectoryImportOptions options;
    const auto path = p.text("path");
    if (p.has("include")) options.includeGlobs = p.list("include", false);
    if (p.has("exclude")) options.excludeGlobs = p.list("exclude", false);
    options.maxFileBytes = p.count("maxFileBytes", options.maxFileBytes, 1);
    options.includeHidden = p.flag("includeHidden", false);
    return [path, options](Project& project, JobContext& ctx) {
      return importReportJson(importDirectory(project, path, options, ctx.progressFn()));
    };
  }
  if (source != "table" && source != "matrix") {
    badParam("source", "must be directory, table or matrix");
  }
  if (p.has("path") == p.has("content")) badParam("path", "or 'content' must be given (not both)");
  const bool table = source == "table";
  if (p.has("path")) {
    const std::filesystem::path path = p.text("path");
    return [table, path](Project& project, JobContext& ctx) {
      ctx.checkpoint();
      return importReportJson(table ? importTable(project, path) : importTraceMatrix(project, path));
    };
  }
  const auto content = p.text("content");
  return [table, content](Project& project, JobContext& ctx) {
    ctx.checkpoint();
    return importReportJson(table ? importTableText(project, content)
                                  : importTraceMatrixText(project, content));
  };
}

}  // namespace

nlohmann::json importReportJson(const ImportReport& report) {
  json skipped = json::array();
  for (const auto& s : report.skippedFiles) skipped.push_back({{"path", s.path}, {"reason", s.reason}});
  return {{"sourceKind", to_string(report.sourceKind)},
          {"artifactsCreated", report.artifactsCreated},
          {"artifactsUpdated", report.artifactsUpdated},
          {"linksCreated", report.linksCreated},
          {"skippedFiles", skipped},
          {"warnings", report.warnings}};
}

Engine::Engine(EngineOptions options)
    : store_(options.dataDir),
      provider_(options.provider ? options.provider
                                 : makeGenerationProvider(endpointFromEnvironment())),
      embeddings_(options.embeddings ? options.embeddings
                                     : std::make_shared<HashEmbeddingProvider>()),
      jobs_(std::make_unique<JobEngine>(
          store_, options.workers,
          options.dataDir ? std::optional(*options.dataDir / "jobs.json") : std::nullopt)) {}

std::string Engine::createProject(std::string id, std::string name) {
  if (name.empty()) name = id;
  if (name.empty()) throw Error(ErrorCode::EmptyField, "project name must not be empty", "name");
  if (id.empty()) {
    const auto base = slugify(name);
    id = base;
    for (int n = 2; store_.contains(id); ++n) id = base + "-" + std::to_string(n);
  }
  store_.create(Project(id, std::move(name)));
  return id;
}

void Engine::adoptProject(Project project) { store_.create(std::move(project)); }

std::string Engine::submit(const std::string& projectId, std::string_view kind, json params) {
  const auto parsed = parseJobKind(kind);
  if (params.is_null()) params = json::object();
  auto work = workload(parsed, params);
  return jobs_->submit(projectId, parsed, std::move(params), std::move(work));
}

JobSnapshot Engine::run(const std::string& projectId, std::string_view kind, json params) {
  const auto id = submit(projectId, kind, std::move(params));
  return jobs_->wait(id);
}

Workload Engine::workload(JobKind kind, const json& params) {
  const Params p(params);
  auto provider = provider_;
  auto embeddings = embeddings_;
  switch (kind) {
    case JobKind::import:
      return importWorkload(p);

    case JobKind::summarize: {
      const bool files = p.flag("files", true);
      const bool overview = p.flag("project", true);
      const double tau = p.number("tau", kDefaultClusterTau, 0.0, 1.0);
      return [=](Project& project, JobContext& ctx) {
        json result;
        result["filesSummarized"] = 0;
        if (files) {
          result["filesSummarized"] = summarizeAllFiles(project, *provider, [&](double f) {
            ctx.progress(overview ? 0.8 * f : f);
          });
        }
        if (overview) {
          ClusterOptions options;
          options.tau = tau;
          options.embeddings = embeddings.get();
          result["summary"] = generateProjectSummary(project, *provider, options);
        }
        return result;
      };
    }

    case JobKind::generate_layer: {
      const auto source = p.text("sourceType", std::string(kCodeType));
      const auto target = p.text("targetType");
      if (target.empty()) badParam("targetType", "must not be empty");
      ClusterOptions options;
      options.tau = p.number("tau", kDefaultClusterTau, 0.0, 1.0);
      options.maxClusterSize = p.count("maxClusterSize", kDefaultMaxClusterSize, 1);
      return [=](Project& project, JobContext& ctx) {
        auto opts = options;
        opts.embeddings = embeddings.get();
        const auto layer = generateLayer(project, source, target, *provider, opts, ctx.progressFn());
        json links = json::array();
        for (const auto& [c, parent] : layer.links) links.push_back({{"childId", c}, {"parentId", parent}});
        return json{{"artifactIds", layer.artifactIds}, {"links", links}};
      };
    }

    case JobKind::predict_links: {
      PredictionRequest request;
      for (auto& t : p.list("childTypes", true)) request.childTypes.insert(std::move(t));
      for (auto& t : p.list("parentTypes", true)) request.parentTypes.insert(std::move(t));
      request.threshold = p.number("threshold", kDefaultTraceThreshold, 0.0, 1.0);
      request.maxPerChild = p.count("maxPerChild", kDefaultMaxPerChild, 1);
      const bool explain = p.flag("explain", false);
      return [=](Project& project, JobContext& ctx) {
        const auto report = predictLinks(project, request, [&](double f) {
          ctx.progress(explain ? 0.5 * f : f);
        });
        json links = json::array();
        for (std::size_t i = 0; i < report.links.size(); ++i) {
          const auto& l = report.links[i];
          json row = {{"childId", l.childId}, {"parentId", l.parentId}, {"score", *l.score}};
          if (explain) {
            row["explanation"] = explainLink(project, l.childId, l.parentId, *provider);
            ctx.progress(0.5 + 0.5 * static_cast<double>(i + 1) / static_cast<double>(report.links.size()));
          }
          links.push_back(std::move(row));
        }
        return json{{"links", links},
                    {"belowThreshold", report.belowThreshold},
                    {"alreadyLinked", report.alreadyLinked},
                    {"droppedForCycle", report.droppedForCycle}};
      };
    }

    case JobKind::health_sweep: {
      const auto ids = p.list("artifactIds", false);
      return [=](Project& project, JobContext& ctx) {
        if (ids.empty()) return json{{"openFindings", healthSweep(project, *provider, ctx.progressFn())}};
        std::size_t open = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          open += healthCheck(project, ids[i], *provider).size();
          ctx.progress(static_cast<double>(i + 1) / static_cast<double>(ids.size()));
        }
        return json{{"openFindings", open}};
      };
    }

    case JobKind::extract_concepts: {
      const auto topN = p.count("topN", kDefaultCandidateCount, 1);
      const bool add = p.flag("add", false);
      return [=](Project& project, JobContext& ctx) {
        const auto candidates = extractConcepts(project, topN);
        json rows = json::array();
        json added = json::array();
        for (const auto& c : candidates) {
          rows.push_back({{"term", c.term}, {"score", c.score}, {"frequency", c.frequency},
                          {"documents", c.documents}});
          if (add) {
            ctx.checkpoint();
            addConcept(project, c.term, "", ConceptOrigin::extracted);
            added.push_back(c.term);
          }
        }
        return json{{"candidates", rows}, {"added", added}};
      };
    }
  }
  throw Error(ErrorCode::InvalidParams, "unsupported job kind");
}

}  // namespace root
