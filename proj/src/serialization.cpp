#include "root/serialization.hpp"

namespace root {

using nlohmann::json;

namespace {

template <typename T>
void putOptional(json& j, const char* key, const std::optional<T>& value) {
  if (value) j[key] = *value;
}

template <typename T>
void getOptional(const json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    out = it->get<T>();
  } else {
    out.reset();
  }
}

template <typename Enum>
Enum enumField(const json& j, const char* key) {
  return parse_enum<Enum>(j.at(key).get<std::string>());
}

}  // namespace

void to_json(json& j, const Artifact& a) {
  j = json{{"id", a.id}, {"type", a.type}, {"name", a.name}, {"body", a.body}};
  putOptional(j, "summary", a.summary);
  j["provenance"] = to_string(a.provenance);
  putOptional(j, "flagged", a.flagged);
  j["attributes"] = a.attributes;
}

void from_json(const json& j, Artifact& a) {
  a.id = j.at("id").get<std::string>();
  a.type = j.at("type").get<std::string>();
  a.name = j.at("name").get<std::string>();
  a.body = j.value("body", std::string());
  getOptional(j, "summary", a.summary);
  a.provenance = j.contains("provenance") ? enumField<Provenance>(j, "provenance")
                                          : Provenance::imported;
  getOptional(j, "flagged", a.flagged);
  a.attributes = j.value("attributes", std::map<std::string, std::string>{});
}

void to_json(json& j, const TraceLink& l) {
  j = json{{"childId", l.childId}, {"parentId", l.parentId}};
  putOptional(j, "score", l.score);
  putOptional(j, "explanation", l.explanation);
  j["status"] = to_string(l.status);
  j["createdBy"] = to_string(l.createdBy);
  putOptional(j, "reviewedBy", l.reviewedBy);
  putOptional(j, "reviewedAt", l.reviewedAt);
}

void from_json(const json& j, TraceLink& l) {
  l.childId = j.at("childId").get<std::string>();
  l.parentId = j.at("parentId").get<std::string>();
  getOptional(j, "score", l.score);
  getOptional(j, "explanation", l.explanation);
  l.status = enumField<LinkStatus>(j, "status");
  l.createdBy = enumField<LinkOrigin>(j, "createdBy");
  getOptional(j, "reviewedBy", l.reviewedBy);
  getOptional(j, "reviewedAt", l.reviewedAt);
}

void to_json(json& j, const Concept& c) {
  j = json{{"term", c.term},
           {"definition", c.definition},
           {"origin", to_string(c.origin)},
           {"artifactId", c.artifactId}};
}

void from_json(const json& j, Concept& c) {
  c.term = j.at("term").get<std::string>();
  c.definition = j.value("definition", std::string());
  c.origin = enumField<ConceptOrigin>(j, "origin");
  c.artifactId = j.at("artifactId").get<std::string>();
}

void to_json(json& j, const HealthFinding& f) {
  j = json{{"id", f.id},
           {"artifactId", f.artifactId},
           {"kind", to_string(f.kind)},
           {"subject", f.subject},
           {"explanation", f.explanation},
           {"state", to_string(f.state)}};
}

void from_json(const json& j, HealthFinding& f) {
  f.id = j.at("id").get<std::string>();
  f.artifactId = j.at("artifactId").get<std::string>();
  f.kind = enumField<FindingKind>(j, "kind");
  f.subject = j.at("subject").get<std::string>();
  f.explanation = j.value("explanation", std::string());
  f.state = enumField<FindingState>(j, "state");
}

void to_json(json& j, const ProjectSummary& s) {
  json subsystems = json::array();
  for (const auto& sub : s.subsystems) {
    subsystems.push_back({{"name", sub.name}, {"description", sub.description}});
  }
  j = json{{"overview", s.overview},
           {"subsystems", std::move(subsystems)},
           {"entities", s.entities},
           {"features", s.features},
           {"dataFlow", s.dataFlow}};
}

void from_json(const json& j, ProjectSummary& s) {
  s.overview = j.at("overview").get<std::string>();
  s.subsystems.clear();
  for (const auto& sub : j.at("subsystems")) {
    s.subsystems.push_back({sub.at("name").get<std::string>(),
                            sub.value("description", std::string())});
  }
  s.entities = j.at("entities").get<std::vector<std::string>>();
  s.features = j.at("features").get<std::vector<std::string>>();
  s.dataFlow = j.at("dataFlow").get<std::string>();
}

void to_json(json& j, const Tim& t) {
  json types = json::array();
  for (const auto& [type, count] : t.types) types.push_back({{"type", type}, {"count", count}});
  json relations = json::array();
  for (const auto& r : t.relations) {
    relations.push_back(
        {{"childType", r.childType}, {"parentType", r.parentType}, {"linkCount", r.linkCount}});
  }
  j = json{{"types", std::move(types)}, {"relations", std::move(relations)}};
}

void to_json(json& j, const ViewSpec& v) {
  json links = json::array();
  for (const auto& [child, parent] : v.includedLinks) {
    links.push_back({{"childId", child}, {"parentId", parent}});
  }
  j = json{{"rootId", v.rootId},
           {"ancestors", v.ancestors},
           {"descendants", v.descendants},
           {"includedLinks", std::move(links)}};
}

json projectToJson(const Project& project) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  json meta{{"id", project.id()}, {"name", project.name()}, {"revision", project.revision()}};
  if (project.summary()) meta["summary"] = *project.summary();
  doc["project"] = std::move(meta);

  json artifacts = json::array();
  for (const auto& [id, a] : project.artifacts()) artifacts.push_back(a);
  doc["artifacts"] = std::move(artifacts);
  json links = json::array();
  for (const auto& [key, l] : project.links()) links.push_back(l);
  doc["links"] = std::move(links);
  doc["concepts"] = project.concepts();
  json findings = json::array();
  for (const auto& [id, f] : project.findings()) findings.push_back(f);
  doc["findings"] = std::move(findings);
  return doc;
}

Project projectFromJson(const json& document) {
  if (!document.is_object()) throw Error(ErrorCode::ParseError, "project file must be an object");
  const auto version = document.value("schema_version", json());
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch,
                "unsupported schema_version " + version.dump() + " (expected " +
                    std::to_string(kSchemaVersion) + ")",
                version.dump());
  }
  try {
    const auto& meta = document.at("project");
    std::optional<ProjectSummary> summary;
    getOptional(meta, "summary", summary);
    return Project::restore(
        meta.at("id").get<std::string>(), meta.value("name", std::string()),
        meta.value("revision", std::uint64_t{0}),
        document.value("artifacts", json::array()).get<std::vector<Artifact>>(),
        document.value("links", json::array()).get<std::vector<TraceLink>>(),
        document.value("concepts", json::array()).get<std::vector<Concept>>(),
        document.value("findings", json::array()).get<std::vector<HealthFinding>>(),
        std::move(summary));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed project file: ") + e.what());
  }
}

std::string serializeProject(const Project& project) {
  return projectToJson(project).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

Project parseProject(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
  return projectFromJson(doc);
}

}  // namespace root
