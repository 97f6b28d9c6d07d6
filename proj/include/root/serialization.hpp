#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "root/model.hpp"

namespace root {

inline constexpr int kSchemaVersion = 1;

// Canonical JSON field names match the struct members; enums use their
// lowercase wire names; absent optionals are omitted.
void to_json(nlohmann::json& j, const Artifact& a);
void from_json(const nlohmann::json& j, Artifact& a);
void to_json(nlohmann::json& j, const TraceLink& l);
void from_json(const nlohmann::json& j, TraceLink& l);
void to_json(nlohmann::json& j, const Concept& c);
void from_json(const nlohmann::json& j, Concept& c);
void to_json(nlohmann::json& j, const HealthFinding& f);
void from_json(const nlohmann::json& j, HealthFinding& f);
void to_json(nlohmann::json& j, const ProjectSummary& s);
void from_json(const nlohmann::json& j, ProjectSummary& s);
void to_json(nlohmann::json& j, const Tim& t);
void to_json(nlohmann::json& j, const ViewSpec& v);

nlohmann::json projectToJson(const Project& project);
/// Throws SchemaMismatch for a foreign schema_version, ParseError otherwise.
Project projectFromJson(const nlohmann::json& document);

/// Pretty-printed canonical document with a trailing newline. Identical
/// projects always serialise to identical bytes.
std::string serializeProject(const Project& project);
Project parseProject(std::string_view text);

}  // namespace root
