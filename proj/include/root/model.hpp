#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "root/error.hpp"

namespace root {

enum class Provenance { imported, generated, manual };
enum class LinkStatus { manual, pending, approved, rejected };
enum class LinkOrigin { user, trace_engine, docgen, vocab_health };
enum class ConceptOrigin { manual, extracted };
enum class FindingKind {
  cited_concept,
  predicted_concept,
  undefined_concept,
  contradiction,
  ambiguity,
  warning,
};
enum class FindingState { open, resolved, dismissed };

// Lowercase wire names ("trace-engine", "cited-concept", ...).
std::string_view to_string(Provenance v) noexcept;
std::string_view to_string(LinkStatus v) noexcept;
std::string_view to_string(LinkOrigin v) noexcept;
std::string_view to_string(ConceptOrigin v) noexcept;
std::string_view to_string(FindingKind v) noexcept;
std::string_view to_string(FindingState v) noexcept;

// Inverse of to_string; throws Error(ParseError) on an unknown name.
template <typename Enum>
Enum parse_enum(std::string_view name);
template <> Provenance parse_enum<Provenance>(std::string_view);
template <> LinkStatus parse_enum<LinkStatus>(std::string_view);
template <> LinkOrigin parse_enum<LinkOrigin>(std::string_view);
template <> ConceptOrigin parse_enum<ConceptOrigin>(std::string_view);
template <> FindingKind parse_enum<FindingKind>(std::string_view);
template <> FindingState parse_enum<FindingState>(std::string_view);

/// Node of the artifact graph: a code file, requirement, feature, concept...
struct Artifact {
  std::string id;
  std::string type;
  std::string name;
  std::string body;
  std::optional<std::string> summary;
  Provenance provenance = Provenance::imported;
  std::optional<std::string> flagged;
  std::map<std::string, std::string> attributes;

  bool operator==(const Artifact&) const = default;
};

using LinkKey = std::pair<std::string, std::string>;  // (child, parent)

/// Directed child -> parent relation. Children sit below parents in the tree.
struct TraceLink {
  std::string childId;
  std::string parentId;
  std::optional<double> score;
  std::optional<std::string> explanation;
  LinkStatus status = LinkStatus::manual;
  LinkOrigin createdBy = LinkOrigin::user;
  std::optional<std::string> reviewedBy;
  std::optional<std::string> reviewedAt;

  LinkKey key() const { return {childId, parentId}; }
  /// Rejected links are kept as soft state but take no part in the graph.
  bool active() const noexcept { return status != LinkStatus::rejected; }

  bool operator==(const TraceLink&) const = default;
};

struct Concept {
  std::string term;
  std::string definition;
  ConceptOrigin origin = ConceptOrigin::manual;
  std::string artifactId;  // backing artifact of type "Concept"

  bool operator==(const Concept&) const = default;
};

struct HealthFinding {
  std::string id;
  std::string artifactId;
  FindingKind kind = FindingKind::ambiguity;
  std::string subject;
  std::string explanation;
  FindingState state = FindingState::open;

  bool operator==(const HealthFinding&) const = default;
};

struct Subsystem {
  std::string name;
  std::string description;
  bool operator==(const Subsystem&) const = default;
};

struct ProjectSummary {
  std::string overview;
  std::vector<Subsystem> subsystems;
  std::vector<std::string> entities;
  std::vector<std::string> features;
  std::string dataFlow;

  bool operator==(const ProjectSummary&) const = default;
};

struct TimRelation {
  std::string childType;
  std::string parentType;
  std::size_t linkCount = 0;
  bool operator==(const TimRelation&) const = default;
};

/// Type-level schema derived from the graph. Relations cover non-rejected
/// links only; a relation with no remaining links is simply absent.
struct Tim {
  std::map<std::string, std::size_t> types;
  std::vector<TimRelation> relations;  // sorted by (childType, parentType)
  bool operator==(const Tim&) const = default;
};

struct ViewSpec {
  std::string rootId;
  std::vector<std::string> ancestors;
  std::vector<std::string> descendants;
  std::vector<LinkKey> includedLinks;
  bool operator==(const ViewSpec&) const = default;
};

enum class UpsertMode { upsert, create, update };

inline constexpr const char* kCodeType = "Code";
inline constexpr const char* kConceptType = "Concept";

/// In-memory project graph. All mutators validate, apply, and bump
/// `revision()` by exactly one; a throwing mutator leaves the project
/// untouched.
class Project {
 public:
  Project() = default;
  Project(std::string id, std::string name);

  const std::string& id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  std::uint64_t revision() const noexcept { return revision_; }

  const std::map<std::string, Artifact>& artifacts() const noexcept { return artifacts_; }
  const std::map<LinkKey, TraceLink>& links() const noexcept { return links_; }
  const std::vector<Concept>& concepts() const noexcept { return concepts_; }
  const std::map<std::string, HealthFinding>& findings() const noexcept { return findings_; }
  const std::optional<ProjectSummary>& summary() const noexcept { return summary_; }

  const Artifact* findArtifact(std::string_view id) const;
  const Artifact& artifact(std::string_view id) const;  // throws UnknownId
  const TraceLink* findLink(std::string_view child, std::string_view parent) const;
  const Concept* findConcept(std::string_view term) const;  // case-insensitive
  const HealthFinding* findFinding(std::string_view id) const;

  std::vector<const Artifact*> artifactsOfType(std::string_view type) const;
  std::set<std::string> artifactTypes() const;

  std::uint64_t upsertArtifact(Artifact artifact, UpsertMode mode = UpsertMode::upsert);
  /// Removes the artifact and every link, concept, and finding that refers to it.
  std::uint64_t deleteArtifact(std::string_view id);

  std::uint64_t addLink(TraceLink link);
  std::uint64_t addLink(std::string childId, std::string parentId, LinkStatus status,
                        std::optional<double> score = std::nullopt);
  /// Replaces an existing link (same endpoints), re-validating every invariant.
  std::uint64_t updateLink(TraceLink link);
  std::uint64_t removeLink(std::string_view child, std::string_view parent);
  /// True when adding child -> parent as an active link would close a cycle.
  bool wouldCreateCycle(std::string_view child, std::string_view parent) const;

  std::uint64_t addConcept(Concept entry);
  std::uint64_t removeConcept(std::string_view term);

  std::uint64_t upsertFinding(HealthFinding finding);
  std::uint64_t setSummary(std::optional<ProjectSummary> summary);

  /// "<PREFIX><n>" with n the smallest positive integer not already used as
  /// an artifact id. The prefix is the upper-cased initial of each word in
  /// the type name ("Functional Requirement" -> "FR").
  std::string nextGeneratedId(std::string_view type) const;
  std::string nextFindingId() const;

  /// Full recheck of every project invariant. Empty when consistent.
  std::vector<std::string> integrityProblems() const;

  /// Restores persisted state verbatim (used by the project loader).
  static Project restore(std::string id, std::string name, std::uint64_t revision,
                         std::vector<Artifact> artifacts, std::vector<TraceLink> links,
                         std::vector<Concept> concepts, std::vector<HealthFinding> findings,
                         std::optional<ProjectSummary> summary);

  bool operator==(const Project& other) const;

 private:
  void validateLink(const TraceLink& link) const;
  void index(const TraceLink& link);
  void unindex(const TraceLink& link);
  std::uint64_t bump() noexcept { return ++revision_; }

  std::string id_;
  std::string name_;
  std::uint64_t revision_ = 0;
  std::map<std::string, Artifact> artifacts_;
  std::map<LinkKey, TraceLink> links_;
  std::vector<Concept> concepts_;
  std::map<std::string, HealthFinding> findings_;
  std::optional<ProjectSummary> summary_;

  // Active (non-rejected) adjacency, child -> parents and parent -> children.
  std::map<std::string, std::set<std::string>, std::less<>> parents_;
  std::map<std::string, std::set<std::string>, std::less<>> children_;
};

std::string typePrefix(std::string_view type);

Tim computeTim(const Project& project);

/// Breadth-first neighbourhood of `rootId`: ancestors follow child -> parent
/// links up to `upDepth` hops, descendants follow them downward. Each BFS
/// level is ordered by id.
ViewSpec focusedView(const Project& project, std::string_view rootId, std::size_t upDepth,
                     std::size_t downDepth);

std::string lowercase(std::string_view text);

}  // namespace root
