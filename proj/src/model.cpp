#include "root/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <unordered_map>
#include <unordered_set>

namespace root {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::DuplicateLink: return "DuplicateLink";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::SelfLink: return "SelfLink";
    case ErrorCode::InvalidLink: return "InvalidLink";
    case ErrorCode::UnknownLink: return "UnknownLink";
    case ErrorCode::NotPending: return "NotPending";
    case ErrorCode::PathNotFound: return "PathNotFound";
    case ErrorCode::NothingMatched: return "NothingMatched";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::EmptyProject: return "EmptyProject";
    case ErrorCode::WrongType: return "WrongType";
    case ErrorCode::DuplicateTerm: return "DuplicateTerm";
    case ErrorCode::UnknownFinding: return "UnknownFinding";
    case ErrorCode::AlreadyClosed: return "AlreadyClosed";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::UnknownProject: return "UnknownProject";
    case ErrorCode::DuplicateProject: return "DuplicateProject";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ProjectBusy: return "ProjectBusy";
    case ErrorCode::UnknownJob: return "UnknownJob";
    case ErrorCode::AlreadyTerminal: return "AlreadyTerminal";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::Cancelled: return "Cancelled";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

namespace {

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<Provenance, 3> kProvenance{{
    {Provenance::imported, "imported"},
    {Provenance::generated, "generated"},
    {Provenance::manual, "manual"},
}};
constexpr NameTable<LinkStatus, 4> kLinkStatus{{
    {LinkStatus::manual, "manual"},
    {LinkStatus::pending, "pending"},
    {LinkStatus::approved, "approved"},
    {LinkStatus::rejected, "rejected"},
}};
constexpr NameTable<LinkOrigin, 4> kLinkOrigin{{
    {LinkOrigin::user, "user"},
    {LinkOrigin::trace_engine, "trace-engine"},
    {LinkOrigin::docgen, "docgen"},
    {LinkOrigin::vocab_health, "vocab-health"},
}};
constexpr NameTable<ConceptOrigin, 2> kConceptOrigin{{
    {ConceptOrigin::manual, "manual"},
    {ConceptOrigin::extracted, "extracted"},
}};
constexpr NameTable<FindingKind, 6> kFindingKind{{
    {FindingKind::cited_concept, "cited-concept"},
    {FindingKind::predicted_concept, "predicted-concept"},
    {FindingKind::undefined_concept, "undefined-concept"},
    {FindingKind::contradiction, "contradiction"},
    {FindingKind::ambiguity, "ambiguity"},
    {FindingKind::warning, "warning"},
}};
constexpr NameTable<FindingState, 3> kFindingState{{
    {FindingState::open, "open"},
    {FindingState::resolved, "resolved"},
    {FindingState::dismissed, "dismissed"},
}};

template <typename Enum, std::size_t N>
std::string_view nameOf(const NameTable<Enum, N>& table, Enum value) noexcept {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return {};
}

template <typename Enum, std::size_t N>
Enum valueOf(const NameTable<Enum, N>& table, std::string_view name) {
  for (const auto& [v, n] : table) {
    if (n == name) return v;
  }
  throw Error(ErrorCode::ParseError, "unknown enum value '" + std::string(name) + "'");
}

}  // namespace

std::string_view to_string(Provenance v) noexcept { return nameOf(kProvenance, v); }
std::string_view to_string(LinkStatus v) noexcept { return nameOf(kLinkStatus, v); }
std::string_view to_string(LinkOrigin v) noexcept { return nameOf(kLinkOrigin, v); }
std::string_view to_string(ConceptOrigin v) noexcept { return nameOf(kConceptOrigin, v); }
std::string_view to_string(FindingKind v) noexcept { return nameOf(kFindingKind, v); }
std::string_view to_string(FindingState v) noexcept { return nameOf(kFindingState, v); }

template <>
Provenance parse_enum<Provenance>(std::string_view n) { return valueOf(kProvenance, n); }
template <>
LinkStatus parse_enum<LinkStatus>(std::string_view n) { return valueOf(kLinkStatus, n); }
template <>
LinkOrigin parse_enum<LinkOrigin>(std::string_view n) { return valueOf(kLinkOrigin, n); }
template <>
ConceptOrigin parse_enum<ConceptOrigin>(std::string_view n) { return valueOf(kConceptOrigin, n); }
template <>
FindingKind parse_enum<FindingKind>(std::string_view n) { return valueOf(kFindingKind, n); }
template <>
FindingState parse_enum<FindingState>(std::string_view n) { return valueOf(kFindingState, n); }

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string typePrefix(std::string_view type) {
  std::string prefix;
  bool atWordStart = true;
  for (unsigned char c : type) {
    if (std::isalnum(c)) {
      if (atWordStart) prefix.push_back(static_cast<char>(std::toupper(c)));
      atWordStart = false;
    } else {
      atWordStart = true;
    }
  }
  return prefix.empty() ? std::string("A") : prefix;
}

Project::Project(std::string id, std::string name) : id_(std::move(id)), name_(std::move(name)) {
  if (id_.empty()) throw Error(ErrorCode::EmptyField, "project id must not be empty", "id");
}

const Artifact* Project::findArtifact(std::string_view id) const {
  auto it = artifacts_.find(std::string(id));
  return it == artifacts_.end() ? nullptr : &it->second;
}

const Artifact& Project::artifact(std::string_view id) const {
  if (const auto* a = findArtifact(id)) return *a;
  throw Error(ErrorCode::UnknownId, "unknown artifact '" + std::string(id) + "'", std::string(id));
}

const TraceLink* Project::findLink(std::string_view child, std::string_view parent) const {
  auto it = links_.find(LinkKey{std::string(child), std::string(parent)});
  return it == links_.end() ? nullptr : &it->second;
}

const Concept* Project::findConcept(std::string_view term) const {
  const auto folded = lowercase(term);
  for (const auto& c : concepts_) {
    if (lowercase(c.term) == folded) return &c;
  }
  return nullptr;
}

const HealthFinding* Project::findFinding(std::string_view id) const {
  auto it = findings_.find(std::string(id));
  return it == findings_.end() ? nullptr : &it->second;
}

std::vector<const Artifact*> Project::artifactsOfType(std::string_view type) const {
  std::vector<const Artifact*> out;
  for (const auto& [id, a] : artifacts_) {
    if (a.type == type) out.push_back(&a);
  }
  return out;
}

std::set<std::string> Project::artifactTypes() const {
  std::set<std::string> out;
  for (const auto& [id, a] : artifacts_) out.insert(a.type);
  return out;
}

namespace {

void requireNonEmpty(const std::string& value, const char* field) {
  if (value.empty()) {
    throw Error(ErrorCode::EmptyField, std::string("field '") + field + "' must not be empty", field);
  }
}

}  // namespace

std::uint64_t Project::upsertArtifact(Artifact artifact, UpsertMode mode) {
  requireNonEmpty(artifact.id, "id");
  requireNonEmpty(artifact.type, "type");
  requireNonEmpty(artifact.name, "name");
  const bool exists = artifacts_.contains(artifact.id);
  if (mode == UpsertMode::create && exists) {
    throw Error(ErrorCode::DuplicateId, "artifact '" + artifact.id + "' already exists", artifact.id);
  }
  if (mode == UpsertMode::update && !exists) {
    throw Error(ErrorCode::UnknownId, "unknown artifact '" + artifact.id + "'", artifact.id);
  }
  if (artifact.flagged && artifact.flagged->empty()) artifact.flagged.reset();
  auto id = artifact.id;
  artifacts_.insert_or_assign(std::move(id), std::move(artifact));
  return bump();
}

std::uint64_t Project::deleteArtifact(std::string_view id) {
  const auto& victim = artifact(id);
  const std::string key = victim.id;

  for (auto it = links_.begin(); it != links_.end();) {
    if (it->first.first == key || it->first.second == key) {
      unindex(it->second);
      it = links_.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<std::string> removedTerms;
  std::erase_if(concepts_, [&](const Concept& c) {
    if (c.artifactId != key) return false;
    removedTerms.push_back(c.term);
    return true;
  });

  std::erase_if(findings_, [&](const auto& entry) {
    const auto& f = entry.second;
    return f.artifactId == key || (f.kind == FindingKind::contradiction && f.subject == key);
  });
  for (const auto& term : removedTerms) {
    for (auto& [fid, f] : findings_) {
      const bool conceptFinding =
          f.kind == FindingKind::cited_concept || f.kind == FindingKind::predicted_concept;
      if (conceptFinding && lowercase(f.subject) == lowercase(term) &&
          f.state == FindingState::open) {
        f.state = FindingState::resolved;
      }
    }
  }

  artifacts_.erase(key);
  return bump();
}

bool Project::wouldCreateCycle(std::string_view child, std::string_view parent) const {
  if (child == parent) return true;
  // A cycle closes iff `child` is already reachable upward from `parent`.
  std::vector<std::string> stack{std::string(parent)};
  std::unordered_set<std::string> seen{std::string(parent)};
  while (!stack.empty()) {
    auto node = std::move(stack.back());
    stack.pop_back();
    auto it = parents_.find(node);
    if (it == parents_.end()) continue;
    for (const auto& next : it->second) {
      if (next == child) return true;
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  return false;
}

void Project::validateLink(const TraceLink& link) const {
  requireNonEmpty(link.childId, "childId");
  requireNonEmpty(link.parentId, "parentId");
  if (link.childId == link.parentId) {
    throw Error(ErrorCode::SelfLink, "an artifact cannot trace to itself", link.childId);
  }
  artifact(link.childId);
  artifact(link.parentId);
  if (link.status == LinkStatus::manual && link.createdBy != LinkOrigin::user) {
    throw Error(ErrorCode::InvalidLink, "manual links must be created by a user");
  }
  if (link.status == LinkStatus::pending && !link.score) {
    throw Error(ErrorCode::InvalidLink, "pending links require a score");
  }
  if (link.score && !(*link.score >= 0.0 && *link.score <= 1.0)) {
    throw Error(ErrorCode::InvalidLink, "link score must lie in [0, 1]");
  }
  if (link.active() && wouldCreateCycle(link.childId, link.parentId)) {
    throw Error(ErrorCode::CycleDetected,
                "link " + link.childId + " -> " + link.parentId + " would create a cycle",
                link.childId + "->" + link.parentId);
  }
}

void Project::index(const TraceLink& link) {
  if (!link.active()) return;
  parents_[link.childId].insert(link.parentId);
  children_[link.parentId].insert(link.childId);
}

void Project::unindex(const TraceLink& link) {
  if (!link.active()) return;
  if (auto it = parents_.find(link.childId); it != parents_.end()) {
    it->second.erase(link.parentId);
    if (it->second.empty()) parents_.erase(it);
  }
  if (auto it = children_.find(link.parentId); it != children_.end()) {
    it->second.erase(link.childId);
    if (it->second.empty()) children_.erase(it);
  }
}

std::uint64_t Project::addLink(TraceLink link) {
  if (findLink(link.childId, link.parentId)) {
    throw Error(ErrorCode::DuplicateLink,
                "link " + link.childId + " -> " + link.parentId + " already exists",
                link.childId + "->" + link.parentId);
  }
  validateLink(link);
  index(link);
  auto key = link.key();
  links_.emplace(std::move(key), std::move(link));
  return bump();
}

std::uint64_t Project::addLink(std::string childId, std::string parentId, LinkStatus status,
                               std::optional<double> score) {
  TraceLink link;
  link.childId = std::move(childId);
  link.parentId = std::move(parentId);
  link.status = status;
  link.score = score;
  link.createdBy = status == LinkStatus::pending ? LinkOrigin::trace_engine : LinkOrigin::user;
  return addLink(std::move(link));
}

std::uint64_t Project::updateLink(TraceLink link) {
  auto it = links_.find(link.key());
  if (it == links_.end()) {
    throw Error(ErrorCode::UnknownLink, "no link " + link.childId + " -> " + link.parentId);
  }
  unindex(it->second);
  try {
    validateLink(link);
  } catch (...) {
    index(it->second);
    throw;
  }
  it->second = std::move(link);
  index(it->second);
  return bump();
}

std::uint64_t Project::removeLink(std::string_view child, std::string_view parent) {
  auto it = links_.find(LinkKey{std::string(child), std::string(parent)});
  if (it == links_.end()) {
    throw Error(ErrorCode::UnknownLink,
                "no link " + std::string(child) + " -> " + std::string(parent));
  }
  unindex(it->second);
  links_.erase(it);
  return bump();
}

std::uint64_t Project::addConcept(Concept entry) {
  requireNonEmpty(entry.term, "term");
  if (findConcept(entry.term)) {
    throw Error(ErrorCode::DuplicateTerm, "concept '" + entry.term + "' already exists",
                entry.term);
  }
  if (entry.artifactId.empty()) entry.artifactId = nextGeneratedId(kConceptType);
  if (const auto* existing = findArtifact(entry.artifactId)) {
    if (existing->type != kConceptType) {
      throw Error(ErrorCode::DuplicateId,
                  "artifact '" + entry.artifactId + "' exists and is not a Concept",
                  entry.artifactId);
    }
  } else {
    Artifact a;
    a.id = entry.artifactId;
    a.type = kConceptType;
    a.name = entry.term;
    a.body = entry.definition;
    a.provenance = Provenance::manual;
    if (entry.definition.empty()) a.flagged = "definition needed";
    artifacts_.emplace(a.id, std::move(a));
  }
  concepts_.push_back(std::move(entry));
  return bump();
}

std::uint64_t Project::removeConcept(std::string_view term) {
  const auto* c = findConcept(term);
  if (!c) throw Error(ErrorCode::UnknownId, "unknown concept '" + std::string(term) + "'");
  const auto artifactId = c->artifactId;
  if (findArtifact(artifactId)) return deleteArtifact(artifactId);
  std::erase_if(concepts_, [&](const Concept& x) { return x.artifactId == artifactId; });
  return bump();
}

std::uint64_t Project::upsertFinding(HealthFinding finding) {
  requireNonEmpty(finding.id, "id");
  artifact(finding.artifactId);
  requireNonEmpty(finding.subject, "subject");
  if (finding.kind == FindingKind::contradiction) artifact(finding.subject);
  auto id = finding.id;
  findings_.insert_or_assign(std::move(id), std::move(finding));
  return bump();
}

std::uint64_t Project::setSummary(std::optional<ProjectSummary> summary) {
  summary_ = std::move(summary);
  return bump();
}

std::string Project::nextGeneratedId(std::string_view type) const {
  const auto prefix = typePrefix(type);
  for (std::size_t n = 1;; ++n) {
    auto candidate = prefix + std::to_string(n);
    if (!artifacts_.contains(candidate)) return candidate;
  }
}

std::string Project::nextFindingId() const {
  for (std::size_t n = 1;; ++n) {
    auto candidate = "H" + std::to_string(n);
    if (!findings_.contains(candidate)) return candidate;
  }
}

std::vector<std::string> Project::integrityProblems() const {
  std::vector<std::string> problems;
  for (const auto& [key, a] : artifacts_) {
    if (key != a.id) problems.push_back("artifact key/id mismatch: " + key);
    if (a.id.empty() || a.type.empty() || a.name.empty()) {
      problems.push_back("artifact with empty required field: " + key);
    }
  }

  // Independent cycle check straight from the link table, not the cached adjacency.
  std::unordered_map<std::string, std::vector<std::string>> up;
  std::size_t activeCount = 0;
  for (const auto& [key, l] : links_) {
    if (key != l.key()) problems.push_back("link key mismatch: " + key.first + "->" + key.second);
    if (l.childId == l.parentId) problems.push_back("self link: " + l.childId);
    if (!artifacts_.contains(l.childId) || !artifacts_.contains(l.parentId)) {
      problems.push_back("dangling link: " + l.childId + "->" + l.parentId);
    }
    if (l.status == LinkStatus::manual && l.createdBy != LinkOrigin::user) {
      problems.push_back("manual link not created by user: " + l.childId + "->" + l.parentId);
    }
    if (l.status == LinkStatus::pending && !l.score) {
      problems.push_back("pending link without score: " + l.childId + "->" + l.parentId);
    }
    if (l.active()) {
      up[l.childId].push_back(l.parentId);
      ++activeCount;
      auto p = parents_.find(l.childId);
      if (p == parents_.end() || !p->second.contains(l.parentId)) {
        problems.push_back("adjacency cache out of sync: " + l.childId + "->" + l.parentId);
      }
    }
  }
  std::size_t cached = 0;
  for (const auto& [c, ps] : parents_) cached += ps.size();
  if (cached != activeCount) problems.push_back("adjacency cache holds stale edges");

  enum class Mark { none, visiting, done };
  std::unordered_map<std::string, Mark> marks;
  bool cyclic = false;
  std::function<void(const std::string&)> visit = [&](const std::string& node) {
    marks[node] = Mark::visiting;
    if (auto it = up.find(node); it != up.end()) {
      for (const auto& next : it->second) {
        const auto m = marks[next];
        if (m == Mark::visiting) cyclic = true;
        if (m == Mark::none) visit(next);
      }
    }
    marks[node] = Mark::done;
  };
  for (const auto& [node, ps] : up) {
    if (marks[node] == Mark::none) visit(node);
  }
  if (cyclic) problems.push_back("active links contain a cycle");

  std::set<std::string> terms;
  for (const auto& c : concepts_) {
    if (c.term.empty()) problems.push_back("concept with empty term");
    if (!terms.insert(lowercase(c.term)).second) problems.push_back("duplicate concept: " + c.term);
    const auto* a = findArtifact(c.artifactId);
    if (!a || a->type != kConceptType) problems.push_back("concept without artifact: " + c.term);
  }
  for (const auto& [fid, f] : findings_) {
    if (fid != f.id) problems.push_back("finding key/id mismatch: " + fid);
    if (!artifacts_.contains(f.artifactId)) problems.push_back("dangling finding: " + fid);
    if (f.kind == FindingKind::contradiction && !artifacts_.contains(f.subject)) {
      problems.push_back("contradiction finding references missing artifact: " + fid);
    }
  }
  return problems;
}

Project Project::restore(std::string id, std::string name, std::uint64_t revision,
                         std::vector<Artifact> artifacts, std::vector<TraceLink> links,
                         std::vector<Concept> concepts, std::vector<HealthFinding> findings,
                         std::optional<ProjectSummary> summary) {
  Project p(std::move(id), std::move(name));
  p.revision_ = revision;
  for (auto& a : artifacts) {
    auto key = a.id;
    if (!p.artifacts_.emplace(std::move(key), std::move(a)).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate artifact id in project file");
    }
  }
  for (auto& l : links) {
    auto key = l.key();
    if (p.links_.contains(key)) {
      throw Error(ErrorCode::DuplicateLink, "duplicate link in project file");
    }
    p.index(l);
    p.links_.emplace(std::move(key), std::move(l));
  }
  p.concepts_ = std::move(concepts);
  for (auto& f : findings) {
    auto key = f.id;
    p.findings_.emplace(std::move(key), std::move(f));
  }
  p.summary_ = std::move(summary);
  if (auto problems = p.integrityProblems(); !problems.empty()) {
    throw Error(ErrorCode::ParseError, "project file violates integrity: " + problems.front());
  }
  return p;
}

bool Project::operator==(const Project& other) const {
  return id_ == other.id_ && name_ == other.name_ && revision_ == other.revision_ &&
         artifacts_ == other.artifacts_ && links_ == other.links_ &&
         concepts_ == other.concepts_ && findings_ == other.findings_ &&
         summary_ == other.summary_;
}

Tim computeTim(const Project& project) {
  Tim tim;
  for (const auto& [id, a] : project.artifacts()) ++tim.types[a.type];
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (const auto& [key, l] : project.links()) {
    if (!l.active()) continue;
    ++counts[{project.artifact(l.childId).type, project.artifact(l.parentId).type}];
  }
  for (const auto& [types, n] : counts) tim.relations.push_back({types.first, types.second, n});
  return tim;
}

namespace {

std::vector<std::string> expand(const Project& project, const std::string& rootId,
                                std::size_t depth, bool upward) {
  // Build the active neighbour relation on the fly; the view is a read-only query.
  std::map<std::string, std::vector<std::string>> next;
  for (const auto& [key, l] : project.links()) {
    if (!l.active()) continue;
    if (upward) {
      next[l.childId].push_back(l.parentId);
    } else {
      next[l.parentId].push_back(l.childId);
    }
  }
  std::vector<std::string> out;
  std::set<std::string> seen{rootId};
  std::vector<std::string> frontier{rootId};
  for (std::size_t level = 0; level < depth && !frontier.empty(); ++level) {
    std::set<std::string> layer;
    for (const auto& node : frontier) {
      if (auto it = next.find(node); it != next.end()) {
        for (const auto& n : it->second) {
          if (!seen.contains(n)) layer.insert(n);
        }
      }
    }
    frontier.assign(layer.begin(), layer.end());
    for (const auto& n : frontier) {
      seen.insert(n);
      out.push_back(n);
    }
  }
  return out;
}

}  // namespace

ViewSpec focusedView(const Project& project, std::string_view rootId, std::size_t upDepth,
                     std::size_t downDepth) {
  const auto& root = project.artifact(rootId);
  ViewSpec view;
  view.rootId = root.id;
  view.ancestors = expand(project, root.id, upDepth, true);
  view.descendants = expand(project, root.id, downDepth, false);

  std::set<std::string> members{root.id};
  members.insert(view.ancestors.begin(), view.ancestors.end());
  members.insert(view.descendants.begin(), view.descendants.end());
  for (const auto& [key, l] : project.links()) {
    if (l.active() && members.contains(l.childId) && members.contains(l.parentId)) {
      view.includedLinks.push_back(key);
    }
  }
  return view;
}

}  // namespace root
