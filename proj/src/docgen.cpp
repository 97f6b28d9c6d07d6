#include "root/docgen.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "root/artifact_text.hpp"
#include "root/serialization.hpp"

namespace root {

namespace {

constexpr std::size_t kContextChars = 2000;
constexpr std::size_t kCentroidTerms = 5;
constexpr std::size_t kLabelTerms = 3;
constexpr std::size_t kSummaryEntities = 10;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> topTerms(const SparseVector& weights, std::size_t n) {
  std::vector<std::pair<std::string, double>> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < sorted.size() && i < n; ++i) out.push_back(sorted[i].first);
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string contextText(const Artifact& a) {
  if (a.summary && !a.summary->empty()) return *a.summary;
  return a.body.substr(0, kContextChars);
}

bool isModal(std::string_view term) {
  return term == "shall" || term == "must" || term == "should" || term == "will" || term == "may";
}

}  // namespace

std::vector<Cluster> clusterArtifacts(const Project& project, std::string_view type,
                                      const ClusterOptions& options) {
  const auto members = project.artifactsOfType(type);
  if (members.empty()) {
    throw Error(ErrorCode::UnknownType, "no artifacts of type '" + std::string(type) + "'",
                std::string(type));
  }
  const std::size_t n = members.size();
  std::vector<std::string> texts;
  texts.reserve(n);
  for (const auto* a : members) texts.push_back(scoringText(*a));

  HashEmbeddingProvider fallback;
  EmbeddingProvider& embedder = options.embeddings ? *options.embeddings : fallback;
  const auto vectors = embedder.embed(texts);

  // sums[a][b]: total pairwise similarity between the members of slots a and b.
  std::vector<std::vector<double>> sums(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = (vectors[i].zero || vectors[j].zero) ? 0.0 : similarity(vectors[i], vectors[j]);
      sums[i][j] = sums[j][i] = s;
    }
  }
  struct Slot {
    std::vector<std::size_t> members;
    bool alive = true;
  };
  std::vector<Slot> slots(n);
  for (std::size_t i = 0; i < n; ++i) slots[i].members = {i};
  // Members are in id order, so a slot's smallest id is members[front()].
  const auto minId = [&](std::size_t slot) -> const std::string& {
    return members[slots[slot].members.front()]->id;
  };

  while (true) {
    bool found = false;
    double bestScore = 0.0;
    std::size_t bestA = 0, bestB = 0;
    std::pair<std::string_view, std::string_view> bestKey;
    for (std::size_t a = 0; a < n; ++a) {
      if (!slots[a].alive) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!slots[b].alive) continue;
        const auto sizeA = slots[a].members.size();
        const auto sizeB = slots[b].members.size();
        if (sizeA + sizeB > options.maxClusterSize) continue;
        const double score = sums[a][b] / static_cast<double>(sizeA * sizeB);
        std::pair<std::string_view, std::string_view> key{minId(a), minId(b)};
        if (key.second < key.first) std::swap(key.first, key.second);
        if (!found || score > bestScore || (score == bestScore && key < bestKey)) {
          found = true;
          bestScore = score;
          bestA = a;
          bestB = b;
          bestKey = key;
        }
      }
    }
    if (!found || bestScore < options.tau) break;

    auto& into = slots[bestA].members;
    into.insert(into.end(), slots[bestB].members.begin(), slots[bestB].members.end());
    std::sort(into.begin(), into.end());
    slots[bestB].alive = false;
    for (std::size_t c = 0; c < n; ++c) {
      if (c == bestA || c == bestB) continue;
      sums[bestA][c] += sums[bestB][c];
      sums[c][bestA] = sums[bestA][c];
    }
  }

  std::vector<Document> docs;
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) docs.push_back({members[i]->id, texts[i]});
  const auto index = buildIndex(docs);

  std::vector<Cluster> clusters;
  for (const auto& slot : slots) {
    if (!slot.alive) continue;
    Cluster cluster;
    std::map<std::string, double> centroid;
    for (auto m : slot.members) {
      cluster.memberIds.push_back(members[m]->id);
      for (const auto& [term, w] : index.vector(members[m]->id)) centroid[term] += w;
    }
    cluster.centroidTerms =
        topTerms(SparseVector(centroid.begin(), centroid.end()), kCentroidTerms);
    std::vector<std::string> labelTerms(
        cluster.centroidTerms.begin(),
        cluster.centroidTerms.begin() +
            static_cast<std::ptrdiff_t>(std::min(kLabelTerms, cluster.centroidTerms.size())));
    cluster.label = labelTerms.empty() ? members[slot.members.front()]->name : join(labelTerms, " ");
    clusters.push_back(std::move(cluster));
  }
  std::sort(clusters.begin(), clusters.end(), [](const Cluster& x, const Cluster& y) {
    return x.memberIds.front() < y.memberIds.front();
  });
  return clusters;
}

LayerResult generateLayer(Project& project, std::string_view sourceType,
                          std::string_view targetType, GenerationProvider& provider,
                          const ClusterOptions& options, const ProgressFn& progress) {
  if (project.artifactsOfType(sourceType).empty()) {
    throw Error(ErrorCode::EmptySource, "no '" + std::string(sourceType) + "' artifacts to generate from",
                std::string(sourceType));
  }
  if (targetType.empty()) throw Error(ErrorCode::EmptyField, "target type must not be empty", "targetType");
  reportProgress(progress, 0.0);
  const auto clusters = clusterArtifacts(project, sourceType, options);
  reportProgress(progress, 0.1);

  std::vector<std::string> bodies;
  bodies.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& cluster = clusters[i];
    PromptRequest request;
    request.task = std::string(task::kGenerateLayer);
    request.instruction = "Write one " + std::string(targetType) +
                          " that captures the shared purpose of the following " +
                          std::string(sourceType) + " artifacts. Reply with the " +
                          std::string(targetType) + " text only.";
    std::vector<std::string> names;
    for (const auto& id : cluster.memberIds) {
      const auto& a = project.artifact(id);
      names.push_back(a.name);
      request.context.push_back({a.id, a.name, contextText(a)});
    }
    request.facts["targetType"] = std::string(targetType);
    request.facts["sourceType"] = std::string(sourceType);
    request.facts["memberNames"] = names;
    request.facts["label"] = cluster.label;
    bodies.push_back(provider.complete(request));
    reportProgress(progress, 0.1 + 0.8 * static_cast<double>(i + 1) / static_cast<double>(clusters.size()));
  }

  LayerResult result;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& cluster = clusters[i];
    Artifact generated;
    generated.id = project.nextGeneratedId(targetType);
    generated.type = std::string(targetType);
    generated.name = capitalize(cluster.label);
    if (generated.name.empty()) generated.name = generated.id;
    generated.body = bodies[i];
    generated.provenance = Provenance::generated;
    project.upsertArtifact(generated, UpsertMode::create);
    result.artifactIds.push_back(generated.id);
    for (const auto& memberId : cluster.memberIds) {
      TraceLink link;
      link.childId = memberId;
      link.parentId = generated.id;
      link.status = LinkStatus::approved;
      link.createdBy = LinkOrigin::docgen;
      project.addLink(link);
      result.links.push_back(link.key());
    }
  }
  reportProgress(progress, 1.0);
  return result;
}

ProjectSummary generateProjectSummary(Project& project, GenerationProvider& provider,
                                      const ClusterOptions& options) {
  if (project.artifacts().empty()) {
    throw Error(ErrorCode::EmptyProject, "project '" + project.id() + "' has no artifacts");
  }
  ProjectSummary draft;

  const auto tim = computeTim(project);
  {
    std::ostringstream overview;
    overview << project.name() << " contains " << project.artifacts().size() << " artifact"
             << (project.artifacts().size() == 1 ? "" : "s") << " across " << tim.types.size()
             << " type" << (tim.types.size() == 1 ? "" : "s") << ": ";
    bool first = true;
    for (const auto& [type, count] : tim.types) {
      overview << (first ? "" : ", ") << type << " (" << count << ")";
      first = false;
    }
    overview << ".";
    draft.overview = overview.str();
  }

  std::string subsystemType = kCodeType;
  if (project.artifactsOfType(subsystemType).empty()) {
    std::size_t best = 0;
    for (const auto& [type, count] : tim.types) {
      if (count > best) {
        best = count;
        subsystemType = type;
      }
    }
  }
  for (const auto& cluster : clusterArtifacts(project, subsystemType, options)) {
    std::vector<std::string> names;
    for (const auto& id : cluster.memberIds) names.push_back(project.artifact(id).name);
    std::sort(names.begin(), names.end());
    if (names.size() > 5) {
      const auto more = names.size() - 5;
      names.resize(5);
      names.push_back("and " + std::to_string(more) + " more");
    }
    draft.subsystems.push_back(
        {capitalize(cluster.label), std::to_string(cluster.memberIds.size()) + " " +
                                        subsystemType + " artifact" +
                                        (cluster.memberIds.size() == 1 ? "" : "s") + ": " +
                                        join(names, ", ")});
  }

  const auto index = indexBodies(project, [](const Artifact& a) { return a.type != kConceptType; });
  std::map<std::string, double> totals;
  for (const auto& id : index.docIds()) {
    for (const auto& [term, w] : index.vector(id)) {
      const bool alphabetic = std::all_of(term.begin(), term.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) != 0;
      });
      if (alphabetic && term.size() >= 3 && !isModal(term)) totals[term] += w;
    }
  }
  draft.entities = topTerms(SparseVector(totals.begin(), totals.end()), kSummaryEntities);

  for (const auto* feature : project.artifactsOfType("Feature")) draft.features.push_back(feature->name);

  if (tim.relations.empty()) {
    draft.dataFlow = "No trace relations have been recorded yet.";
  } else {
    std::vector<std::string> parts;
    for (const auto& r : tim.relations) {
      parts.push_back(r.childType + " -> " + r.parentType + " (" + std::to_string(r.linkCount) +
                      " link" + (r.linkCount == 1 ? "" : "s") + ")");
    }
    draft.dataFlow = "Trace relations: " + join(parts, "; ") + ".";
  }

  PromptRequest request;
  request.task = std::string(task::kProjectSummary);
  request.instruction =
      "Summarise this software project as a JSON object with the keys overview (string), "
      "subsystems (array of {name, description}), entities (array of strings), features "
      "(array of strings) and dataFlow (string). The draft in the first context document "
      "lists the facts gathered so far.";
  nlohmann::json facts = draft;
  request.context.push_back({"draft", "Summary draft", facts.dump(2)});
  request.facts = facts;
  const auto answer = provider.complete(request);

  ProjectSummary summary = draft;
  try {
    auto parsed = nlohmann::json::parse(answer);
    summary = parsed.get<ProjectSummary>();
  } catch (const std::exception&) {
    // Free-form answers become the overview; the remaining sections keep the draft.
    summary.overview = trim(answer);
  }
  project.setSummary(summary);
  return summary;
}

std::string firstCommentLine(std::string_view source) {
  std::istringstream in{std::string(source)};
  std::string raw;
  bool inBlock = false;
  const auto stripLead = [](std::string s, std::string_view chars) {
    const auto p = s.find_first_not_of(chars);
    return p == std::string::npos ? std::string() : s.substr(p);
  };
  while (std::getline(in, raw)) {
    std::string line = trim(raw);
    if (inBlock) {
      auto end = line.find("*/");
      if (end != std::string::npos) {
        inBlock = false;
        line = line.substr(0, end);
      }
      line = trim(stripLead(line, "*"));
      if (!line.empty()) return line;
      continue;
    }
    if (line.starts_with("//")) {
      line = trim(stripLead(line, "/!"));
      if (!line.empty()) return line;
      continue;
    }
    if (line.starts_with("/*")) {
      line = stripLead(line.substr(2), "*!");
      auto end = line.find("*/");
      if (end != std::string::npos) {
        line = line.substr(0, end);
      } else {
        inBlock = true;
      }
      line = trim(line);
      if (!line.empty()) return line;
      continue;
    }
    const bool hashComment = line.starts_with("#") && !line.starts_with("#!") &&
                             (line.size() == 1 || line[1] == ' ' || line[1] == '#');
    const bool dashComment = line.starts_with("-- ");
    if (hashComment || dashComment) {
      line = trim(stripLead(line, hashComment ? "#" : "-"));
      if (!line.empty()) return line;
    }
  }
  return {};
}

std::string summarizeFile(Project& project, std::string_view artifactId,
                          GenerationProvider& provider) {
  const auto& artifact = project.artifact(artifactId);
  if (artifact.type != kCodeType) {
    throw Error(ErrorCode::WrongType,
                "artifact '" + artifact.id + "' is " + artifact.type + ", not Code", artifact.id);
  }
  const auto index = indexBodies(project, [](const Artifact& a) { return a.type == kCodeType; });

  PromptRequest request;
  request.task = std::string(task::kSummarizeFile);
  request.instruction =
      "Summarise the purpose of this source file in one sentence for a requirements engineer.";
  request.context.push_back({artifact.id, artifact.name, artifact.body.substr(0, 4 * kContextChars)});
  request.facts["name"] = artifact.name;
  request.facts["firstComment"] = firstCommentLine(artifact.body);
  request.facts["topTerms"] = topTerms(index.vector(artifact.id), 3);

  auto summary = provider.complete(request);
  Artifact updated = artifact;
  updated.summary = summary;
  project.upsertArtifact(std::move(updated), UpsertMode::update);
  return summary;
}

std::size_t summarizeAllFiles(Project& project, GenerationProvider& provider,
                              const ProgressFn& progress) {
  std::vector<std::string> pending;
  for (const auto* a : project.artifactsOfType(kCodeType)) {
    if (!a->summary || a->summary->empty()) pending.push_back(a->id);
  }
  for (std::size_t i = 0; i < pending.size(); ++i) {
    reportProgress(progress, static_cast<double>(i) / static_cast<double>(pending.size()));
    summarizeFile(project, pending[i], provider);
  }
  reportProgress(progress, 1.0);
  return pending.size();
}

}  // namespace root
