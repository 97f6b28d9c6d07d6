#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "root/model.hpp"
#include "root/progress.hpp"
#include "root/provider.hpp"
#include "root/similarity.hpp"

namespace root {

inline constexpr double kDefaultClusterTau = 0.25;
inline constexpr std::size_t kDefaultMaxClusterSize = 20;

struct Cluster {
  std::vector<std::string> memberIds;  // sorted
  std::vector<std::string> centroidTerms;
  std::string label;
  bool operator==(const Cluster&) const = default;
};

struct ClusterOptions {
  double tau = kDefaultClusterTau;
  std::size_t maxClusterSize = kDefaultMaxClusterSize;
  EmbeddingProvider* embeddings = nullptr;  // hashed projection when null
};

/// Average-linkage agglomerative clustering of all artifacts of `type` over
/// pairwise embedding similarity. The best pair (highest average similarity,
/// ties by the lexicographically smallest pair of member ids) merges first;
/// merging stops once the best eligible pair falls below `tau`. Merges that
/// would exceed `maxClusterSize` are refused. Clusters are returned ordered
/// by their smallest member id.
std::vector<Cluster> clusterArtifacts(const Project& project, std::string_view type,
                                      const ClusterOptions& options = {});

struct LayerResult {
  std::vector<std::string> artifactIds;
  std::vector<LinkKey> links;
};

/// One `targetType` artifact per cluster of `sourceType`, each linked from
/// every cluster member (approved, created by docgen). Provider calls all
/// complete before the project is touched, so a failure adds nothing.
LayerResult generateLayer(Project& project, std::string_view sourceType,
                          std::string_view targetType, GenerationProvider& provider,
                          const ClusterOptions& options = {}, const ProgressFn& progress = {});

/// Builds and stores the project summary (overview, subsystems, entities,
/// features, data flow).
ProjectSummary generateProjectSummary(Project& project, GenerationProvider& provider,
                                      const ClusterOptions& options = {});

/// First non-empty comment line of a source file, markers stripped.
std::string firstCommentLine(std::string_view source);

/// Summarises one Code artifact and stores the summary on it.
std::string summarizeFile(Project& project, std::string_view artifactId,
                          GenerationProvider& provider);

/// Summarises every Code artifact lacking a summary; returns how many.
std::size_t summarizeAllFiles(Project& project, GenerationProvider& provider,
                              const ProgressFn& progress = {});

}  // namespace root
