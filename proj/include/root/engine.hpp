#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "root/ingestion.hpp"
#include "root/jobs.hpp"
#include "root/provider.hpp"
#include "root/similarity.hpp"
#include "root/store.hpp"

namespace root {

struct EngineOptions {
  /// Project files and jobs.json live here; purely in-memory when unset.
  std::optional<std::filesystem::path> dataDir;
  std::size_t workers = 2;
  /// Defaults to the environment-configured remote provider, else the mock.
  std::shared_ptr<GenerationProvider> provider;
  /// Defaults to the hashed tf-idf projection.
  std::shared_ptr<EmbeddingProvider> embeddings;
};

/// Shared service behind the REST server and the CLI: the project store,
/// the job engine and the providers, plus the per-kind job workloads.
class Engine {
 public:
  explicit Engine(EngineOptions options = {});

  ProjectStore& store() noexcept { return store_; }
  JobEngine& jobs() noexcept { return *jobs_; }
  GenerationProvider& provider() noexcept { return *provider_; }
  EmbeddingProvider& embeddings() noexcept { return *embeddings_; }

  /// Creates an empty project. An empty id is derived from the name
  /// ("Brake Controller" -> "brake-controller", suffixed when taken).
  std::string createProject(std::string id, std::string name);
  /// Adds an existing project (e.g. loaded from a file). Throws DuplicateProject.
  void adoptProject(Project project);

  /// Validates params for the kind (InvalidParams) and schedules the job.
  std::string submit(const std::string& projectId, std::string_view kind, nlohmann::json params);
  /// submit() and wait for the terminal state.
  JobSnapshot run(const std::string& projectId, std::string_view kind, nlohmann::json params);

  /// Builds the workload for a job; throws InvalidParams on bad parameters.
  Workload workload(JobKind kind, const nlohmann::json& params);

 private:
  ProjectStore store_;
  std::shared_ptr<GenerationProvider> provider_;
  std::shared_ptr<EmbeddingProvider> embeddings_;
  std::unique_ptr<JobEngine> jobs_;  // last: stops before the rest is torn down
};

nlohmann::json importReportJson(const ImportReport& report);

}  // namespace root
