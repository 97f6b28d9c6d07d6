#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "root/progress.hpp"
#include "root/store.hpp"

namespace root {

enum class JobKind { import, summarize, generate_layer, predict_links, health_sweep, extract_concepts };
enum class JobState { created, running, completed, failed, cancelled };

std::string_view to_string(JobKind kind) noexcept;
std::string_view to_string(JobState state) noexcept;
JobKind parseJobKind(std::string_view name);  // throws InvalidParams
JobState parseJobState(std::string_view name);
bool isTerminal(JobState state) noexcept;
/// Kinds that rewrite artifacts or links; at most one runs per project.
bool isMutating(JobKind kind) noexcept;

struct JobEvent {
  std::uint64_t seq = 0;  // 0, 1, 2, ... per job
  std::string timestamp;
  std::string level;  // info | warning | error
  std::string message;
  JobState state = JobState::created;
  double progress = 0.0;
  bool operator==(const JobEvent&) const = default;
};

struct JobSnapshot {
  std::string id;
  std::string projectId;
  JobKind kind = JobKind::import;
  nlohmann::json params = nlohmann::json::object();
  JobState state = JobState::created;
  double progress = 0.0;
  std::vector<JobEvent> events;
  std::optional<nlohmann::json> result;  // references to created entities
  std::optional<std::string> error;
  std::string createdAt;
};

struct Notification {
  std::string timestamp;
  std::string projectId;
  std::string jobId;
  JobKind kind = JobKind::import;
  JobState state = JobState::completed;
  std::string message;
};

void to_json(nlohmann::json& j, const JobEvent& e);
void from_json(const nlohmann::json& j, JobEvent& e);
void to_json(nlohmann::json& j, const JobSnapshot& s);
void from_json(const nlohmann::json& j, JobSnapshot& s);
void to_json(nlohmann::json& j, const Notification& n);
void from_json(const nlohmann::json& j, Notification& n);

/// Handle given to a running workload.
class JobContext {
 public:
  virtual ~JobContext() = default;
  /// Monotone progress in [0, 1]; also a cancellation checkpoint.
  virtual void progress(double fraction) = 0;
  virtual void log(std::string level, std::string message) = 0;
  /// Throws Error(Cancelled) once cancellation has been requested.
  virtual void checkpoint() = 0;

  ProgressFn progressFn() {
    return [this](double p) { progress(p); };
  }
};

/// Runs against a private copy of the project and returns the job result.
using Workload = std::function<nlohmann::json(Project& working, JobContext& context)>;

class JobEngine;

/// Ordered replay of a job's events followed by live ones.
class Subscription {
 public:
  /// Next event, waiting up to `timeout`. nullopt when the stream has ended
  /// (job terminal and every event delivered) or on timeout; `ended()`
  /// distinguishes the two.
  std::optional<JobEvent> next(std::chrono::milliseconds timeout);
  bool ended() const noexcept { return ended_; }
  /// State snapshot taken when the subscription was opened.
  const JobSnapshot& initial() const noexcept { return initial_; }

 private:
  friend class JobEngine;
  Subscription(JobEngine& engine, JobSnapshot initial)
      : engine_(engine), jobId_(initial.id), initial_(std::move(initial)) {}
  JobEngine& engine_;
  std::string jobId_;
  JobSnapshot initial_;
  std::uint64_t cursor_ = 0;
  bool ended_ = false;
};

/// Asynchronous executor. Workloads run on a copy of the project; on success
/// the copy replaces the live project when nothing else wrote meanwhile,
/// otherwise the workload is replayed on the live project under its write
/// lock. Failed or cancelled jobs never touch the live project.
class JobEngine {
 public:
  JobEngine(ProjectStore& store, std::size_t workers = 2,
            std::optional<std::filesystem::path> sidecar = std::nullopt);
  ~JobEngine();
  JobEngine(const JobEngine&) = delete;
  JobEngine& operator=(const JobEngine&) = delete;

  /// Throws UnknownProject or ProjectBusy. Returns the new job id at once.
  std::string submit(std::string projectId, JobKind kind, nlohmann::json params, Workload work);

  JobSnapshot status(std::string_view jobId) const;  // throws UnknownJob
  std::vector<JobSnapshot> list(std::string_view projectId) const;
  /// Throws UnknownJob or AlreadyTerminal.
  void cancel(std::string_view jobId);
  /// Blocks until the job is terminal or the timeout passes.
  JobSnapshot wait(std::string_view jobId,
                   std::chrono::milliseconds timeout = std::chrono::hours(24)) const;
  std::unique_ptr<Subscription> subscribe(std::string_view jobId);
  std::vector<Notification> notifications(std::string_view projectId) const;

 private:
  friend class Subscription;
  struct Job;
  class Context;

  void workerLoop();
  void run(Job& job);
  void append(Job& job, std::string level, std::string message, std::optional<JobState> state,
              std::optional<double> progress);
  void finish(Job& job, JobState state, std::string message, std::optional<nlohmann::json> result,
              std::optional<std::string> error);
  Job& find(std::string_view jobId) const;
  void saveSidecar() const;
  void loadSidecar();

  ProjectStore& store_;
  std::optional<std::filesystem::path> sidecar_;
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<std::string, std::unique_ptr<Job>, std::less<>> jobs_;
  std::vector<std::string> order_;  // submission order
  std::deque<std::string> queue_;
  std::vector<Notification> notifications_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// Random (version 4) UUID string.
std::string newUuid();

}  // namespace root
