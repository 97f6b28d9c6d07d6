#include "root/jobs.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "root/artifact_text.hpp"

namespace fs = std::filesystem;

namespace root {

namespace {

constexpr int kSidecarVersion = 1;
constexpr double kProgressEventStep = 0.01;

constexpr std::pair<JobKind, std::string_view> kKindNames[] = {
    {JobKind::import, "import"},
    {JobKind::summarize, "summarize"},
    {JobKind::generate_layer, "generate-layer"},
    {JobKind::predict_links, "predict-links"},
    {JobKind::health_sweep, "health-sweep"},
    {JobKind::extract_concepts, "extract-concepts"},
};
constexpr std::pair<JobState, std::string_view> kStateNames[] = {
    {JobState::created, "created"},     {JobState::running, "running"},
    {JobState::completed, "completed"}, {JobState::failed, "failed"},
    {JobState::cancelled, "cancelled"},
};

}  // namespace

std::string_view to_string(JobKind kind) noexcept {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::string_view to_string(JobState state) noexcept {
  for (const auto& [s, name] : kStateNames) {
    if (s == state) return name;
  }
  return "unknown";
}

JobKind parseJobKind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::InvalidParams, "unknown job kind '" + std::string(name) + "'",
              std::string(name));
}

JobState parseJobState(std::string_view name) {
  for (const auto& [s, n] : kStateNames) {
    if (n == name) return s;
  }
  throw Error(ErrorCode::ParseError, "unknown job state '" + std::string(name) + "'");
}

bool isTerminal(JobState state) noexcept {
  return state == JobState::completed || state == JobState::failed || state == JobState::cancelled;
}

bool isMutating(JobKind kind) noexcept {
  return kind == JobKind::import || kind == JobKind::summarize || kind == JobKind::generate_layer ||
         kind == JobKind::predict_links;
}

void to_json(nlohmann::json& j, const JobEvent& e) {
  j = {{"seq", e.seq},         {"timestamp", e.timestamp},       {"level", e.level},
       {"message", e.message}, {"state", to_string(e.state)},    {"progress", e.progress}};
}

void from_json(const nlohmann::json& j, JobEvent& e) {
  e.seq = j.at("seq").get<std::uint64_t>();
  e.timestamp = j.at("timestamp").get<std::string>();
  e.level = j.at("level").get<std::string>();
  e.message = j.at("message").get<std::string>();
  e.state = parseJobState(j.at("state").get<std::string>());
  e.progress = j.at("progress").get<double>();
}

void to_json(nlohmann::json& j, const JobSnapshot& s) {
  j = {{"id", s.id},
       {"projectId", s.projectId},
       {"kind", to_string(s.kind)},
       {"params", s.params},
       {"state", to_string(s.state)},
       {"progress", s.progress},
       {"events", s.events},
       {"createdAt", s.createdAt}};
  if (s.result) j["result"] = *s.result;
  if (s.error) j["error"] = *s.error;
}

void from_json(const nlohmann::json& j, JobSnapshot& s) {
  s.id = j.at("id").get<std::string>();
  s.projectId = j.at("projectId").get<std::string>();
  s.kind = parseJobKind(j.at("kind").get<std::string>());
  s.params = j.value("params", nlohmann::json::object());
  s.state = parseJobState(j.at("state").get<std::string>());
  s.progress = j.at("progress").get<double>();
  s.events = j.at("events").get<std::vector<JobEvent>>();
  s.createdAt = j.value("createdAt", std::string());
  if (j.contains("result")) s.result = j.at("result");
  if (j.contains("error")) s.error = j.at("error").get<std::string>();
}

void to_json(nlohmann::json& j, const Notification& n) {
  j = {{"timestamp", n.timestamp}, {"projectId", n.projectId},    {"jobId", n.jobId},
       {"kind", to_string(n.kind)}, {"state", to_string(n.state)}, {"message", n.message}};
}

void from_json(const nlohmann::json& j, Notification& n) {
  n.timestamp = j.at("timestamp").get<std::string>();
  n.projectId = j.at("projectId").get<std::string>();
  n.jobId = j.at("jobId").get<std::string>();
  n.kind = parseJobKind(j.at("kind").get<std::string>());
  n.state = parseJobState(j.at("state").get<std::string>());
  n.message = j.at("message").get<std::string>();
}

std::string newUuid() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  unsigned char bytes[16];
  for (int i = 0; i < 16; i += 8) {
    auto v = rng();
    for (int b = 0; b < 8; ++b) bytes[i + b] = static_cast<unsigned char>(v >> (8 * b));
  }
  bytes[6] = static_cast<unsigned char>((bytes[6] & 0x0F) | 0x40);
  bytes[8] = static_cast<unsigned char>((bytes[8] & 0x3F) | 0x80);
  char out[37];
  std::snprintf(out, sizeof out,
                "%02x%02x%02x%02x-%02x%02x-%02x%02x-%02x%02x-%02x%02x%02x%02x%02x%02x", bytes[0],
                bytes[1], bytes[2], bytes[3], bytes[4], bytes[5], bytes[6], bytes[7], bytes[8],
                bytes[9], bytes[10], bytes[11], bytes[12], bytes[13], bytes[14], bytes[15]);
  return out;
}

struct JobEngine::Job {
  JobSnapshot data;
  Workload work;
  std::atomic<bool> cancelRequested{false};
  double lastReported = 0.0;
};

// Progress and log calls from the worker. During a commit replay the job
// can no longer be cancelled and progress stays where it was.
class JobEngine::Context final : public JobContext {
 public:
  Context(JobEngine& engine, Job& job, bool replay) : engine_(engine), job_(job), replay_(replay) {}

  void progress(double fraction) override {
    checkpoint();
    if (replay_) return;
    fraction = std::clamp(fraction, 0.0, 1.0);
    std::lock_guard lock(engine_.mutex_);
    if (fraction <= job_.data.progress) return;
    job_.data.progress = fraction;
    if (fraction - job_.lastReported >= kProgressEventStep) {
      job_.lastReported = fraction;
      char buf[48];
      std::snprintf(buf, sizeof buf, "progress %.0f%%", fraction * 100.0);
      engine_.append(job_, "info", buf, std::nullopt, std::nullopt);
    }
  }

  void log(std::string level, std::string message) override {
    if (replay_) return;
    std::lock_guard lock(engine_.mutex_);
    engine_.append(job_, std::move(level), std::move(message), std::nullopt, std::nullopt);
  }

  void checkpoint() override {
    if (!replay_ && job_.cancelRequested.load()) {
      throw Error(ErrorCode::Cancelled, "job " + job_.data.id + " was cancelled");
    }
  }

 private:
  JobEngine& engine_;
  Job& job_;
  bool replay_;
};

JobEngine::JobEngine(ProjectStore& store, std::size_t workers, std::optional<fs::path> sidecar)
    : store_(store), sidecar_(std::move(sidecar)) {
  if (sidecar_) loadSidecar();
  workers = std::max<std::size_t>(1, workers);
  for (std::size_t i = 0; i < workers; ++i) workers_.emplace_back([this] { workerLoop(); });
}

JobEngine::~JobEngine() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    for (const auto& id : queue_) {
      auto& job = *jobs_.at(id);
      if (job.data.state == JobState::created) {
        finish(job, JobState::cancelled, "cancelled: engine shutting down", std::nullopt, std::nullopt);
      }
    }
    queue_.clear();
    for (auto& [id, job] : jobs_) {
      if (job->data.state == JobState::running) job->cancelRequested = true;
    }
  }
  changed_.notify_all();
  for (auto& t : workers_) t.join();
}

std::string JobEngine::submit(std::string projectId, JobKind kind, nlohmann::json params,
                              Workload work) {
  if (!store_.contains(projectId)) {
    throw Error(ErrorCode::UnknownProject, "unknown project '" + projectId + "'", projectId);
  }
  std::string id;
  {
    std::lock_guard lock(mutex_);
    if (isMutating(kind)) {
      for (const auto& [otherId, other] : jobs_) {
        const auto& d = other->data;
        if (d.projectId == projectId && isMutating(d.kind) && !isTerminal(d.state)) {
          throw Error(ErrorCode::ProjectBusy,
                      "project '" + projectId + "' is busy with " + std::string(to_string(d.kind)) +
                          " job " + d.id,
                      d.id);
        }
      }
    }
    auto job = std::make_unique<Job>();
    do {
      id = newUuid();
    } while (jobs_.contains(id));
    job->data.id = id;
    job->data.projectId = std::move(projectId);
    job->data.kind = kind;
    job->data.params = std::move(params);
    job->data.createdAt = utcTimestamp();
    job->work = std::move(work);
    auto& ref = *job;
    jobs_.emplace(id, std::move(job));
    order_.push_back(id);
    append(ref, "info", "created", JobState::created, 0.0);
    queue_.push_back(id);
    saveSidecar();
  }
  changed_.notify_all();
  return id;
}

JobSnapshot JobEngine::status(std::string_view jobId) const {
  std::lock_guard lock(mutex_);
  return find(jobId).data;
}

std::vector<JobSnapshot> JobEngine::list(std::string_view projectId) const {
  std::lock_guard lock(mutex_);
  std::vector<JobSnapshot> out;
  for (const auto& id : order_) {
    const auto& d = jobs_.at(id)->data;
    if (projectId.empty() || d.projectId == projectId) out.push_back(d);
  }
  return out;
}

void JobEngine::cancel(std::string_view jobId) {
  {
    std::lock_guard lock(mutex_);
    auto& job = find(jobId);
    if (isTerminal(job.data.state)) {
      throw Error(ErrorCode::AlreadyTerminal,
                  "job " + job.data.id + " is already " + std::string(to_string(job.data.state)),
                  job.data.id);
    }
    if (job.data.state == JobState::created) {
      std::erase(queue_, job.data.id);
      finish(job, JobState::cancelled, "cancelled", std::nullopt, std::nullopt);
    } else if (!job.cancelRequested.exchange(true)) {
      append(job, "info", "cancellation requested", std::nullopt, std::nullopt);
    }
  }
  changed_.notify_all();
}

JobSnapshot JobEngine::wait(std::string_view jobId, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  auto& job = find(jobId);
  changed_.wait_for(lock, timeout, [&] { return isTerminal(job.data.state); });
  return job.data;
}

std::unique_ptr<Subscription> JobEngine::subscribe(std::string_view jobId) {
  std::lock_guard lock(mutex_);
  return std::unique_ptr<Subscription>(new Subscription(*this, find(jobId).data));
}

std::vector<Notification> JobEngine::notifications(std::string_view projectId) const {
  std::lock_guard lock(mutex_);
  std::vector<Notification> out;
  for (const auto& n : notifications_) {
    if (projectId.empty() || n.projectId == projectId) out.push_back(n);
  }
  return out;
}

std::optional<JobEvent> Subscription::next(std::chrono::milliseconds timeout) {
  if (ended_) return std::nullopt;
  std::unique_lock lock(engine_.mutex_);
  auto& job = engine_.find(jobId_);
  engine_.changed_.wait_for(lock, timeout, [&] {
    return job.data.events.size() > cursor_ || isTerminal(job.data.state);
  });
  if (job.data.events.size() > cursor_) return job.data.events[cursor_++];
  if (isTerminal(job.data.state)) ended_ = true;
  return std::nullopt;
}

void JobEngine::workerLoop() {
  while (true) {
    Job* job = nullptr;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = jobs_.at(queue_.front()).get();
      queue_.pop_front();
    }
    run(*job);
  }
}

void JobEngine::run(Job& job) {
  {
    std::lock_guard lock(mutex_);
    if (job.data.state != JobState::created) return;
    job.data.state = JobState::running;
    append(job, "info", "started", JobState::running, std::nullopt);
  }
  changed_.notify_all();

  Context context(*this, job, false);
  try {
    Project working = store_.snapshot(job.data.projectId);
    const auto base = working.revision();
    nlohmann::json result = job.work(working, context);
    context.checkpoint();
    store_.write(job.data.projectId, [&](Project& live) {
      if (live.revision() == base) {
        live = std::move(working);
        return;
      }
      // Someone wrote meanwhile: replay on a fresh copy of the live state.
      Project again = live;
      Context replay(*this, job, true);
      result = job.work(again, replay);
      live = std::move(again);
    });
    std::lock_guard lock(mutex_);
    finish(job, JobState::completed, "completed", std::move(result), std::nullopt);
  } catch (const Error& e) {
    std::lock_guard lock(mutex_);
    if (e.code() == ErrorCode::Cancelled) {
      finish(job, JobState::cancelled, "cancelled", std::nullopt, std::nullopt);
    } else {
      finish(job, JobState::failed, std::string("failed: ") + e.what(), std::nullopt,
             std::string(to_string(e.code())) + ": " + e.what());
    }
  } catch (const std::exception& e) {
    std::lock_guard lock(mutex_);
    finish(job, JobState::failed, std::string("failed: ") + e.what(), std::nullopt,
           std::string("Internal: ") + e.what());
  }
  changed_.notify_all();
}

void JobEngine::append(Job& job, std::string level, std::string message,
                       std::optional<JobState> state, std::optional<double> progress) {
  if (state) job.data.state = *state;
  if (progress) job.data.progress = std::max(job.data.progress, *progress);
  JobEvent e;
  e.seq = job.data.events.size();
  e.timestamp = utcTimestamp();
  e.level = std::move(level);
  e.message = std::move(message);
  e.state = job.data.state;
  e.progress = job.data.progress;
  job.data.events.push_back(std::move(e));
  changed_.notify_all();
}

void JobEngine::finish(Job& job, JobState state, std::string message,
                       std::optional<nlohmann::json> result, std::optional<std::string> error) {
  job.data.result = std::move(result);
  job.data.error = error;
  const auto level = state == JobState::failed ? "error" : "info";
  append(job, level, message, state, state == JobState::completed ? std::optional(1.0) : std::nullopt);
  notifications_.push_back({job.data.events.back().timestamp, job.data.projectId, job.data.id,
                            job.data.kind, state, std::move(message)});
  job.work = nullptr;
  saveSidecar();
}

JobEngine::Job& JobEngine::find(std::string_view jobId) const {
  auto it = jobs_.find(jobId);
  if (it == jobs_.end()) {
    throw Error(ErrorCode::UnknownJob, "unknown job '" + std::string(jobId) + "'", std::string(jobId));
  }
  return *it->second;
}

void JobEngine::saveSidecar() const {
  if (!sidecar_) return;
  nlohmann::json doc;
  doc["schema_version"] = kSidecarVersion;
  doc["jobs"] = nlohmann::json::array();
  for (const auto& id : order_) doc["jobs"].push_back(jobs_.at(id)->data);
  doc["notifications"] = notifications_;
  const auto tmp = fs::path(sidecar_->string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Internal, "cannot write " + tmp.string());
    out << doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
  fs::rename(tmp, *sidecar_);
}

void JobEngine::loadSidecar() {
  if (!fs::exists(*sidecar_)) return;
  nlohmann::json doc;
  try {
    std::ifstream in(*sidecar_, std::ios::binary);
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid jobs file: ") + e.what());
  }
  if (doc.value("schema_version", 0) != kSidecarVersion) {
    throw Error(ErrorCode::SchemaMismatch, "unsupported jobs file version");
  }
  for (auto& entry : doc.at("jobs")) {
    auto job = std::make_unique<Job>();
    job->data = entry.get<JobSnapshot>();
    if (!isTerminal(job->data.state)) {
      finish(*job, JobState::failed, "failed: restart", std::nullopt, std::string("restart"));
    }
    auto id = job->data.id;
    order_.push_back(id);
    jobs_.emplace(std::move(id), std::move(job));
  }
  if (doc.contains("notifications")) {
    auto previous = doc.at("notifications").get<std::vector<Notification>>();
    previous.insert(previous.end(), notifications_.begin(), notifications_.end());
    notifications_ = std::move(previous);
  }
  saveSidecar();
}

}  // namespace root
