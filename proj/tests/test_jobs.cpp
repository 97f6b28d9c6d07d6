#include <gtest/gtest.h>

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

#include "fixtures.hpp"
#include "root/jobs.hpp"
#include "root/serialization.hpp"
#include "root/store.hpp"

using namespace root;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

/// One-shot latch the test opens to let a workload continue.
struct Gate {
  std::mutex m;
  std::condition_variable cv;
  bool open = false;
  bool entered = false;

  void release() {
    std::lock_guard lock(m);
    open = true;
    cv.notify_all();
  }
  void waitEntered() {
    std::unique_lock lock(m);
    cv.wait_for(lock, 5s, [&] { return entered; });
  }
  // Called from the workload: waits for release while honouring cancellation.
  void hold(JobContext& ctx) {
    {
      std::lock_guard lock(m);
      entered = true;
      cv.notify_all();
    }
    std::unique_lock lock(m);
    while (!open) {
      lock.unlock();
      ctx.checkpoint();
      std::this_thread::sleep_for(2ms);
      lock.lock();
    }
  }
};

Artifact artifact(std::string id) {
  Artifact a;
  a.id = id;
  a.type = "Requirement";
  a.name = std::move(id);
  a.body = "text";
  return a;
}

ErrorCode codeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST(Store, CreateReadWrite) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  EXPECT_EQ(codeOf([&] { store.create(Project("walkthrough", "x")); }), ErrorCode::DuplicateProject);
  EXPECT_EQ(codeOf([&] { store.snapshot("nope"); }), ErrorCode::UnknownProject);
  const auto n = store.read("walkthrough", [](const Project& p) { return p.artifacts().size(); });
  EXPECT_EQ(n, 6u);
  store.write("walkthrough", [](Project& p) { p.upsertArtifact(artifact("R9")); });
  EXPECT_TRUE(store.snapshot("walkthrough").findArtifact("R9"));
  EXPECT_EQ(store.ids(), std::vector<std::string>{"walkthrough"});
}

TEST(Store, WritesThroughToDisk) {
  const auto dir = fixtures::tempDir("store");
  {
    ProjectStore store(dir);
    store.create(fixtures::walkthroughProject());
    store.write("walkthrough", [](Project& p) { p.upsertArtifact(artifact("R9")); });
  }
  ProjectStore reopened(dir);
  ASSERT_TRUE(reopened.contains("walkthrough"));
  EXPECT_TRUE(reopened.snapshot("walkthrough").findArtifact("R9"));
}

TEST(Jobs, CompletesWithProgressOne) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  JobEngine jobs(store);
  const auto id = jobs.submit("walkthrough", JobKind::extract_concepts, json::object(),
                              [](Project& p, JobContext& ctx) {
                                ctx.progress(0.5);
                                return json{{"n", p.artifacts().size()}};
                              });
  const auto done = jobs.wait(id, 5s);
  EXPECT_EQ(done.state, JobState::completed);
  EXPECT_EQ(done.progress, 1.0);
  EXPECT_EQ((*done.result)["n"], 6);
  EXPECT_EQ(done.events.front().state, JobState::created);
  EXPECT_EQ(done.events.back().state, JobState::completed);
  EXPECT_EQ(done.events.back().progress, 1.0);
  for (std::size_t i = 0; i < done.events.size(); ++i) EXPECT_EQ(done.events[i].seq, i);
  ASSERT_EQ(jobs.notifications("walkthrough").size(), 1u);
  EXPECT_EQ(jobs.notifications("walkthrough")[0].jobId, id);
}

TEST(Jobs, CommitAppliesWorkingCopy) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  JobEngine jobs(store);
  const auto id = jobs.submit("walkthrough", JobKind::import, json::object(), [](Project& p, JobContext&) {
    p.upsertArtifact(artifact("R7"));
    return json::object();
  });
  EXPECT_EQ(jobs.wait(id, 5s).state, JobState::completed);
  EXPECT_TRUE(store.snapshot("walkthrough").findArtifact("R7"));
}

TEST(Jobs, FailedJobLeavesProjectByteIdentical) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  const auto before = serializeProject(store.snapshot("walkthrough"));
  JobEngine jobs(store);
  const auto id = jobs.submit("walkthrough", JobKind::import, json::object(), [](Project& p, JobContext&) -> json {
    p.upsertArtifact(artifact("R7"));
    p.deleteArtifact("R1");
    throw Error(ErrorCode::MalformedRow, "boom", "3");
  });
  const auto done = jobs.wait(id, 5s);
  EXPECT_EQ(done.state, JobState::failed);
  EXPECT_EQ(*done.error, "MalformedRow: boom");
  EXPECT_LT(done.progress, 1.0);
  EXPECT_EQ(serializeProject(store.snapshot("walkthrough")), before);
}

TEST(Jobs, CancelRunningJob) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  const auto before = serializeProject(store.snapshot("walkthrough"));
  JobEngine jobs(store);
  Gate gate;
  const auto id = jobs.submit("walkthrough", JobKind::import, json::object(), [&](Project& p, JobContext& ctx) {
    p.upsertArtifact(artifact("R7"));
    gate.hold(ctx);
    return json::object();
  });
  gate.waitEntered();
  jobs.cancel(id);
  const auto done = jobs.wait(id, 5s);
  EXPECT_EQ(done.state, JobState::cancelled);
  EXPECT_EQ(serializeProject(store.snapshot("walkthrough")), before);
  EXPECT_EQ(codeOf([&] { jobs.cancel(id); }), ErrorCode::AlreadyTerminal);
  EXPECT_EQ(codeOf([&] { jobs.cancel("missing"); }), ErrorCode::UnknownJob);
}

TEST(Jobs, CancelQueuedJob) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  store.create(Project("other", "Other"));
  JobEngine jobs(store, 1);
  Gate gate;
  const auto blocker = jobs.submit("other", JobKind::health_sweep, json::object(), [&](Project&, JobContext& ctx) {
    gate.hold(ctx);
    return json::object();
  });
  gate.waitEntered();
  std::atomic<bool> ran{false};
  const auto queued = jobs.submit("walkthrough", JobKind::import, json::object(), [&](Project&, JobContext&) {
    ran = true;
    return json::object();
  });
  EXPECT_EQ(jobs.status(queued).state, JobState::created);
  jobs.cancel(queued);
  EXPECT_EQ(jobs.status(queued).state, JobState::cancelled);
  gate.release();
  EXPECT_EQ(jobs.wait(blocker, 5s).state, JobState::completed);
  EXPECT_FALSE(ran.load());
}

TEST(Jobs, OneMutatingJobPerProject) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  JobEngine jobs(store);
  Gate gate;
  const auto first = jobs.submit("walkthrough", JobKind::import, json::object(), [&](Project&, JobContext& ctx) {
    gate.hold(ctx);
    return json::object();
  });
  EXPECT_EQ(codeOf([&] {
              jobs.submit("walkthrough", JobKind::predict_links, json::object(),
                          [](Project&, JobContext&) { return json::object(); });
            }),
            ErrorCode::ProjectBusy);
  // Read-only kinds may run alongside.
  const auto sweep = jobs.submit("walkthrough", JobKind::extract_concepts, json::object(),
                                 [](Project&, JobContext&) { return json::object(); });
  EXPECT_EQ(jobs.wait(sweep, 5s).state, JobState::completed);
  gate.release();
  EXPECT_EQ(jobs.wait(first, 5s).state, JobState::completed);
  EXPECT_EQ(codeOf([&] {
              jobs.submit("missing", JobKind::import, json::object(),
                          [](Project&, JobContext&) { return json::object(); });
            }),
            ErrorCode::UnknownProject);
}

TEST(Jobs, ConcurrentWriteTriggersReplay) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  JobEngine jobs(store);
  Gate gate;
  std::atomic<int> runs{0};
  const auto id = jobs.submit("walkthrough", JobKind::import, json::object(), [&](Project& p, JobContext& ctx) {
    if (runs++ == 0) gate.hold(ctx);
    p.upsertArtifact(artifact("R7"));
    return json{{"size", p.artifacts().size()}};
  });
  gate.waitEntered();
  store.write("walkthrough", [](Project& p) { p.upsertArtifact(artifact("R8")); });
  gate.release();
  const auto done = jobs.wait(id, 5s);
  EXPECT_EQ(done.state, JobState::completed);
  EXPECT_EQ(runs.load(), 2);
  const auto live = store.snapshot("walkthrough");
  EXPECT_TRUE(live.findArtifact("R7"));
  EXPECT_TRUE(live.findArtifact("R8"));
  EXPECT_EQ((*done.result)["size"], 8);
}

TEST(Jobs, SubscriberExtendsEveryPoll) {
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  JobEngine jobs(store);
  Gate gate;
  const auto id = jobs.submit("walkthrough", JobKind::summarize, json::object(), [&](Project&, JobContext& ctx) {
    gate.hold(ctx);
    for (int i = 1; i <= 50; ++i) {
      ctx.progress(i / 50.0);
      if (i % 10 == 0) ctx.log("info", "step " + std::to_string(i));
    }
    return json::object();
  });
  auto sub = jobs.subscribe(id);
  std::vector<JobSnapshot> polls;
  std::thread poller([&] {
    for (int i = 0; i < 40; ++i) {
      polls.push_back(jobs.status(id));
      std::this_thread::sleep_for(1ms);
    }
  });
  gate.release();
  std::vector<JobEvent> streamed;
  while (auto e = sub->next(5s)) streamed.push_back(*e);
  poller.join();
  EXPECT_TRUE(sub->ended());
  const auto final = jobs.status(id);
  EXPECT_EQ(streamed, final.events);
  double last = 0;
  for (const auto& e : streamed) {
    EXPECT_GE(e.progress, last);
    last = e.progress;
  }
  for (const auto& poll : polls) {
    ASSERT_LE(poll.events.size(), streamed.size());
    for (std::size_t i = 0; i < poll.events.size(); ++i) EXPECT_EQ(poll.events[i], streamed[i]);
  }
}

TEST(Jobs, SidecarSurvivesRestart) {
  const auto dir = fixtures::tempDir("sidecar");
  ProjectStore store;
  store.create(fixtures::walkthroughProject());
  std::string id;
  {
    JobEngine jobs(store, 1, dir / "jobs.json");
    id = jobs.submit("walkthrough", JobKind::extract_concepts, json{{"topN", 3}},
                     [](Project&, JobContext&) { return json{{"ok", true}}; });
    jobs.wait(id, 5s);
  }
  JobEngine reopened(store, 1, dir / "jobs.json");
  const auto snap = reopened.status(id);
  EXPECT_EQ(snap.state, JobState::completed);
  EXPECT_EQ(snap.params["topN"], 3);
  EXPECT_EQ(reopened.notifications("walkthrough").size(), 1u);
}

TEST(Jobs, InterruptedJobsFailOnRestart) {
  const auto dir = fixtures::tempDir("sidecar2");
  JobSnapshot stale;
  stale.id = newUuid();
  stale.projectId = "walkthrough";
  stale.kind = JobKind::import;
  stale.state = JobState::running;
  stale.createdAt = "2024-01-01T00:00:00.000Z";
  {
    std::ofstream out(dir / "jobs.json");
    out << json{{"schema_version", 1}, {"jobs", json::array({stale})}, {"notifications", json::array()}}.dump();
  }
  ProjectStore store;
  JobEngine jobs(store, 1, dir / "jobs.json");
  const auto snap = jobs.status(stale.id);
  EXPECT_EQ(snap.state, JobState::failed);
  EXPECT_NE(snap.error->find("restart"), std::string::npos);
}

TEST(Jobs, UuidShape) {
  const auto id = newUuid();
  ASSERT_EQ(id.size(), 36u);
  EXPECT_EQ(id[14], '4');
  EXPECT_TRUE(std::string("89ab").find(id[19]) != std::string::npos);
  EXPECT_NE(newUuid(), id);
}

TEST(Jobs, KindNames) {
  EXPECT_EQ(parseJobKind("generate-layer"), JobKind::generate_layer);
  EXPECT_EQ(to_string(JobKind::predict_links), "predict-links");
  EXPECT_EQ(codeOf([] { parseJobKind("bake"); }), ErrorCode::InvalidParams);
  EXPECT_TRUE(isMutating(JobKind::import));
  EXPECT_FALSE(isMutating(JobKind::health_sweep));
}
