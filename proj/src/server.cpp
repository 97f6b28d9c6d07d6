#include "root/server.hpp"

#include <atomic>
#include <chrono>
#include <functional>

#include <httplib.h>

#include "root/docgen.hpp"
#include "root/query.hpp"
#include "root/serialization.hpp"
#include "root/trace.hpp"
#include "root/vocab.hpp"

namespace root {

using nlohmann::json;

int httpStatus(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownId:
    case ErrorCode::UnknownLink:
    case ErrorCode::UnknownProject:
    case ErrorCode::UnknownJob:
    case ErrorCode::UnknownFinding:
    case ErrorCode::PathNotFound:
      return 404;
    case ErrorCode::DuplicateId:
    case ErrorCode::DuplicateLink:
    case ErrorCode::CycleDetected:
    case ErrorCode::DuplicateTerm:
    case ErrorCode::DuplicateProject:
    case ErrorCode::ProjectBusy:
    case ErrorCode::NotPending:
    case ErrorCode::AlreadyClosed:
    case ErrorCode::AlreadyTerminal:
      return 409;
    case ErrorCode::ProviderUnavailable:
      return 503;
    case ErrorCode::Internal:
      return 500;
    default:
      return 400;
  }
}

json errorBody(const Error& error) {
  json body = {{"error", to_string(error.code())}, {"message", error.what()}};
  if (!error.detail().empty()) body["detail"] = error.detail();
  return body;
}

namespace {

using httplib::Request;
using httplib::Response;

constexpr auto kEventPoll = std::chrono::milliseconds(200);

void send(Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

json parseBody(const Request& req) {
  if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    auto body = json::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
    return body;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON body: ") + e.what());
  }
}

std::string field(const json& body, const char* key, bool required = true) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    if (required) throw Error(ErrorCode::EmptyField, std::string("missing field '") + key + "'", key);
    return {};
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::InvalidParams, std::string("field '") + key + "' must be a string", key);
  }
  return it->get<std::string>();
}

std::size_t queryCount(const Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const auto text = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidParams, std::string("query parameter '") + key +
                                              "' must be a non-negative integer", key);
  }
}

bool truthy(const std::string& v) { return v == "true" || v == "1" || v == "yes"; }

json rowJson(const SearchRow& r) {
  return {{"id", r.id},       {"type", r.type},           {"name", r.name},
          {"score", r.score}, {"nameScore", r.nameScore}, {"bodyScore", r.bodyScore},
          {"flagged", r.flagged}};
}

json projectInfo(const Project& p) {
  return {{"id", p.id()},
          {"name", p.name()},
          {"revision", p.revision()},
          {"artifactCount", p.artifacts().size()},
          {"linkCount", p.links().size()}};
}

}  // namespace

struct Server::Impl {
  Engine& engine;
  httplib::Server http;
  std::atomic<bool> stopping{false};

  explicit Impl(Engine& e) : engine(e) { routes(); }

  using Handler = std::function<void(const Request&, Response&)>;

  static Handler guard(Handler inner) {
    return [inner = std::move(inner)](const Request& req, Response& res) {
      try {
        inner(req, res);
      } catch (const Error& e) {
        send(res, errorBody(e), httpStatus(e.code()));
      } catch (const json::exception& e) {
        send(res, errorBody(Error(ErrorCode::ParseError, e.what())), 400);
      } catch (const std::exception& e) {
        send(res, errorBody(Error(ErrorCode::Internal, e.what())), 500);
      }
    };
  }

  void get(const std::string& pattern, Handler h) { http.Get(pattern, guard(std::move(h))); }
  void post(const std::string& pattern, Handler h) { http.Post(pattern, guard(std::move(h))); }
  void patch(const std::string& pattern, Handler h) { http.Patch(pattern, guard(std::move(h))); }
  void del(const std::string& pattern, Handler h) { http.Delete(pattern, guard(std::move(h))); }

  ProjectStore& store() { return engine.store(); }

  template <typename Fn>
  auto write(const std::string& pid, Fn&& fn) {
    return store().write(pid, std::forward<Fn>(fn));
  }

  void submitJob(const std::string& pid, const std::string& kind, json params, bool wait,
                 Response& res) {
    const auto id = engine.submit(pid, kind, std::move(params));
    if (wait) {
      send(res, engine.jobs().wait(id));
      return;
    }
    const auto snap = engine.jobs().status(id);
    send(res, {{"jobId", id}, {"state", to_string(snap.state)}}, 202);
  }

  void routes() {
    const std::string P = R"(/projects/([^/]+))";

    get("/projects", [this](const Request&, Response& res) {
      json out = json::array();
      for (const auto& id : store().ids()) {
        out.push_back(store().read(id, [](const Project& p) { return projectInfo(p); }));
      }
      send(res, out);
    });

    post("/projects", [this](const Request& req, Response& res) {
      const auto body = parseBody(req);
      const auto id = engine.createProject(field(body, "id", false), field(body, "name", false));
      send(res, store().read(id, [](const Project& p) { return projectInfo(p); }), 201);
    });

    get(P, [this](const Request& req, Response& res) {
      send(res, store().read(req.matches[1], [](const Project& p) { return projectToJson(p); }));
    });

    post(P + R"(/import/(directory|table|matrix))", [this](const Request& req, Response& res) {
      auto params = parseBody(req);
      params["source"] = req.matches[2].str();
      submitJob(req.matches[1], "import", std::move(params),
                truthy(req.get_param_value("wait")), res);
    });

    // Artifacts.
    get(P + "/artifacts", [this](const Request& req, Response& res) {
      const auto type = req.get_param_value("type");
      send(res, store().read(req.matches[1], [&](const Project& p) {
        json out = json::array();
        for (const auto& [id, a] : p.artifacts()) {
          if (type.empty() || a.type == type) out.push_back(a);
        }
        return out;
      }));
    });

    post(P + "/artifacts", [this](const Request& req, Response& res) {
      const auto body = parseBody(req);
      Artifact a;
      a.type = field(body, "type");
      a.name = field(body, "name");
      a.id = field(body, "id", false);
      a.body = field(body, "body", false);
      if (body.contains("summary") && !body["summary"].is_null()) a.summary = field(body, "summary");
      if (body.contains("attributes")) a.attributes = body["attributes"].get<std::map<std::string, std::string>>();
      a.provenance = Provenance::manual;
      const auto created = write(req.matches[1], [&](Project& p) {
        if (a.id.empty()) a.id = p.nextGeneratedId(a.type);
        p.upsertArtifact(a, UpsertMode::create);
        return json(p.artifact(a.id));
      });
      send(res, created, 201);
    });

    post(P + "/artifacts/(.+)/health", [this](const Request& req, Response& res) {
      auto& provider = engine.provider();
      send(res, write(req.matches[1], [&](Project& p) {
        return json(healthCheck(p, req.matches[2].str(), provider));
      }));
    });

    post(P + "/artifacts/(.+)/flag", [this](const Request& req, Response& res) {
      const auto body = parseBody(req);
      const auto note = field(body, "note", false);
      send(res, write(req.matches[1], [&](Project& p) {
        flagArtifact(p, req.matches[2].str(), note);
        return json(p.artifact(req.matches[2].str()));
      }));
    });

    post(P + "/artifacts/(.+)/summarize", [this](const Request& req, Response& res) {
      auto& provider = engine.provider();
      send(res, write(req.matches[1], [&](Project& p) {
        summarizeFile(p, req.matches[2].str(), provider);
        return json(p.artifact(req.matches[2].str()));
      }));
    });

    get(P + "/artifacts/(.+)", [this](const Request& req, Response& res) {
      send(res, store().read(req.matches[1], [&](const Project& p) {
        return json(p.artifact(req.matches[2].str()));
      }));
    });

    patch(P + "/artifacts/(.+)", [this](const Request& req, Response& res) {
      const auto body = parseBody(req);
      send(res, write(req.matches[1], [&](Project& p) {
        Artifact a = p.artifact(req.matches[2].str());
        if (body.contains("type")) a.type = field(body, "type");
        if (body.contains("name")) a.name = field(body, "name");
        if (body.contains("body")) a.body = field(body, "body");
        if (body.contains("summary")) {
          a.summary = body["summary"].is_null() ? std::nullopt : std::optional(field(body, "summary"));
        }
        if (body.contains("flagged")) {
          const auto note = body["flagged"].is_null() ? std::string() : field(body, "flagged");
          a.flagged = note.empty() ? std::nullopt : std::optional(note);
        }
        if (body.contains("attributes")) {
          a.attributes = body["attributes"].get<std::map<std::string, std::string>>();
        }
        p.upsertArtifact(a, UpsertMode::update);
        return json(p.artifact(a.id));
      }));
    });

    del(P + "/artifacts/(.+)", [this](const Request& req, Response& res) {
      const auto revision = write(req.matches[1], [&](Project& p) {
        return p.deleteArtifact(req.matches[2].str());
      });
      send(res, {{"deleted", req.matches[2].str()}, {"revision", revision}});
    });

    // Links.
    get(P + "/links", [this](const Request& req, Response& res) {
      const auto status = req.get_param_value("status");
      std::optional<LinkStatus> filter;
      if (!status.empty()) filter = parse_enum<LinkStatus>(status);
      send(res, store().read(req.matches[1], [&](const Project& p) {
        json out = json::array();
        for (const auto& [key, l] : p.links()) {
          if (!filter || l.status == *filter) out.push_back(l);
        }
        return out;
      }));
    });

    post(P + "/links", [this](const Request& req, Response& res) {
      const auto body = parseBody(req);
      TraceLink link;
      link.childId = field(body, "childId");
      link.parentId = field(body, "parentId");
      const auto status = field(body, "status", false);
      link.status = status.empty() ? LinkStatus::manual : parse_enum<LinkStatus>(status);
      if (body.contains("score") && body["score"].is_number()) link.score = body["score"].get<double>();
      link.createdBy = LinkOrigin::user;
      send(res, write(req.matches[1], [&](Project& p) {
        p.addLink(link);
        return json(*p.findLink(link.childId, link.parentId));
      }), 201);
    });

    del(P + "/links", [this](const Request& req, Response& res) {
      const auto child = req.get_param_value("child");
      const auto parent = req.get_param_value("parent");
      const auto revision = write(req.matches[1], [&](Project& p) { return p.removeLink(child, parent); });
      send(res, {{"revision", revision}});
    });

    const auto review = [this](const std::string& pid, const std::string& child,
                               const std::string& parent, const json& body, Response& res) {
      const auto decision = parseDecision(field(body, "decision"));
      const auto reviewer = field(body, "reviewer", false);
      send(res, write(pid, [&](Project& p) {
        reviewLink(p, child, parent, decision, reviewer);
        return json(*p.findLink(child, parent));
      }));
    };
    const auto explain = [this](const std::string& pid, const std::string& child,
                                const std::string& parent, Response& res) {
      auto& provider = engine.provider();
      send(res, write(pid, [&](Project& p) {
        explainLink(p, child, parent, provider);
        return json(*p.findLink(child, parent));
      }));
    };

    post(P + "/links/review", [review](const Request& req, Response& res) {
      const auto body = parseBody(req);
      review(req.matches[1], field(body, "childId"), field(body, "parentId"), body, res);
    });
    post(P + "/links/explain", [explain](const Request& req, Response& res) {
      const auto body = parseBody(req);
      explain(req.matches[1], field(body, "childId"), field(body, "parentId"), res);
    });
    post(P + "/links/([^/]+)/([^/]+)/review", [review](const Request& req, Response& res) {
      review(req.matches[1], req.matches[2], req.matches[3], parseBody(req), res);
    });
    post(P + "/links/([^/]+)/([^/]+)/explain", [explain](const Request& req, Response& res) {
      explain(req.matches[1], req.matches[2], req.matches[3], res);
    });

    // Graph views.
    get(P + "/tim", [this](const Request& req, Response& res) {
      send(res, store().read(req.matches[1], [](const Project& p) { return json(computeTim(p)); }));
    });

    get(P + "/views/(.+)", [this](const Request& req, Response& res) {
      const auto up = queryCount(req, "up", 1);
      const auto down = queryCount(req, "down", 1);
      send(res, store().read(req.matches[1], [&](const Project& p) {
        return json(focusedView(p, req.matches[2].str(), up, down));
      }));
    });

    // Retrieval.
    get(P + "/search", [this](const Request& req, Response& res) {
      SearchFilters filters;
      if (req.has_param("type")) filters.type = req.get_param_value("type");
      if (req.has_param("flagged")) filters.flagged = truthy(req.get_param_value("flagged"));
      if (req.has_param("status")) filters.status = parse_enum<LinkStatus>(req.get_param_value("status"));
      const auto sort = parseSearchSort(req.get_param_value("sort"));
      const auto limit = queryCount(req, "limit", 0);
      const auto q = req.get_param_value("q");
      send(res, store().read(req.matches[1], [&](const Project& p) {
        json rows = json::array();
        for (const auto& r : searchArtifacts(p, q, filters, sort, limit)) rows.push_back(rowJson(r));
        return json{{"query", q}, {"results", rows}};
      }));
    });

    post(P + "/chat", [this](const Request& req, Response& res) {
      const auto body = parseBody(req);
      const auto question = field(body, "question", false);
      std::size_t k = queryCount(req, "k", kDefaultChatK);
      if (body.contains("k")) {
        if (!body["k"].is_number_integer() || body["k"].get<long long>() < 0) {
          throw Error(ErrorCode::InvalidParams, "k must be a non-negative integer", "k");
        }
        k = body["k"].get<std::size_t>();
      }
      auto& provider = engine.provider();
      const auto answer = store().read(req.matches[1], [&](const Project& p) {
        return chatQuery(p, question, k, provider);
      });
      send(res, {{"text", answer.text},
                 {"citedArtifactIds", answer.citedArtifactIds},
                 {"usedK", answer.usedK},
                 {"providerAvailable", answer.providerAvailable}});
    });

    // Vocabulary and findings.
    get(P + "/concepts", [this](const Request& req, Response& res) {
      send(res, store().read(req.matches[1], [](const Project& p) { return json(p.concepts()); }));
    });

    post(P + "/concepts", [this](const Request& req, Response& res) {
      const auto body = parseBody(req);
      const auto term = field(body, "term");
      const auto definition = field(body, "definition", false);
      send(res, write(req.matches[1], [&](Project& p) {
        addConcept(p, term, definition);
        return json(*p.findConcept(term));
      }), 201);
    });

    get(P + "/concepts/candidates", [this](const Request& req, Response& res) {
      const auto topN = queryCount(req, "topN", kDefaultCandidateCount);
      send(res, store().read(req.matches[1], [&](const Project& p) {
        json out = json::array();
        for (const auto& c : extractConcepts(p, std::max<std::size_t>(1, topN))) {
          out.push_back({{"term", c.term}, {"score", c.score}, {"frequency", c.frequency},
                         {"documents", c.documents}});
        }
        return out;
      }));
    });

    del(P + "/concepts/(.+)", [this](const Request& req, Response& res) {
      const auto revision = write(req.matches[1], [&](Project& p) {
        return p.removeConcept(req.matches[2].str());
      });
      send(res, {{"revision", revision}});
    });

    get(P + "/findings", [this](const Request& req, Response& res) {
      const auto artifact = req.get_param_value("artifactId");
      const auto state = req.get_param_value("state");
      std::optional<FindingState> filter;
      if (!state.empty()) filter = parse_enum<FindingState>(state);
      send(res, store().read(req.matches[1], [&](const Project& p) {
        json out = json::array();
        for (const auto& [id, f] : p.findings()) {
          if (!artifact.empty() && f.artifactId != artifact) continue;
          if (filter && f.state != *filter) continue;
          out.push_back(f);
        }
        return out;
      }));
    });

    get(P + "/findings/([^/]+)", [this](const Request& req, Response& res) {
      send(res, store().read(req.matches[1], [&](const Project& p) {
        const auto* f = p.findFinding(req.matches[2].str());
        if (!f) throw Error(ErrorCode::UnknownFinding, "unknown finding '" + req.matches[2].str() + "'");
        return json(*f);
      }));
    });

    post(P + "/findings/([^/]+)", [this](const Request& req, Response& res) {
      const auto action = parseFindingAction(field(parseBody(req), "action"));
      send(res, write(req.matches[1], [&](Project& p) {
        resolveFinding(p, req.matches[2].str(), action);
        return json(*p.findFinding(req.matches[2].str()));
      }));
    });

    // Jobs.
    post(P + "/jobs", [this](const Request& req, Response& res) {
      const auto body = parseBody(req);
      const auto params = body.contains("params") ? body["params"] : json::object();
      const bool wait = truthy(req.get_param_value("wait")) || body.value("wait", false);
      submitJob(req.matches[1], field(body, "kind"), params, wait, res);
    });

    get(P + "/jobs", [this](const Request& req, Response& res) {
      if (!store().contains(req.matches[1].str())) {
        throw Error(ErrorCode::UnknownProject, "unknown project '" + req.matches[1].str() + "'");
      }
      send(res, json(engine.jobs().list(req.matches[1].str())));
    });

    get(P + "/notifications", [this](const Request& req, Response& res) {
      send(res, json(engine.jobs().notifications(req.matches[1].str())));
    });

    get(P + "/jobs/([^/]+)", [this](const Request& req, Response& res) {
      send(res, jobOf(req.matches[1], req.matches[2]));
    });

    post(P + "/jobs/([^/]+)/cancel", [this](const Request& req, Response& res) {
      jobOf(req.matches[1], req.matches[2]);
      engine.jobs().cancel(req.matches[2].str());
      send(res, engine.jobs().status(req.matches[2].str()), 202);
    });

    get(P + "/jobs/([^/]+)/events", [this](const Request& req, Response& res) {
      jobOf(req.matches[1], req.matches[2]);
      std::shared_ptr<Subscription> sub = engine.jobs().subscribe(req.matches[2].str());
      auto snapshotSent = std::make_shared<bool>(false);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, sub, snapshotSent](std::size_t, httplib::DataSink& sink) {
            const auto emit = [&](const std::string& frame) { return sink.write(frame.data(), frame.size()); };
            if (!*snapshotSent) {
              *snapshotSent = true;
              return emit("event: snapshot\ndata: " + json(sub->initial()).dump() + "\n\n");
            }
            if (stopping) return false;
            if (auto event = sub->next(kEventPoll)) {
              return emit("id: " + std::to_string(event->seq) + "\nevent: job\ndata: " +
                          json(*event).dump() + "\n\n");
            }
            if (sub->ended()) sink.done();
            return true;
          });
    });
  }

  JobSnapshot jobOf(const std::string& pid, const std::string& jid) {
    auto snap = engine.jobs().status(jid);
    if (snap.projectId != pid) throw Error(ErrorCode::UnknownJob, "unknown job '" + jid + "'", jid);
    return snap;
  }
};

Server::Server(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool Server::serve() { return impl_->http.listen_after_bind(); }

void Server::stop() {
  impl_->stopping = true;
  impl_->http.stop();
}

bool Server::running() const { return impl_->http.is_running(); }

}  // namespace root
