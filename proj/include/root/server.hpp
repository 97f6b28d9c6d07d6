#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "root/engine.hpp"
#include "root/error.hpp"

namespace root {

/// HTTP status used for an engine error code.
int httpStatus(ErrorCode code) noexcept;
/// `{error, message, detail?}` body for an engine error.
nlohmann::json errorBody(const Error& error);

/// REST + server-sent-events front end over an Engine. Routes are listed in
/// docs/api.md.
class Server {
 public:
  explicit Server(Engine& engine);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace root
