#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <type_traits>
#include <vector>

#include "root/model.hpp"

namespace root {

/// Named projects held in memory, each behind its own reader/writer lock.
/// With a data directory every project is loaded from and written through
/// to `<dataDir>/<id>.json` whenever a write changes its revision.
class ProjectStore {
 public:
  explicit ProjectStore(std::optional<std::filesystem::path> dataDir = std::nullopt);

  /// Throws DuplicateProject.
  void create(Project project);
  bool contains(std::string_view id) const;
  std::vector<std::string> ids() const;

  /// Copy taken under the project's shared lock. Throws UnknownProject.
  Project snapshot(std::string_view id) const;

  template <typename Fn>
  auto read(const std::string& id, Fn&& fn) const {
    auto& e = entry(id);
    std::shared_lock lock(e.mutex);
    return fn(static_cast<const Project&>(e.project));
  }

  /// Whatever `fn` applied before throwing is kept and persisted too.
  /// A throwing `fn` must leave the project unchanged (core mutators do).
  template <typename Fn>
  auto write(const std::string& id, Fn&& fn) {
    auto& e = entry(id);
    std::unique_lock lock(e.mutex);
    const auto before = e.project.revision();
    using Result = std::invoke_result_t<Fn, Project&>;
    try {
      if constexpr (std::is_void_v<Result>) {
        fn(e.project);
        persistIfChanged(e.project, before);
      } else {
        Result result = fn(e.project);
        persistIfChanged(e.project, before);
        return result;
      }
    } catch (...) {
      // Multi-step operations (trace matrix rows) may have applied a prefix.
      persistIfChanged(e.project, before);
      throw;
    }
  }

  const std::optional<std::filesystem::path>& dataDir() const noexcept { return dataDir_; }

 private:
  struct Entry {
    mutable std::shared_mutex mutex;
    Project project;
  };
  Entry& entry(std::string_view id) const;
  void persist(const Project& project) const;
  void persistIfChanged(const Project& project, std::uint64_t before) const {
    if (project.revision() != before) persist(project);
  }

  std::optional<std::filesystem::path> dataDir_;
  mutable std::mutex mapMutex_;
  std::map<std::string, std::unique_ptr<Entry>, std::less<>> entries_;
};

}  // namespace root
