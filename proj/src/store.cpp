#include "root/store.hpp"

#include <algorithm>

#include "root/ingestion.hpp"

namespace fs = std::filesystem;

namespace root {

ProjectStore::ProjectStore(std::optional<fs::path> dataDir) : dataDir_(std::move(dataDir)) {
  if (!dataDir_) return;
  fs::create_directories(*dataDir_);
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(*dataDir_)) {
    const auto& p = item.path();
    if (item.is_regular_file() && p.extension() == ".json" && p.filename() != "jobs.json") {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    auto project = loadProject(p);
    auto e = std::make_unique<Entry>();
    e->project = std::move(project);
    auto id = e->project.id();
    entries_.emplace(std::move(id), std::move(e));
  }
}

void ProjectStore::create(Project project) {
  if (project.id().empty()) throw Error(ErrorCode::EmptyField, "project id must not be empty", "id");
  std::lock_guard lock(mapMutex_);
  if (entries_.contains(project.id())) {
    throw Error(ErrorCode::DuplicateProject, "project '" + project.id() + "' already exists",
                project.id());
  }
  auto e = std::make_unique<Entry>();
  e->project = std::move(project);
  persist(e->project);
  auto id = e->project.id();
  entries_.emplace(std::move(id), std::move(e));
}

bool ProjectStore::contains(std::string_view id) const {
  std::lock_guard lock(mapMutex_);
  return entries_.find(id) != entries_.end();
}

std::vector<std::string> ProjectStore::ids() const {
  std::lock_guard lock(mapMutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

Project ProjectStore::snapshot(std::string_view id) const {
  return read(std::string(id), [](const Project& p) { return p; });
}

ProjectStore::Entry& ProjectStore::entry(std::string_view id) const {
  std::lock_guard lock(mapMutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw Error(ErrorCode::UnknownProject, "unknown project '" + std::string(id) + "'",
                std::string(id));
  }
  return *it->second;
}

void ProjectStore::persist(const Project& project) const {
  if (dataDir_) saveProject(project, *dataDir_ / (project.id() + ".json"));
}

}  // namespace root
