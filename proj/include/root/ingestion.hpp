#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "root/model.hpp"
#include "root/progress.hpp"

namespace root {

enum class SourceKind { directory, table, matrix, projectFile };
std::string_view to_string(SourceKind kind) noexcept;

struct SkippedFile {
  std::string path;
  std::string reason;
  bool operator==(const SkippedFile&) const = default;
};

struct ImportReport {
  SourceKind sourceKind = SourceKind::directory;
  std::size_t artifactsCreated = 0;
  std::size_t artifactsUpdated = 0;
  std::size_t linksCreated = 0;
  std::vector<SkippedFile> skippedFiles;
  std::vector<std::string> warnings;  // e.g. "NothingMatched"
};

inline constexpr std::size_t kDefaultMaxFileBytes = 1024 * 1024;
inline constexpr std::size_t kBinarySniffBytes = 8 * 1024;

struct DirectoryImportOptions {
  std::vector<std::string> includeGlobs = defaultIncludeGlobs();
  std::vector<std::string> excludeGlobs = defaultExcludeGlobs();
  std::size_t maxFileBytes = kDefaultMaxFileBytes;
  bool includeHidden = false;

  static std::vector<std::string> defaultIncludeGlobs();
  static std::vector<std::string> defaultExcludeGlobs();
};

/// Glob over "/"-separated relative paths: `*` and `?` stay within one
/// segment, `**` spans segments. A pattern without "/" matches the file name
/// at any depth.
bool globMatch(std::string_view pattern, std::string_view relativePath);

/// One "Code" artifact per matched text file, id = name = relative path.
/// Files are visited in lexicographic path order. Re-importing updates
/// changed bodies in place and creates nothing new.
ImportReport importDirectory(Project& project, const std::filesystem::path& rootPath,
                             const DirectoryImportOptions& options = {},
                             const ProgressFn& progress = {});

/// CSV with header columns id,type,name,body (extra columns become
/// attributes) or a JSON array of artifact objects.
ImportReport importTable(Project& project, const std::filesystem::path& tablePath);
ImportReport importTableText(Project& project, const std::string& text);

/// CSV `child_id,parent_id`; every row becomes a manual link. A failing row
/// throws with its line number in `detail()`; earlier rows stay applied.
ImportReport importTraceMatrix(Project& project, const std::filesystem::path& matrixPath);
ImportReport importTraceMatrixText(Project& project, std::string_view text);

void saveProject(const Project& project, const std::filesystem::path& path);
Project loadProject(const std::filesystem::path& path);

std::string readTextFile(const std::filesystem::path& path);
/// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitizeUtf8(std::string_view bytes);

}  // namespace root
