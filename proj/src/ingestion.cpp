#include "root/ingestion.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "root/csv.hpp"
#include "root/serialization.hpp"

namespace fs = std::filesystem;

namespace root {

std::string_view to_string(SourceKind kind) noexcept {
  switch (kind) {
    case SourceKind::directory: return "directory";
    case SourceKind::table: return "table";
    case SourceKind::matrix: return "matrix";
    case SourceKind::projectFile: return "projectFile";
  }
  return "directory";
}

std::vector<std::string> DirectoryImportOptions::defaultIncludeGlobs() {
  return {"*.c",   "*.cc",  "*.cpp", "*.cxx", "*.h",     "*.hh",    "*.hpp", "*.hxx",
          "*.ipp", "*.inl", "*.py",  "*.rs",  "*.go",    "*.java",  "*.kt",  "*.scala",
          "*.js",  "*.jsx", "*.ts",  "*.tsx", "*.vue",   "*.cs",    "*.rb",  "*.php",
          "*.swift", "*.m", "*.mm",  "*.sh",  "*.sql",   "*.proto", "*.lua", "*.cmake"};
}

std::vector<std::string> DirectoryImportOptions::defaultExcludeGlobs() {
  return {"**/build/**", "**/cmake-build-*/**", "**/dist/**",        "**/out/**",
          "**/target/**", "**/node_modules/**", "**/__pycache__/**", "**/vendor/**"};
}

namespace {

bool globMatchImpl(std::string_view p, std::string_view s) {
  while (!p.empty()) {
    if (p.starts_with("**")) {
      p.remove_prefix(2);
      const bool anchored = p.starts_with('/');
      if (anchored) p.remove_prefix(1);
      for (std::size_t i = 0; i <= s.size(); ++i) {
        if (anchored && i > 0 && s[i - 1] != '/') continue;
        if (globMatchImpl(p, s.substr(i))) return true;
      }
      return false;
    }
    if (p.front() == '*') {
      p.remove_prefix(1);
      for (std::size_t i = 0; i <= s.size(); ++i) {
        if (globMatchImpl(p, s.substr(i))) return true;
        if (i < s.size() && s[i] == '/') break;
      }
      return false;
    }
    if (s.empty()) return false;
    if (p.front() == '?') {
      if (s.front() == '/') return false;
    } else if (p.front() != s.front()) {
      return false;
    }
    p.remove_prefix(1);
    s.remove_prefix(1);
  }
  return s.empty();
}

bool anyMatch(const std::vector<std::string>& globs, std::string_view rel) {
  return std::any_of(globs.begin(), globs.end(),
                     [&](const std::string& g) { return globMatch(g, rel); });
}

bool hasHiddenSegment(std::string_view rel) {
  std::size_t start = 0;
  while (start < rel.size()) {
    if (rel[start] == '.') return true;
    auto slash = rel.find('/', start);
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return false;
}

ImportReport upsertRows(Project& project, std::vector<std::pair<std::size_t, Artifact>> rows,
                        SourceKind kind) {
  ImportReport report;
  report.sourceKind = kind;
  for (auto& [line, artifact] : rows) {
    const auto* existing = project.findArtifact(artifact.id);
    if (existing && *existing == artifact) continue;
    const bool created = existing == nullptr;
    try {
      project.upsertArtifact(std::move(artifact));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRow, "row on line " + std::to_string(line) + ": " + e.what(),
                  std::to_string(line));
    }
    if (created) {
      ++report.artifactsCreated;
    } else {
      ++report.artifactsUpdated;
    }
  }
  return report;
}

}  // namespace

bool globMatch(std::string_view pattern, std::string_view relativePath) {
  if (pattern.find('/') == std::string_view::npos) {
    auto slash = relativePath.rfind('/');
    if (slash != std::string_view::npos) relativePath.remove_prefix(slash + 1);
  }
  return globMatchImpl(pattern, relativePath);
}

std::string sanitizeUtf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto c = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    if (c < 0x80) {
      len = 1;
    } else if (c >= 0xC2 && c <= 0xDF) {
      len = 2;
    } else if (c >= 0xE0 && c <= 0xEF) {
      len = 3;
    } else if (c >= 0xF0 && c <= 0xF4) {
      len = 4;
    }
    bool ok = len > 0 && i + len <= bytes.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      ok = (static_cast<unsigned char>(bytes[i + k]) & 0xC0) == 0x80;
    }
    if (ok && len >= 3) {
      const auto c1 = static_cast<unsigned char>(bytes[i + 1]);
      if (c == 0xE0 && c1 < 0xA0) ok = false;  // overlong
      if (c == 0xED && c1 > 0x9F) ok = false;  // surrogate
      if (c == 0xF0 && c1 < 0x90) ok = false;  // overlong
      if (c == 0xF4 && c1 > 0x8F) ok = false;  // > U+10FFFF
    }
    if (ok) {
      out.append(bytes.substr(i, len));
      i += len;
    } else {
      out += "\xEF\xBF\xBD";
      ++i;
    }
  }
  return out;
}

std::string readTextFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::PathNotFound, "cannot read '" + path.string() + "'", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ImportReport importDirectory(Project& project, const fs::path& rootPath,
                             const DirectoryImportOptions& options, const ProgressFn& progress) {
  std::error_code ec;
  if (!fs::is_directory(rootPath, ec)) {
    throw Error(ErrorCode::PathNotFound, "directory '" + rootPath.string() + "' not found",
                rootPath.string());
  }

  std::vector<std::string> matched;
  for (auto it = fs::recursive_directory_iterator(rootPath, fs::directory_options::skip_permission_denied, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    const auto rel = it->path().lexically_relative(rootPath).generic_string();
    const bool hidden = !options.includeHidden && hasHiddenSegment(rel);
    if (it->is_directory(ec)) {
      if (hidden || anyMatch(options.excludeGlobs, rel + "/")) it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file(ec) || hidden) continue;
    if (!anyMatch(options.includeGlobs, rel) || anyMatch(options.excludeGlobs, rel)) continue;
    matched.push_back(rel);
  }
  std::sort(matched.begin(), matched.end());

  ImportReport report;
  report.sourceKind = SourceKind::directory;
  if (matched.empty()) {
    report.warnings.push_back("NothingMatched");
    reportProgress(progress, 1.0);
    return report;
  }

  for (std::size_t i = 0; i < matched.size(); ++i) {
    reportProgress(progress, static_cast<double>(i) / static_cast<double>(matched.size()));
    const auto& rel = matched[i];
    const auto full = rootPath / fs::path(rel);
    const auto size = fs::file_size(full, ec);
    if (ec) {
      report.skippedFiles.push_back({rel, "unreadable"});
      continue;
    }
    if (size > options.maxFileBytes) {
      report.skippedFiles.push_back({rel, "too large"});
      continue;
    }
    std::string content;
    try {
      content = readTextFile(full);
    } catch (const Error&) {
      report.skippedFiles.push_back({rel, "unreadable"});
      continue;
    }
    const auto sniff = std::string_view(content).substr(0, kBinarySniffBytes);
    if (sniff.find('\0') != std::string_view::npos) {
      report.skippedFiles.push_back({rel, "binary"});
      continue;
    }
    content = sanitizeUtf8(content);

    if (const auto* existing = project.findArtifact(rel)) {
      if (existing->body == content) continue;
      Artifact updated = *existing;
      updated.body = std::move(content);
      updated.summary.reset();
      project.upsertArtifact(std::move(updated), UpsertMode::update);
      ++report.artifactsUpdated;
      continue;
    }
    Artifact a;
    a.id = rel;
    a.name = rel;
    a.type = kCodeType;
    a.body = std::move(content);
    a.provenance = Provenance::imported;
    project.upsertArtifact(std::move(a), UpsertMode::create);
    ++report.artifactsCreated;
  }
  reportProgress(progress, 1.0);
  return report;
}

ImportReport importTable(Project& project, const fs::path& tablePath) {
  return importTableText(project, readTextFile(tablePath));
}

ImportReport importTableText(Project& project, const std::string& text) {
  const auto firstChar = text.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  std::vector<std::pair<std::size_t, Artifact>> rows;

  if (firstChar != std::string::npos && text[firstChar] == '[') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("invalid JSON artifact table: ") + e.what());
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
      try {
        rows.emplace_back(i + 1, doc[i].get<Artifact>());
      } catch (const std::exception& e) {
        throw Error(ErrorCode::MalformedRow,
                    "artifact #" + std::to_string(i + 1) + ": " + e.what(), std::to_string(i + 1));
      }
    }
    return upsertRows(project, std::move(rows), SourceKind::table);
  }

  const auto records = parseCsv(text);
  if (records.empty()) throw Error(ErrorCode::MissingHeader, "artifact table is empty");
  const auto& header = records.front().fields;
  auto column = [&](const char* name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::MissingHeader, std::string("artifact table lacks column '") + name + "'",
                  name);
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto idCol = column("id");
  const auto typeCol = column("type");
  const auto nameCol = column("name");
  const auto bodyCol = column("body");

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow,
                  "line " + std::to_string(rec.line) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(rec.fields.size()),
                  std::to_string(rec.line));
    }
    Artifact a;
    a.id = rec.fields[idCol];
    a.type = rec.fields[typeCol];
    a.name = rec.fields[nameCol];
    a.body = rec.fields[bodyCol];
    a.provenance = Provenance::imported;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != idCol && c != typeCol && c != nameCol && c != bodyCol) {
        a.attributes[header[c]] = rec.fields[c];
      }
    }
    if (a.id.empty() || a.type.empty() || a.name.empty()) {
      throw Error(ErrorCode::MalformedRow,
                  "line " + std::to_string(rec.line) + ": id, type and name are required",
                  std::to_string(rec.line));
    }
    // Preserve fields the table does not carry (summary, flags) on update.
    if (const auto* existing = project.findArtifact(a.id)) {
      a.summary = existing->summary;
      a.flagged = existing->flagged;
      a.provenance = existing->provenance;
    }
    rows.emplace_back(rec.line, std::move(a));
  }
  return upsertRows(project, std::move(rows), SourceKind::table);
}

ImportReport importTraceMatrix(Project& project, const fs::path& matrixPath) {
  return importTraceMatrixText(project, readTextFile(matrixPath));
}

ImportReport importTraceMatrixText(Project& project, std::string_view text) {
  const auto records = parseCsv(text);
  if (records.empty() || records.front().fields.size() < 2 ||
      records.front().fields[0] != "child_id" || records.front().fields[1] != "parent_id") {
    throw Error(ErrorCode::MissingHeader, "trace matrix header must be child_id,parent_id");
  }
  ImportReport report;
  report.sourceKind = SourceKind::matrix;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto line = std::to_string(rec.line);
    if (rec.fields.size() < 2) {
      throw Error(ErrorCode::MalformedRow, "line " + line + ": expected child_id,parent_id", line);
    }
    const auto& child = rec.fields[0];
    const auto& parent = rec.fields[1];
    for (const auto* id : {&child, &parent}) {
      if (!project.findArtifact(*id)) {
        throw Error(ErrorCode::UnknownId, "line " + line + ": unknown artifact '" + *id + "'", line);
      }
    }
    if (project.findLink(child, parent)) {
      report.skippedFiles.push_back({"line " + line, "duplicate link"});
      continue;
    }
    try {
      project.addLink(child, parent, LinkStatus::manual);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + line + ": " + e.what(), line);
    }
    ++report.linksCreated;
  }
  return report;
}

void saveProject(const Project& project, const fs::path& path) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::PathNotFound, "cannot write '" + path.string() + "'", path.string());
    out << serializeProject(project);
    if (!out) throw Error(ErrorCode::Internal, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Internal, "cannot replace '" + path.string() + "': " + ec.message());
}

Project loadProject(const fs::path& path) { return parseProject(readTextFile(path)); }

}  // namespace root
