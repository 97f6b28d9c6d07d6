#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "root/model.hpp"
#include "root/provider.hpp"

namespace fixtures {

inline constexpr const char* kRequirement = "Requirement";

/// Four requirements and the two concepts "Job" and "Database Entity".
/// R1 and R4 are the bodies used in the health-check walkthrough.
root::Project walkthroughProject();
/// Scripted verdict table marking (R1, R4) as contradictory.
root::ContradictionTable walkthroughContradictions();
std::string walkthroughContradictionsCsv();

/// Braking feature subtree (feature, requirements, code) next to unrelated
/// perception, localisation and logging artifacts.
root::Project brakingProject();
std::vector<std::string> brakingSubtree();

/// Writes `fileCount` source files in six subsystems under `root`.
void writeSyntheticCodebase(const std::filesystem::path& root, std::size_t fileCount);

/// Random but valid project: artifacts with optional fields, a DAG of links
/// in every status, concepts, findings, maybe a summary.
root::Project randomProject(std::mt19937_64& rng, std::size_t maxArtifacts = 25);

/// Fresh empty directory under the system temp dir.
std::filesystem::path tempDir(const std::string& tag);

/// Independent cycle oracle: depth-first search over the active links.
bool hasCycle(const root::Project& project);
/// Independent reachability oracle over active links (child -> parent).
bool reaches(const root::Project& project, const std::string& from, const std::string& to);

}  // namespace fixtures
