#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "root/similarity.hpp"

namespace root {

struct ContextDoc {
  std::string id;
  std::string name;
  std::string text;
};

/// One completion request. `task` names the call site ("explain-link",
/// "generate-layer", ...); `facts` carries the engine's deterministic
/// pre-analysis for that task (shared terms, member names, ...). Remote
/// providers receive `instruction` and `context`; the mock renders `facts`.
struct PromptRequest {
  std::string task;
  std::string instruction;
  std::vector<ContextDoc> context;
  nlohmann::json facts = nlohmann::json::object();
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  /// Throws Error(ProviderUnavailable) when the backend cannot answer.
  virtual std::string complete(const PromptRequest& request) = 0;
  virtual std::string name() const = 0;
};

namespace task {
inline constexpr std::string_view kExplainLink = "explain-link";
inline constexpr std::string_view kGenerateLayer = "generate-layer";
inline constexpr std::string_view kSummarizeFile = "summarize-file";
inline constexpr std::string_view kProjectSummary = "project-summary";
inline constexpr std::string_view kChat = "chat";
inline constexpr std::string_view kContradiction = "contradiction";
}  // namespace task

struct ContradictionVerdict {
  bool contradicts = false;
  std::string explanation;
};

/// Scripted verdicts keyed by unordered artifact pair, loaded from CSV
/// `artifact_a,artifact_b,verdict,explanation` (verdict: yes/no).
class ContradictionTable {
 public:
  static ContradictionTable fromCsv(std::string_view csvText);
  static ContradictionTable fromFile(const std::string& path);

  void set(std::string a, std::string b, ContradictionVerdict verdict);
  std::optional<ContradictionVerdict> lookup(std::string_view a, std::string_view b) const;
  bool empty() const noexcept { return verdicts_.empty(); }

 private:
  std::map<std::pair<std::string, std::string>, ContradictionVerdict> verdicts_;
};

/// Deterministic offline provider. Output templates per task are part of
/// the documented contract (docs/providers.md).
class MockGenerationProvider final : public GenerationProvider {
 public:
  MockGenerationProvider() = default;
  explicit MockGenerationProvider(ContradictionTable contradictions)
      : contradictions_(std::move(contradictions)) {}

  std::string complete(const PromptRequest& request) override;
  std::string name() const override { return "mock"; }

 private:
  ContradictionTable contradictions_;
};

struct RemoteEndpoint {
  std::string url;  // http://host[:port][/base]
  std::string apiKey;
  std::chrono::milliseconds timeout{30000};
  int retries = 1;
};

/// POST {base}/complete  {instruction, context:[{id,name,text}]} -> {text}
class HttpGenerationProvider final : public GenerationProvider {
 public:
  explicit HttpGenerationProvider(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string complete(const PromptRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  RemoteEndpoint endpoint_;
};

/// POST {base}/embed  {texts:[...]} -> {vectors:[[...]]}; vectors are
/// renormalised locally.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(RemoteEndpoint endpoint, std::size_t dimension)
      : endpoint_(std::move(endpoint)), dimension_(dimension) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const override { return dimension_; }

 private:
  RemoteEndpoint endpoint_;
  std::size_t dimension_;
};

/// Reads ROOT_PROVIDER_URL / ROOT_PROVIDER_KEY; nullopt when no URL is set.
std::optional<RemoteEndpoint> endpointFromEnvironment();

/// Remote provider when an endpoint is configured, mock otherwise.
std::shared_ptr<GenerationProvider> makeGenerationProvider(
    const std::optional<RemoteEndpoint>& endpoint, ContradictionTable contradictions = {});

/// Parses "yes: ..." / "no: ..." answers to a contradiction prompt.
ContradictionVerdict parseVerdict(std::string_view answer);

}  // namespace root
