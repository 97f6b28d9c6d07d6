#include <cmath>

#include <httplib.h>

#include "root/error.hpp"
#include "root/provider.hpp"

namespace root {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string basePath;
};

ParsedUrl parseUrl(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::ProviderUnavailable, "provider url must include a scheme: " + url);
  }
  const auto pathStart = url.find('/', scheme + 3);
  ParsedUrl out;
  out.origin = url.substr(0, pathStart);
  if (pathStart != std::string::npos) out.basePath = url.substr(pathStart);
  while (!out.basePath.empty() && out.basePath.back() == '/') out.basePath.pop_back();
  return out;
}

nlohmann::json postJson(const RemoteEndpoint& endpoint, const std::string& route,
                        const nlohmann::json& body) {
  const auto url = parseUrl(endpoint.url);
  httplib::Client client(url.origin);
  const auto seconds = endpoint.timeout.count() / 1000;
  const auto micros = (endpoint.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (!endpoint.apiKey.empty()) headers.emplace("Authorization", "Bearer " + endpoint.apiKey);

  std::string lastError = "no attempt made";
  for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
    auto res = client.Post(url.basePath + route, headers, body.dump(), "application/json");
    if (!res) {
      lastError = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      lastError = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      lastError = std::string("invalid JSON response: ") + e.what();
    }
  }
  throw Error(ErrorCode::ProviderUnavailable,
              "provider " + endpoint.url + route + " unavailable: " + lastError);
}

}  // namespace

std::string HttpGenerationProvider::complete(const PromptRequest& request) {
  nlohmann::json body;
  body["instruction"] = request.instruction;
  body["context"] = nlohmann::json::array();
  for (const auto& doc : request.context) {
    body["context"].push_back({{"id", doc.id}, {"name", doc.name}, {"text", doc.text}});
  }
  const auto response = postJson(endpoint_, "/complete", body);
  if (!response.contains("text") || !response["text"].is_string()) {
    throw Error(ErrorCode::ProviderUnavailable, "provider response lacks a 'text' field");
  }
  return response["text"].get<std::string>();
}

std::vector<Embedding> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  nlohmann::json body;
  body["texts"] = nlohmann::json::array();
  for (const auto& t : texts) body["texts"].push_back(t);
  const auto response = postJson(endpoint_, "/embed", body);
  const auto& vectors = response.value("vectors", nlohmann::json::array());
  if (!vectors.is_array() || vectors.size() != texts.size()) {
    throw Error(ErrorCode::ProviderUnavailable, "provider returned the wrong number of vectors");
  }
  std::vector<Embedding> out;
  for (const auto& v : vectors) {
    Embedding e;
    e.values = v.get<std::vector<double>>();
    if (e.values.size() != dimension_) {
      throw Error(ErrorCode::ProviderUnavailable, "provider vector dimension mismatch");
    }
    double norm = 0.0;
    for (double x : e.values) norm += x * x;
    if (norm <= 0.0) {
      e.zero = true;
    } else {
      norm = std::sqrt(norm);
      for (double& x : e.values) x /= norm;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace root
