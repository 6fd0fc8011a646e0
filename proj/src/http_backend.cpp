#include "l2t/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "l2t/errors.hpp"
#include "l2t/rng.hpp"

namespace l2t::llm {

using nlohmann::json;

namespace {

std::string require_api_key(const std::string& env_name) {
  const char* key = std::getenv(env_name.c_str());
  if (!key || *key == '\0')
    throw Error(ErrorCode::InvalidArgument,
                "environment variable " + env_name + " is not set");
  return key;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

struct HttpReply {
  int status = 0;
  std::string body;
};

// One attempt; nullopt on transport failure.
std::optional<HttpReply> post_once(const HttpConfig& config,
                                   const std::string& api_key,
                                   const std::string& path,
                                   const std::string& body) {
  httplib::Client client(config.base_url);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key}};
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) return std::nullopt;
  return HttpReply{res->status, res->body};
}

std::string post_with_retries(const HttpConfig& config,
                              const std::string& api_key,
                              const std::string& path,
                              const std::string& body) {
  int backoff = config.initial_backoff_ms;
  int last_status = 0;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff = std::min(backoff * 2, config.max_backoff_ms);
    }
    auto reply = post_once(config, api_key, path, body);
    if (!reply) {
      last_status = 0;
      continue;  // transport failure, retryable
    }
    if (reply->status == 200) return reply->body;
    if (!retryable_status(reply->status)) {
      throw Error(ErrorCode::Transport,
                  "http status " + std::to_string(reply->status) +
                      " (not retried)");
    }
    last_status = reply->status;
  }
  if (last_status == 429)
    throw Error(ErrorCode::RateLimited, "rate limited after retries");
  throw Error(ErrorCode::Transport,
              last_status == 0
                  ? "connection failed after retries"
                  : "http status " + std::to_string(last_status) +
                        " after retries");
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config)
    : config_(std::move(config)),
      api_key_(require_api_key(config_.api_key_env)) {}

LlmResponse HttpBackend::do_complete(const LlmRequest& request) {
  json body = {
      {"model", config_.model},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"top_p", request.top_p},
      {"max_tokens", request.max_tokens},
  };
  std::string reply_body =
      post_with_retries(config_, api_key_, config_.chat_path, body.dump());
  json reply = json::parse(reply_body, nullptr, false);
  if (reply.is_discarded())
    throw Error(ErrorCode::MalformedProviderReply, "reply is not JSON");
  LlmResponse response;
  try {
    response.text =
        reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::MalformedProviderReply,
                "reply lacks choices[0].message.content");
  }
  if (response.text.empty())
    throw Error(ErrorCode::MalformedProviderReply, "empty completion");
  if (reply.contains("usage")) {
    response.prompt_tokens =
        reply["usage"].value("prompt_tokens", count_tokens(request.prompt));
    response.completion_tokens =
        reply["usage"].value("completion_tokens", count_tokens(response.text));
  } else {
    response.prompt_tokens = count_tokens(request.prompt);
    response.completion_tokens = count_tokens(response.text);
  }
  return response;
}

EmbeddingFeatureProvider::EmbeddingFeatureProvider(int dimension,
                                                   HttpConfig config,
                                                   std::uint64_t seed)
    : FeatureProvider(dimension),
      config_(std::move(config)),
      api_key_(require_api_key(config_.api_key_env)),
      seed_(seed) {}

const std::vector<std::vector<double>>& EmbeddingFeatureProvider::projection(
    int source_dim) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = projections_.find(source_dim);
  if (it != projections_.end()) return it->second;
  std::vector<std::vector<double>> p(dimension(),
                                     std::vector<double>(source_dim));
  double scale = 1.0 / std::sqrt(static_cast<double>(source_dim));
  for (int i = 0; i < dimension(); ++i) {
    for (int j = 0; j < source_dim; ++j) {
      std::uint64_t h = hash_combine(hash_combine(seed_, i), j);
      double u = static_cast<double>(h >> 11) * 0x1.0p-53;
      p[i][j] = (2.0 * u - 1.0) * scale;
    }
  }
  return projections_.emplace(source_dim, std::move(p)).first->second;
}

std::vector<double> EmbeddingFeatureProvider::featurize(
    const std::string& text) {
  if (text.empty())
    throw Error(ErrorCode::InvalidArgument, "cannot featurize empty text");
  json body = {{"model", config_.model}, {"input", text}};
  std::string reply_body = post_with_retries(config_, api_key_,
                                             config_.embeddings_path,
                                             body.dump());
  json reply = json::parse(reply_body, nullptr, false);
  if (reply.is_discarded())
    throw Error(ErrorCode::MalformedProviderReply, "reply is not JSON");
  std::vector<double> embedding;
  try {
    embedding =
        reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::MalformedProviderReply,
                "reply lacks data[0].embedding");
  }
  if (embedding.empty())
    throw Error(ErrorCode::MalformedProviderReply, "empty embedding");
  const auto& p = projection(static_cast<int>(embedding.size()));
  std::vector<double> out(dimension(), 0.0);
  for (int i = 0; i < dimension(); ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < embedding.size(); ++j) acc += p[i][j] * embedding[j];
    if (!std::isfinite(acc))
      throw Error(ErrorCode::NumericalError, "non-finite feature entry");
    out[i] = acc;
  }
  return out;
}

}  // namespace l2t::llm
