#ifndef L2T_HTTP_BACKEND_HPP_
#define L2T_HTTP_BACKEND_HPP_

#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "l2t/llm.hpp"

namespace l2t::llm {

struct HttpConfig {
  std::string base_url;  // scheme://host[:port]
  std::string model;
  std::string chat_path = "/v1/chat/completions";
  std::string embeddings_path = "/v1/embeddings";
  std::string api_key_env = "L2T_API_KEY";
  int max_retries = 3;           // retryable failures: transport, 429, 5xx
  int initial_backoff_ms = 200;  // doubled per attempt
  int max_backoff_ms = 5000;
  int timeout_seconds = 120;
};

// Chat-completion client over the common {model, messages, temperature,
// top_p, max_tokens} wire schema. The API key comes from the environment
// variable named in the config; construction fails without it.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);

 protected:
  LlmResponse do_complete(const LlmRequest& request) override;

 private:
  HttpConfig config_;
  std::string api_key_;
};

// Provider-native embeddings projected to the policy feature dimension by a
// fixed seeded random projection.
class EmbeddingFeatureProvider : public FeatureProvider {
 public:
  EmbeddingFeatureProvider(int dimension, HttpConfig config,
                           std::uint64_t seed);

  std::vector<double> featurize(const std::string& text) override;

 private:
  const std::vector<std::vector<double>>& projection(int source_dim);

  HttpConfig config_;
  std::string api_key_;
  std::uint64_t seed_;
  std::mutex mutex_;
  std::unordered_map<int, std::vector<std::vector<double>>> projections_;
};

}  // namespace l2t::llm

#endif  // L2T_HTTP_BACKEND_HPP_
