#ifndef L2T_LLM_HPP_
#define L2T_LLM_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "l2t/rng.hpp"

namespace l2t::llm {

enum class RequestKind { Format, EvalInfo, Evaluate, Classify, Generate };
inline constexpr int kRequestKinds = 5;

const char* kind_name(RequestKind kind);

struct LlmRequest {
  std::string prompt;
  double temperature = 0.0;  // [0.05, 2.0]
  double top_p = 1.0;        // (0, 1]
  int max_tokens = 1024;
  RequestKind kind = RequestKind::Generate;
};

struct LlmResponse {
  std::string text;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
};

struct KindUsage {
  long long requests = 0;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;

  KindUsage& operator+=(const KindUsage& o) {
    requests += o.requests;
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
};

struct UsageSnapshot {
  std::array<KindUsage, kRequestKinds> by_kind{};

  KindUsage total() const {
    KindUsage t;
    for (const auto& k : by_kind) t += k;
    return t;
  }
  long long access_count() const { return total().requests; }
  UsageSnapshot& operator+=(const UsageSnapshot& o) {
    for (int i = 0; i < kRequestKinds; ++i) by_kind[i] += o.by_kind[i];
    return *this;
  }
  std::string to_json() const;
};

// Cumulative token/request accounting, split by request kind. Thread-safe.
class UsageLedger {
 public:
  void record(RequestKind kind, const LlmResponse& response);
  UsageSnapshot snapshot() const;

 private:
  mutable std::mutex mutex_;
  UsageSnapshot usage_;
};

// Whitespace tokenization; the offline accounting only needs to be relative.
long long count_tokens(const std::string& text);

// A single chat-style completion backend. Implementations must be safe for
// concurrent complete() calls.
class Backend {
 public:
  virtual ~Backend() = default;

  // Validates bounds, dispatches, and records usage.
  LlmResponse complete(const LlmRequest& request);

  UsageSnapshot usage_report() const { return ledger_.snapshot(); }

 protected:
  virtual LlmResponse do_complete(const LlmRequest& request) = 0;

 private:
  UsageLedger ledger_;
};

// ---------------------------------------------------------------------------
// Node feature extraction. Hosted chat APIs do not expose hidden states, so
// features come from a provider: a deterministic seeded hash for offline
// runs or an embeddings endpoint projected down to d.
// ---------------------------------------------------------------------------
class FeatureProvider {
 public:
  explicit FeatureProvider(int dimension) : dimension_(dimension) {}
  virtual ~FeatureProvider() = default;

  int dimension() const { return dimension_; }

  // Always returns `dimension()` finite entries; text must be nonempty.
  virtual std::vector<double> featurize(const std::string& text) = 0;

 private:
  int dimension_;
};

// Deterministic: same text, same vector, entries in [-1, 1].
class HashFeatureProvider : public FeatureProvider {
 public:
  HashFeatureProvider(int dimension, std::uint64_t seed)
      : FeatureProvider(dimension), seed_(seed) {}

  std::vector<double> featurize(const std::string& text) override;

 private:
  std::uint64_t seed_;
};

}  // namespace l2t::llm

#endif  // L2T_LLM_HPP_
