#include "l2t/llm.hpp"

#include <cctype>

#include <json.hpp>

#include "l2t/errors.hpp"

namespace l2t::llm {

const char* kind_name(RequestKind kind) {
  switch (kind) {
    case RequestKind::Format: return "format";
    case RequestKind::EvalInfo: return "eval_info";
    case RequestKind::Evaluate: return "evaluate";
    case RequestKind::Classify: return "classify";
    case RequestKind::Generate: return "generate";
  }
  return "unknown";
}

std::string UsageSnapshot::to_json() const {
  nlohmann::ordered_json j;
  for (int i = 0; i < kRequestKinds; ++i) {
    const auto& k = by_kind[i];
    j[kind_name(static_cast<RequestKind>(i))] = {
        {"requests", k.requests},
        {"prompt_tokens", k.prompt_tokens},
        {"completion_tokens", k.completion_tokens}};
  }
  KindUsage t = total();
  j["total"] = {{"requests", t.requests},
                {"prompt_tokens", t.prompt_tokens},
                {"completion_tokens", t.completion_tokens}};
  return j.dump();
}

void UsageLedger::record(RequestKind kind, const LlmResponse& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto& k = usage_.by_kind[static_cast<int>(kind)];
  k.requests += 1;
  k.prompt_tokens += response.prompt_tokens;
  k.completion_tokens += response.completion_tokens;
}

UsageSnapshot UsageLedger::snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return usage_;
}

long long count_tokens(const std::string& text) {
  long long count = 0;
  bool in_token = false;
  for (char c : text) {
    bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_token) ++count;
    in_token = !ws;
  }
  return count;
}

LlmResponse Backend::complete(const LlmRequest& request) {
  if (request.temperature < 0.05 || request.temperature > 2.0)
    throw Error(ErrorCode::InvalidArgument,
                "temperature out of [0.05, 2.0]: " +
                    std::to_string(request.temperature));
  if (request.top_p <= 0.0 || request.top_p > 1.0)
    throw Error(ErrorCode::InvalidArgument,
                "top_p out of (0, 1]: " + std::to_string(request.top_p));
  if (request.max_tokens < 1)
    throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
  if (request.prompt.empty())
    throw Error(ErrorCode::InvalidArgument, "empty prompt");
  LlmResponse response = do_complete(request);
  ledger_.record(request.kind, response);
  return response;
}

std::vector<double> HashFeatureProvider::featurize(const std::string& text) {
  if (text.empty())
    throw Error(ErrorCode::InvalidArgument, "cannot featurize empty text");
  std::vector<double> out(dimension());
  std::uint64_t base = hash_combine(seed_, hash_text(text));
  for (int i = 0; i < dimension(); ++i) {
    std::uint64_t h = hash_combine(base, static_cast<std::uint64_t>(i));
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
    out[i] = 2.0 * u - 1.0;
  }
  return out;
}

}  // namespace l2t::llm
