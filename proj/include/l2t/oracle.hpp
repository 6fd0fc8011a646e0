#ifndef L2T_ORACLE_HPP_
#define L2T_ORACLE_HPP_

#include <cstdint>

#include "l2t/llm.hpp"
#include "l2t/tasks.hpp"

namespace l2t::llm {

struct OracleConfig {
  std::uint64_t seed = 0;
  // Probability of misreporting a dead thought as a backtrack (label 4).
  // Nonzero rates exercise the parent-restoration path; live and final
  // answers never flip.
  double classify_error_rate = 0.0;
};

// Deterministic scripted backend: exact task solvers answer every prompt
// family. Bit-deterministic given (prompt, kind, seed) -- per-request
// randomness is derived from a content hash, never from shared state, so
// concurrent calls cannot change replies.
class OracleBackend : public Backend {
 public:
  explicit OracleBackend(OracleConfig config = {}) : config_(config) {}

 protected:
  LlmResponse do_complete(const LlmRequest& request) override;

 private:
  std::string answer_format(const tasks::TaskSpec& task) const;
  std::string answer_eval_info(const tasks::TaskSpec& task) const;
  std::string answer_classify(const tasks::TaskSpec& task,
                              const LlmRequest& request) const;
  std::string answer_evaluate(const tasks::TaskSpec& task,
                              const LlmRequest& request) const;
  std::string answer_generate(const tasks::TaskSpec& task,
                              const LlmRequest& request) const;

  OracleConfig config_;
};

}  // namespace l2t::llm

#endif  // L2T_ORACLE_HPP_
