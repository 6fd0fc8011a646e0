#ifndef L2T_REPORT_HPP_
#define L2T_REPORT_HPP_

#include <string>
#include <vector>

#include "l2t/llm.hpp"

namespace l2t::report {

struct EpisodeRow {
  std::string instance;
  int repeat = 0;
  std::string outcome;
  bool verified = false;
  int generated_nodes = 0;
  int steps = 0;
  long long llm_accesses = 0;
};

struct EvalReport {
  int instances = 0;
  int repeats = 0;
  std::vector<EpisodeRow> rows;
  double accuracy_mean = 0.0;  // percent, over repeats
  double accuracy_std = 0.0;
  double nodes_mean = 0.0;
  double nodes_std = 0.0;
  double prompt_tokens_per_thought = 0.0;
  double generate_tokens_per_thought = 0.0;
  double tokens_per_case = 0.0;
  double accesses_per_case = 0.0;
  llm::UsageSnapshot usage;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  std::string render_table() const;
};

// Aggregates per-episode rows; accuracy statistics are over repeats, node
// statistics over all episodes, token ratios from the combined ledger.
EvalReport build_report(int instances, int repeats,
                        std::vector<EpisodeRow> rows,
                        const llm::UsageSnapshot& usage,
                        long long total_generated_nodes);

}  // namespace l2t::report

#endif  // L2T_REPORT_HPP_
