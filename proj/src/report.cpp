#include "l2t/report.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "l2t/errors.hpp"

namespace l2t::report {

using nlohmann::ordered_json;

namespace {

std::string fixed(double v, int digits = 4) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, v);
  return buffer;
}

ordered_json usage_to_json(const llm::UsageSnapshot& usage) {
  ordered_json j;
  for (int i = 0; i < llm::kRequestKinds; ++i) {
    const auto& k = usage.by_kind[i];
    j[llm::kind_name(static_cast<llm::RequestKind>(i))] = {
        {"requests", k.requests},
        {"prompt_tokens", k.prompt_tokens},
        {"completion_tokens", k.completion_tokens}};
  }
  return j;
}

llm::UsageSnapshot usage_from_json(const ordered_json& j) {
  llm::UsageSnapshot usage;
  for (int i = 0; i < llm::kRequestKinds; ++i) {
    const auto& jk = j.at(llm::kind_name(static_cast<llm::RequestKind>(i)));
    auto& k = usage.by_kind[i];
    k.requests = jk.at("requests").get<long long>();
    k.prompt_tokens = jk.at("prompt_tokens").get<long long>();
    k.completion_tokens = jk.at("completion_tokens").get<long long>();
  }
  return usage;
}

}  // namespace

EvalReport build_report(int instances, int repeats,
                        std::vector<EpisodeRow> rows,
                        const llm::UsageSnapshot& usage,
                        long long total_generated_nodes) {
  EvalReport report;
  report.instances = instances;
  report.repeats = repeats;
  report.rows = std::move(rows);
  report.usage = usage;

  std::vector<double> per_repeat_accuracy(std::max(1, repeats), 0.0);
  std::vector<int> per_repeat_count(std::max(1, repeats), 0);
  for (const auto& row : report.rows) {
    if (row.repeat >= 0 && row.repeat < repeats) {
      per_repeat_count[row.repeat] += 1;
      if (row.verified) per_repeat_accuracy[row.repeat] += 1.0;
    }
  }
  double acc_sum = 0.0;
  for (int r = 0; r < repeats; ++r) {
    per_repeat_accuracy[r] = per_repeat_count[r] > 0
                                 ? 100.0 * per_repeat_accuracy[r] /
                                       per_repeat_count[r]
                                 : 0.0;
    acc_sum += per_repeat_accuracy[r];
  }
  report.accuracy_mean = repeats > 0 ? acc_sum / repeats : 0.0;
  double acc_var = 0.0;
  for (int r = 0; r < repeats; ++r) {
    double d = per_repeat_accuracy[r] - report.accuracy_mean;
    acc_var += d * d;
  }
  report.accuracy_std = repeats > 0 ? std::sqrt(acc_var / repeats) : 0.0;

  if (!report.rows.empty()) {
    double sum = 0.0;
    for (const auto& row : report.rows) sum += row.generated_nodes;
    report.nodes_mean = sum / report.rows.size();
    double var = 0.0;
    for (const auto& row : report.rows) {
      double d = row.generated_nodes - report.nodes_mean;
      var += d * d;
    }
    report.nodes_std = std::sqrt(var / report.rows.size());
  }

  auto total = usage.total();
  long long generate_completion =
      usage.by_kind[static_cast<int>(llm::RequestKind::Generate)]
          .completion_tokens;
  if (total_generated_nodes > 0) {
    report.prompt_tokens_per_thought =
        static_cast<double>(total.prompt_tokens) / total_generated_nodes;
    report.generate_tokens_per_thought =
        static_cast<double>(generate_completion) / total_generated_nodes;
  }
  if (!report.rows.empty()) {
    report.tokens_per_case =
        static_cast<double>(total.prompt_tokens + total.completion_tokens) /
        report.rows.size();
    report.accesses_per_case =
        static_cast<double>(total.requests) / report.rows.size();
  }
  return report;
}

std::string EvalReport::to_json() const {
  ordered_json j;
  j["instances"] = instances;
  j["repeats"] = repeats;
  ordered_json rows_json = ordered_json::array();
  for (const auto& row : rows) {
    rows_json.push_back({{"instance", row.instance},
                         {"repeat", row.repeat},
                         {"outcome", row.outcome},
                         {"verified", row.verified},
                         {"generated_nodes", row.generated_nodes},
                         {"steps", row.steps},
                         {"llm_accesses", row.llm_accesses}});
  }
  j["rows"] = std::move(rows_json);
  j["accuracy_mean"] = accuracy_mean;
  j["accuracy_std"] = accuracy_std;
  j["nodes_mean"] = nodes_mean;
  j["nodes_std"] = nodes_std;
  j["prompt_tokens_per_thought"] = prompt_tokens_per_thought;
  j["generate_tokens_per_thought"] = generate_tokens_per_thought;
  j["tokens_per_case"] = tokens_per_case;
  j["accesses_per_case"] = accesses_per_case;
  j["usage"] = usage_to_json(usage);
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  EvalReport report;
  report.instances = j.at("instances").get<int>();
  report.repeats = j.at("repeats").get<int>();
  for (const auto& row_json : j.at("rows")) {
    EpisodeRow row;
    row.instance = row_json.at("instance").get<std::string>();
    row.repeat = row_json.at("repeat").get<int>();
    row.outcome = row_json.at("outcome").get<std::string>();
    row.verified = row_json.at("verified").get<bool>();
    row.generated_nodes = row_json.at("generated_nodes").get<int>();
    row.steps = row_json.at("steps").get<int>();
    row.llm_accesses = row_json.at("llm_accesses").get<long long>();
    report.rows.push_back(std::move(row));
  }
  report.accuracy_mean = j.at("accuracy_mean").get<double>();
  report.accuracy_std = j.at("accuracy_std").get<double>();
  report.nodes_mean = j.at("nodes_mean").get<double>();
  report.nodes_std = j.at("nodes_std").get<double>();
  report.prompt_tokens_per_thought =
      j.at("prompt_tokens_per_thought").get<double>();
  report.generate_tokens_per_thought =
      j.at("generate_tokens_per_thought").get<double>();
  report.tokens_per_case = j.at("tokens_per_case").get<double>();
  report.accesses_per_case = j.at("accesses_per_case").get<double>();
  report.usage = usage_from_json(j.at("usage"));
  return report;
}

std::string EvalReport::render_table() const {
  std::string out;
  out += "instance                         repeat outcome     ok nodes steps accesses\n";
  out += "--------------------------------------------------------------------------\n";
  for (const auto& row : rows) {
    char line[192];
    std::snprintf(line, sizeof(line), "%-32s %6d %-10s %2s %5d %5d %8lld\n",
                  row.instance.c_str(), row.repeat, row.outcome.c_str(),
                  row.verified ? "y" : "n", row.generated_nodes, row.steps,
                  row.llm_accesses);
    out += line;
  }
  out += "--------------------------------------------------------------------------\n";
  out += "accuracy: " + fixed(accuracy_mean, 2) + " +/- " +
         fixed(accuracy_std, 2) + " %\n";
  out += "generated nodes: " + fixed(nodes_mean, 2) + " +/- " +
         fixed(nodes_std, 2) + "\n";
  out += "prompt tokens per thought: " + fixed(prompt_tokens_per_thought, 2) +
         "\n";
  out += "generate tokens per thought: " +
         fixed(generate_tokens_per_thought, 2) + "\n";
  out += "tokens per case: " + fixed(tokens_per_case, 2) + "\n";
  out += "llm accesses per case: " + fixed(accesses_per_case, 2) + "\n";
  return out;
}

}  // namespace l2t::report
