#include "l2t/oracle.hpp"

#include <string>

#include "l2t/errors.hpp"
#include "l2t/prompts.hpp"

namespace l2t::llm {

namespace {

using tasks::StateClass;
using tasks::TaskFamily;
using tasks::TaskSpec;

// Current reasoning state. Prompts that carry a serialized subgraph name the
// focus thought as the last brace group; its output state governs the reply.
// Other prompt sections (for example the format examples) also contain
// Output lines, so the whole-prompt scan is only a fallback.
std::string current_state(const TaskSpec& task, const std::string& prompt) {
  constexpr std::string_view kTauMarker = "The former generated thoughts are: ";
  size_t pos = prompt.rfind(kTauMarker);
  if (pos != std::string::npos) {
    auto groups = prompts::tau_parse(prompt.substr(pos));
    if (!groups.empty()) {
      if (auto state = tasks::last_output_state(groups.back())) return *state;
      return tasks::initial_state_text(task);  // the focus is the root
    }
  }
  if (auto state = tasks::last_output_state(prompt)) return *state;
  return tasks::initial_state_text(task);
}

std::optional<int> requested_branches(const std::string& prompt) {
  constexpr std::string_view kMarker = "Generate ";
  size_t pos = prompt.rfind(kMarker);
  if (pos == std::string::npos) return std::nullopt;
  size_t i = pos + kMarker.size();
  size_t end = i;
  while (end < prompt.size() &&
         std::isdigit(static_cast<unsigned char>(prompt[end])))
    ++end;
  if (end == i) return std::nullopt;
  return std::stoi(prompt.substr(i, end - i));
}

}  // namespace

LlmResponse OracleBackend::do_complete(const LlmRequest& request) {
  auto task = tasks::parse_task(request.prompt);
  if (!task)
    throw Error(ErrorCode::InvalidTask,
                "oracle could not recover a task from the prompt");
  std::string text;
  switch (request.kind) {
    case RequestKind::Format: text = answer_format(*task); break;
    case RequestKind::EvalInfo: text = answer_eval_info(*task); break;
    case RequestKind::Classify: text = answer_classify(*task, request); break;
    case RequestKind::Evaluate: text = answer_evaluate(*task, request); break;
    case RequestKind::Generate: text = answer_generate(*task, request); break;
  }
  LlmResponse response;
  response.text = std::move(text);
  response.prompt_tokens = count_tokens(request.prompt);
  response.completion_tokens = count_tokens(response.text);
  return response;
}

std::string OracleBackend::answer_format(const TaskSpec& task) const {
  switch (task.family) {
    case TaskFamily::GameOf24:
      return "Each step combines two available numbers with one operation.\n"
             "Step format: Input:[a,b,c,d] Plan:x op y = z Output:[remaining "
             "numbers with z]\n"
             "The final step must produce Output:[24].\n"
             "Example 1:\n"
             "Input:[4,9,10,13] Plan:13 - 9 = 4 Output:[4,10,4]\n"
             "Input:[4,10,4] Plan:10 - 4 = 6 Output:[4,6]\n"
             "Input:[4,6] Plan:4 * 6 = 24 Output:[24]\n"
             "Example 2:\n"
             "Input:[1,2,3,4] Plan:4 * 3 = 12 Output:[1,2,12]\n"
             "Input:[1,2,12] Plan:12 * 2 = 24 Output:[1,24]\n"
             "Input:[1,24] Plan:24 * 1 = 24 Output:[24]\n"
             "Example 3:\n"
             "Input:[6,6,6,6] Plan:6 + 6 = 12 Output:[6,6,12]\n"
             "Input:[6,6,12] Plan:6 + 6 = 12 Output:[12,12]\n"
             "Input:[12,12] Plan:12 + 12 = 24 Output:[24]";
    case TaskFamily::LatinSudoku:
      return "Each step fills the first incomplete row of the grid.\n"
             "Step format: Input:[[row],[row],...] Plan:fill row r as "
             "[values] Output:[[row],[row],...]\n"
             "Zeros mark empty cells; the final step leaves no zeros.\n"
             "Example 1: Input:[[0,0],[0,0]] Plan:fill row 1 as [1,2] "
             "Output:[[1,2],[0,0]]\n"
             "Example 2: Input:[[1,2],[0,0]] Plan:fill row 2 as [2,1] "
             "Output:[[1,2],[2,1]]\n"
             "Example 3: Input:[[2,1],[0,0]] Plan:fill row 2 as [1,2] "
             "Output:[[2,1],[1,2]]";
    case TaskFamily::KnightsKnaves:
      return "Each step assumes an identity for the first undetermined "
             "character.\n"
             "Step format: Input:[A=?,B=?] Plan:assume A is a Knight "
             "Output:[A=Knight,B=?]\n"
             "The final step assigns the last character consistently.\n"
             "Example 1: Input:[A=?,B=?] Plan:assume A is a Knight "
             "Output:[A=Knight,B=?]\n"
             "Example 2: Input:[A=Knight,B=?] Plan:assume B is a Knave "
             "Output:[A=Knight,B=Knave]\n"
             "Example 3: Input:[A=?,B=?] Plan:assume A is a Knave "
             "Output:[A=Knave,B=?]";
    case TaskFamily::CreativeWriting:
      return "Each step merges two elements of the working list into one.\n"
             "Step format: Input:[elements] Plan:choose element i and element "
             "j Output:[merged element, remaining elements]\n"
             "The final step leaves a single combined text.\n"
             "Example 1: Input:[\"Comet\",\"Garden\"] Plan:choose element 0 "
             "and element 1 Output:[\"The comet crossed above the garden.\"]\n"
             "Example 2: Input:[\"River\",\"Marble\",\"Anchor\"] Plan:choose "
             "element 1 and element 2 Output:[\"The marble rested against "
             "the anchor.\",\"River\"]\n"
             "Example 3: Input:[\"A calm line.\",\"Prism\"] Plan:choose "
             "element 0 and element 1 Output:[\"A calm line. The prism split "
             "the light.\"]";
  }
  return "";
}

std::string OracleBackend::answer_eval_info(const TaskSpec& task) const {
  switch (task.family) {
    case TaskFamily::GameOf24:
      return "A step contributes when the remaining numbers can still be "
             "combined into exactly 24 with + - * /. Steps that leave an "
             "unreachable set of numbers contribute nothing. Fewer remaining "
             "numbers with 24 still reachable indicate more progress.";
    case TaskFamily::LatinSudoku:
      return "A step contributes when the partially filled grid can still be "
             "completed without repeating a number in any row or column and "
             "without changing a given cell. More correctly filled cells "
             "indicate more progress.";
    case TaskFamily::KnightsKnaves:
      return "A step contributes when the partial identity assignment can "
             "still be extended so every statement matches its speaker's "
             "kind. More characters determined without contradiction "
             "indicate more progress.";
    case TaskFamily::CreativeWriting:
      return "A step contributes when it merges the working elements toward "
             "a single text that uses every required item. Fewer remaining "
             "elements indicate more progress.";
  }
  return "";
}

std::string OracleBackend::answer_classify(const TaskSpec& task,
                                           const LlmRequest& request) const {
  StateClass cls = tasks::classify_state(task, current_state(task, request.prompt));
  int label = static_cast<int>(cls);
  // fault injection: a dead thought misreported as a backtrack pushes the
  // engine down the parent-restoration path
  if (config_.classify_error_rate > 0.0 && cls == StateClass::Dead) {
    std::uint64_t h = hash_combine(config_.seed, hash_text(request.prompt));
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < config_.classify_error_rate) label = 4;
  }
  return std::to_string(label);
}

std::string OracleBackend::answer_evaluate(const TaskSpec& task,
                                           const LlmRequest& request) const {
  int score = tasks::score_state(task, current_state(task, request.prompt));
  return std::to_string(score);
}

std::string OracleBackend::answer_generate(const TaskSpec& task,
                                           const LlmRequest& request) const {
  int branches = requested_branches(request.prompt).value_or(1);
  auto thoughts = tasks::successor_thoughts(
      task, current_state(task, request.prompt), branches);
  if (thoughts.empty()) {
    // only reachable when asked to expand a terminal state
    return "No further step is possible from this state.";
  }
  std::string out;
  for (size_t i = 0; i < thoughts.size(); ++i) {
    if (i) out += "\n\n";
    out += thoughts[i];
  }
  return out;
}

}  // namespace l2t::llm
