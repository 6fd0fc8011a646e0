#ifndef L2T_TASKS_HPP_
#define L2T_TASKS_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "l2t/rng.hpp"

namespace l2t::tasks {

// ---------------------------------------------------------------------------
// Exact rational arithmetic. Puzzle verification carries no tolerance: every
// arithmetic line must hold exactly, so values are kept as reduced fractions.
// ---------------------------------------------------------------------------
struct Rational {
  long long num = 0;
  long long den = 1;  // always > 0, gcd(num, den) == 1

  Rational() = default;
  Rational(long long n) : num(n), den(1) {}  // NOLINT: implicit by design
  Rational(long long n, long long d);

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;  // o must be nonzero
  bool operator==(const Rational& o) const {
    return num == o.num && den == o.den;
  }
  auto operator<=>(const Rational& o) const {
    return static_cast<__int128>(num) * o.den <=>
           static_cast<__int128>(o.num) * den;
  }
  bool is_integer() const { return den == 1; }
};

// "12", "2.25" for terminating decimals, "8/3" otherwise. Matches the line
// shapes the scripted solver emits, so rendering and parsing round-trip.
std::string to_string(const Rational& r);
std::optional<Rational> parse_rational(std::string_view text);

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------
struct Verdict {
  bool ok = false;
  std::string reason;
  int line = -1;  // offending line index for trace rejections

  static Verdict accept() { return {true, "", -1}; }
  static Verdict reject(std::string why, int line_idx = -1) {
    return {false, std::move(why), line_idx};
  }
};

// ---------------------------------------------------------------------------
// Task definitions
// ---------------------------------------------------------------------------
enum class TaskFamily { GameOf24, LatinSudoku, KnightsKnaves, CreativeWriting };

const char* family_name(TaskFamily family);

struct Game24Instance {
  std::vector<long long> numbers;  // exactly 4, positive
};

struct LatinInstance {
  int n = 0;
  std::vector<std::vector<int>> givens;  // n x n, 0 = empty
};

// Knights-and-knaves claims use a closed expression grammar with a canonical
// text rendering; instances ship as structured data.
struct Claim {
  enum class Kind { IsKnight, IsKnave, And, Or, Not, Implies };
  Kind kind = Kind::IsKnight;
  int who = -1;              // IsKnight / IsKnave
  std::vector<Claim> args;   // connectives
};

struct Statement {
  int speaker = -1;
  Claim claim;
};

struct KnightsKnavesInstance {
  int n_characters = 0;
  std::vector<Statement> statements;
};

struct CreativeInstance {
  std::vector<std::string> items;
  bool sentence_variant = false;  // false: words, true: leading sentences
};

struct TaskSpec {
  TaskFamily family = TaskFamily::GameOf24;
  std::string description;  // canonical text, rendered from the instance
  std::variant<Game24Instance, LatinInstance, KnightsKnavesInstance,
               CreativeInstance>
      instance;
};

TaskSpec make_game24(std::vector<long long> numbers);
TaskSpec make_latin(int n, std::vector<std::vector<int>> givens);
TaskSpec make_knights_knaves(int n_characters, std::vector<Statement> statements);
TaskSpec make_creative(std::vector<std::string> items, bool sentence_variant);

// Canonical description text and its inverse. The scripted oracle recovers
// the instance from prompt text alone, so rendering must round-trip.
std::string render_description(const TaskSpec& task);
std::optional<TaskSpec> parse_task(std::string_view text);

// Instance JSON files ({numbers} / {n, givens} / {n_characters, statements} /
// {words|sentences}).
std::string task_to_json(const TaskSpec& task);
TaskSpec task_from_json(const std::string& json_text);
TaskSpec load_task_file(const std::string& path);

// ---------------------------------------------------------------------------
// Game of 24
// ---------------------------------------------------------------------------
struct PlanStep {
  Rational a;
  char op = '+';
  Rational b;
  Rational result;
  std::string text() const;  // "10 + 2 = 12"
};

std::optional<PlanStep> parse_plan_line(std::string_view line);

// Exact-arithmetic trace check: each line consumes two available values and
// produces one; the final value must be exactly 24.
Verdict verify_24(const std::vector<long long>& numbers,
                  const std::vector<std::string>& plan_lines);

// Exhaustive DFS over value multisets; memoized. Returns a verifying plan.
std::optional<std::vector<std::string>> solve_24(
    const std::vector<long long>& numbers);

bool solvable_24(const std::vector<Rational>& values);

// ---------------------------------------------------------------------------
// Latin squares: rows and columns only, no boxes
// ---------------------------------------------------------------------------
Verdict verify_latin(int n, const std::vector<std::vector<int>>& grid,
                     const std::vector<std::vector<int>>& givens = {});

bool latin_completable(int n, const std::vector<std::vector<int>>& grid);

// ---------------------------------------------------------------------------
// Knights and knaves
// ---------------------------------------------------------------------------
bool eval_claim(const Claim& claim, const std::vector<bool>& knights);
bool consistent_assignment(const std::vector<Statement>& statements,
                           const std::vector<bool>& knights);

// Enumerates all 2^n assignments; keeps those where every speaker's claim
// truth matches their kind.
std::vector<std::vector<bool>> solve_kk(
    const std::vector<Statement>& statements, int n_characters);

std::string render_claim(const Claim& claim);
std::optional<Claim> parse_claim(std::string_view text);

// ---------------------------------------------------------------------------
// Creative writing (structural check only)
// ---------------------------------------------------------------------------
Verdict check_creative(const CreativeInstance& instance,
                       const std::string& output_text);

// ---------------------------------------------------------------------------
// Scripted stepper: the machinery behind the oracle backend. A state is the
// bracketed payload of an "Output:[...]" line (or the task's initial state).
// ---------------------------------------------------------------------------
enum class StateClass { Dead = 1, Live = 2, Final = 3 };

std::string initial_state_text(const TaskSpec& task);
StateClass classify_state(const TaskSpec& task, const std::string& state_text);

// Canonical "Input:... Plan:... Output:..." thoughts, solver-preferred move
// first, then enumeration order; at most max_branches entries.
std::vector<std::string> successor_thoughts(const TaskSpec& task,
                                            const std::string& state_text,
                                            int max_branches);

// Deterministic 0..10 progress score used for step evaluation.
int score_state(const TaskSpec& task, const std::string& state_text);

// Extracts the bracketed payload (brackets included) of the last
// "Output:[...]" in the text, honoring nesting and quoted strings.
std::optional<std::string> last_output_state(std::string_view text);

// Plan substring of a canonical thought line, if present.
std::optional<std::string> thought_plan(std::string_view thought);

// End-to-end check that a solution path (root's children down to the final
// node, canonical thought texts) actually solves the task.
Verdict verify_solution(const TaskSpec& task,
                        const std::vector<std::string>& path_texts);

// ---------------------------------------------------------------------------
// Seeded instance generators for desk-scale batches
// ---------------------------------------------------------------------------
TaskSpec gen_game24(Rng& rng, bool solvable = true);
TaskSpec gen_latin(Rng& rng, int n, int givens_count);
TaskSpec gen_knights_knaves(Rng& rng, int n_characters);
TaskSpec gen_creative(Rng& rng, int n_items, bool sentence_variant = false);

}  // namespace l2t::tasks

#endif  // L2T_TASKS_HPP_
