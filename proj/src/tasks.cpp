#include "l2t/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "l2t/errors.hpp"

namespace l2t::tasks {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

long long checked_mul(long long a, long long b) {
  __int128 r = static_cast<__int128>(a) * b;
  if (r > (static_cast<__int128>(1) << 62) ||
      r < -(static_cast<__int128>(1) << 62)) {
    throw Error(ErrorCode::NumericalError, "rational overflow");
  }
  return static_cast<long long>(r);
}

char character_name(int idx) { return static_cast<char>('A' + idx); }

}  // namespace

// ---------------------------------------------------------------------------
// Rational
// ---------------------------------------------------------------------------

Rational::Rational(long long n, long long d) : num(n), den(d) {
  if (den == 0) throw Error(ErrorCode::NumericalError, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational Rational::operator+(const Rational& o) const {
  return Rational(checked_mul(num, o.den) + checked_mul(o.num, den),
                  checked_mul(den, o.den));
}
Rational Rational::operator-(const Rational& o) const {
  return Rational(checked_mul(num, o.den) - checked_mul(o.num, den),
                  checked_mul(den, o.den));
}
Rational Rational::operator*(const Rational& o) const {
  return Rational(checked_mul(num, o.num), checked_mul(den, o.den));
}
Rational Rational::operator/(const Rational& o) const {
  if (o.num == 0) throw Error(ErrorCode::NumericalError, "division by zero");
  return Rational(checked_mul(num, o.den), checked_mul(den, o.num));
}

std::string to_string(const Rational& r) {
  if (r.den == 1) return std::to_string(r.num);
  // terminating decimal when den = 2^a * 5^b
  long long d = r.den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d == 1) {
    int digits = std::max(twos, fives);
    long long scale = 1;
    for (int i = 0; i < digits; ++i) scale = checked_mul(scale, 10);
    long long scaled = checked_mul(r.num, scale) / r.den;
    bool neg = scaled < 0;
    std::string body = std::to_string(neg ? -scaled : scaled);
    while (static_cast<int>(body.size()) <= digits)
      body.insert(body.begin(), '0');
    body.insert(body.size() - digits, ".");
    return (neg ? "-" : "") + body;
  }
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

std::optional<Rational> parse_rational(std::string_view text) {
  std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    try {
      size_t pos1 = 0, pos2 = 0;
      long long n = std::stoll(s.substr(0, slash), &pos1);
      long long d = std::stoll(s.substr(slash + 1), &pos2);
      if (pos1 != slash || pos2 != s.size() - slash - 1 || d == 0)
        return std::nullopt;
      return Rational(n, d);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  auto dot = s.find('.');
  try {
    if (dot == std::string::npos) {
      size_t pos = 0;
      long long n = std::stoll(s, &pos);
      if (pos != s.size()) return std::nullopt;
      return Rational(n);
    }
    std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    if (tail.empty() ||
        !std::all_of(tail.begin(), tail.end(),
                     [](unsigned char c) { return std::isdigit(c); }))
      return std::nullopt;
    size_t pos = 0;
    long long whole = std::stoll(head.empty() ? "0" : head, &pos);
    if (!head.empty() && pos != head.size()) return std::nullopt;
    long long scale = 1;
    for (size_t i = 0; i < tail.size(); ++i) scale = checked_mul(scale, 10);
    long long frac = std::stoll(tail);
    bool neg = !head.empty() && head[0] == '-';
    long long n = checked_mul(whole < 0 ? -whole : whole, scale) + frac;
    return Rational(neg || whole < 0 ? -n : n, scale);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Task construction and description text
// ---------------------------------------------------------------------------

const char* family_name(TaskFamily family) {
  switch (family) {
    case TaskFamily::GameOf24: return "game24";
    case TaskFamily::LatinSudoku: return "latin";
    case TaskFamily::KnightsKnaves: return "knights_knaves";
    case TaskFamily::CreativeWriting: return "creative";
  }
  return "unknown";
}

namespace {

std::string render_number_list(const std::vector<long long>& numbers) {
  std::string out = "[";
  for (size_t i = 0; i < numbers.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(numbers[i]);
  }
  return out + "]";
}

std::string render_grid(const std::vector<std::vector<int>>& grid) {
  json j = grid;
  return j.dump();
}

std::string render_items(const std::vector<std::string>& items) {
  json j = items;
  return j.dump();
}

}  // namespace

TaskSpec make_game24(std::vector<long long> numbers) {
  if (numbers.size() != 4)
    throw Error(ErrorCode::InvalidTask, "game24 needs exactly 4 numbers");
  TaskSpec t;
  t.family = TaskFamily::GameOf24;
  t.instance = Game24Instance{std::move(numbers)};
  t.description = render_description(t);
  return t;
}

TaskSpec make_latin(int n, std::vector<std::vector<int>> givens) {
  if (n < 2 || n > 9) throw Error(ErrorCode::InvalidTask, "latin n out of range");
  if (givens.empty()) givens.assign(n, std::vector<int>(n, 0));
  if (static_cast<int>(givens.size()) != n)
    throw Error(ErrorCode::InvalidTask, "givens shape mismatch");
  TaskSpec t;
  t.family = TaskFamily::LatinSudoku;
  t.instance = LatinInstance{n, std::move(givens)};
  t.description = render_description(t);
  return t;
}

TaskSpec make_knights_knaves(int n_characters,
                             std::vector<Statement> statements) {
  if (n_characters < 1 || n_characters > 10)
    throw Error(ErrorCode::InvalidTask, "character count out of range");
  TaskSpec t;
  t.family = TaskFamily::KnightsKnaves;
  t.instance = KnightsKnavesInstance{n_characters, std::move(statements)};
  t.description = render_description(t);
  return t;
}

TaskSpec make_creative(std::vector<std::string> items, bool sentence_variant) {
  if (items.empty()) throw Error(ErrorCode::InvalidTask, "no items given");
  TaskSpec t;
  t.family = TaskFamily::CreativeWriting;
  t.instance = CreativeInstance{std::move(items), sentence_variant};
  t.description = render_description(t);
  return t;
}

std::string render_description(const TaskSpec& task) {
  switch (task.family) {
    case TaskFamily::GameOf24: {
      const auto& inst = std::get<Game24Instance>(task.instance);
      return "Use 4 numbers and basic arithmetic operations (+ - * /) to "
             "obtain 24. Each operation combines two of the available numbers. "
             "Numbers: " +
             render_number_list(inst.numbers);
    }
    case TaskFamily::LatinSudoku: {
      const auto& inst = std::get<LatinInstance>(task.instance);
      return "Fill the " + std::to_string(inst.n) + "x" +
             std::to_string(inst.n) + " grid with numbers 1 to " +
             std::to_string(inst.n) +
             " so that each row and each column contains no repeated numbers. "
             "Empty cells are 0. Givens: " +
             render_grid(inst.givens);
    }
    case TaskFamily::KnightsKnaves: {
      const auto& inst = std::get<KnightsKnavesInstance>(task.instance);
      std::string out = "Each of the " + std::to_string(inst.n_characters) +
                        " characters is either a knight who always tells the "
                        "truth or a knave who always lies.";
      for (const auto& st : inst.statements) {
        out += " ";
        out += character_name(st.speaker);
        out += " says: " + render_claim(st.claim) + ".";
      }
      out += " Determine the identity of each character.";
      return out;
    }
    case TaskFamily::CreativeWriting: {
      const auto& inst = std::get<CreativeInstance>(task.instance);
      if (inst.sentence_variant) {
        return "Expand each given sentence into a small paragraph starting "
               "with it, then combine the paragraphs into a complete text. "
               "Sentences: " +
               render_items(inst.items);
      }
      return "Expand each given word into a sentence containing it, then "
             "combine the sentences into a complete paragraph. Words: " +
             render_items(inst.items);
    }
  }
  throw Error(ErrorCode::InvalidTask, "unknown family");
}

// ---------------------------------------------------------------------------
// Bracket extraction
// ---------------------------------------------------------------------------

namespace {

// Matches from an opening '[' to its closing ']', skipping quoted strings.
std::optional<std::string> extract_bracketed(std::string_view text,
                                             size_t open) {
  if (open >= text.size() || text[open] != '[') return std::nullopt;
  int depth = 0;
  bool in_quote = false;
  for (size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_quote) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_quote = false;
      }
      continue;
    }
    if (c == '"') {
      in_quote = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
      if (depth == 0) return std::string(text.substr(open, i - open + 1));
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> last_output_state(std::string_view text) {
  constexpr std::string_view kMarker = "Output:[";
  size_t pos = text.rfind(kMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  return extract_bracketed(text, pos + kMarker.size() - 1);
}

std::optional<std::string> thought_plan(std::string_view thought) {
  constexpr std::string_view kMarker = "Plan:";
  size_t pos = thought.find(kMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  size_t start = pos + kMarker.size();
  size_t end = thought.find("Output:", start);
  if (end == std::string_view::npos) end = thought.size();
  return trim(thought.substr(start, end - start));
}

// ---------------------------------------------------------------------------
// Game of 24
// ---------------------------------------------------------------------------

std::string PlanStep::text() const {
  return to_string(a) + " " + op + " " + to_string(b) + " = " +
         to_string(result);
}

std::optional<PlanStep> parse_plan_line(std::string_view line) {
  std::string s = trim(line);
  auto eq = s.rfind('=');
  if (eq == std::string::npos) return std::nullopt;
  auto rhs = parse_rational(s.substr(eq + 1));
  if (!rhs) return std::nullopt;
  std::string lhs = trim(s.substr(0, eq));
  // operator is the space-delimited middle token: "a op b"
  for (char op : {'+', '-', '*', '/'}) {
    std::string needle = std::string(" ") + op + " ";
    auto pos = lhs.find(needle);
    while (pos != std::string::npos) {
      auto a = parse_rational(lhs.substr(0, pos));
      auto b = parse_rational(lhs.substr(pos + 3));
      if (a && b) {
        PlanStep step{*a, op, *b, *rhs};
        return step;
      }
      pos = lhs.find(needle, pos + 1);
    }
  }
  return std::nullopt;
}

namespace {

std::optional<Rational> apply_op(const Rational& a, char op,
                                 const Rational& b) {
  switch (op) {
    case '+': return a + b;
    case '-': return a - b;
    case '*': return a * b;
    case '/':
      if (b.num == 0) return std::nullopt;
      return a / b;
  }
  return std::nullopt;
}

std::string canon_key(std::vector<Rational> vals) {
  std::sort(vals.begin(), vals.end(),
            [](const Rational& x, const Rational& y) { return x < y; });
  std::string key;
  for (const auto& v : vals) {
    key += std::to_string(v.num) + "/" + std::to_string(v.den) + ",";
  }
  return key;
}

struct Succ24 {
  PlanStep step;
  std::vector<Rational> next;
};

std::vector<Succ24> successors_24(const std::vector<Rational>& vals) {
  std::vector<Succ24> out;
  std::vector<std::string> seen_plans;
  for (size_t i = 0; i < vals.size(); ++i) {
    for (size_t j = i + 1; j < vals.size(); ++j) {
      const Rational a = vals[i];
      const Rational b = vals[j];
      struct Op {
        Rational x;
        char op;
        Rational y;
      };
      const Op ops[] = {{a, '+', b}, {a, '-', b}, {b, '-', a},
                        {a, '*', b}, {a, '/', b}, {b, '/', a}};
      for (const auto& candidate : ops) {
        auto r = apply_op(candidate.x, candidate.op, candidate.y);
        if (!r) continue;
        PlanStep step{candidate.x, candidate.op, candidate.y, *r};
        std::string plan = step.text();
        if (std::find(seen_plans.begin(), seen_plans.end(), plan) !=
            seen_plans.end())
          continue;
        seen_plans.push_back(plan);
        std::vector<Rational> next;
        next.reserve(vals.size() - 1);
        for (size_t k = 0; k < vals.size(); ++k) {
          if (k != i && k != j) next.push_back(vals[k]);
        }
        next.push_back(*r);
        out.push_back({step, std::move(next)});
      }
    }
  }
  return out;
}

std::unordered_map<std::string, bool> g_solvable_memo;
std::mutex g_solvable_mutex;

}  // namespace

bool solvable_24(const std::vector<Rational>& values) {
  if (values.empty()) return false;
  if (values.size() == 1) return values[0] == Rational(24);
  std::string key = canon_key(values);
  {
    std::lock_guard<std::mutex> lock(g_solvable_mutex);
    auto it = g_solvable_memo.find(key);
    if (it != g_solvable_memo.end()) return it->second;
  }
  bool ok = false;
  for (const auto& succ : successors_24(values)) {
    if (solvable_24(succ.next)) {
      ok = true;
      break;
    }
  }
  std::lock_guard<std::mutex> lock(g_solvable_mutex);
  g_solvable_memo[key] = ok;
  return ok;
}

std::optional<std::vector<std::string>> solve_24(
    const std::vector<long long>& numbers) {
  std::vector<Rational> vals(numbers.begin(), numbers.end());
  if (!solvable_24(vals)) return std::nullopt;
  std::vector<std::string> plan;
  while (vals.size() > 1) {
    bool advanced = false;
    for (const auto& succ : successors_24(vals)) {
      if (solvable_24(succ.next)) {
        plan.push_back(succ.step.text());
        vals = succ.next;
        advanced = true;
        break;
      }
    }
    if (!advanced) return std::nullopt;  // unreachable when solvable
  }
  return plan;
}

Verdict verify_24(const std::vector<long long>& numbers,
                  const std::vector<std::string>& plan_lines) {
  if (plan_lines.empty())
    return Verdict::reject("at least one operation is required");
  if (plan_lines.size() != numbers.size() - 1)
    return Verdict::reject("expected " + std::to_string(numbers.size() - 1) +
                           " operations");
  std::vector<Rational> pool(numbers.begin(), numbers.end());
  for (size_t idx = 0; idx < plan_lines.size(); ++idx) {
    auto step = parse_plan_line(plan_lines[idx]);
    if (!step)
      return Verdict::reject("malformed line", static_cast<int>(idx));
    auto take = [&pool](const Rational& v) {
      auto it = std::find(pool.begin(), pool.end(), v);
      if (it == pool.end()) return false;
      pool.erase(it);
      return true;
    };
    if (!take(step->a))
      return Verdict::reject("value not available: " + to_string(step->a),
                             static_cast<int>(idx));
    if (!take(step->b))
      return Verdict::reject("value not available: " + to_string(step->b),
                             static_cast<int>(idx));
    auto r = apply_op(step->a, step->op, step->b);
    if (!r)
      return Verdict::reject("division by zero", static_cast<int>(idx));
    if (!(*r == step->result))
      return Verdict::reject("arithmetic error: " + step->text(),
                             static_cast<int>(idx));
    pool.push_back(step->result);
  }
  if (pool.size() != 1 || !(pool[0] == Rational(24)))
    return Verdict::reject("final value is not 24");
  return Verdict::accept();
}

// ---------------------------------------------------------------------------
// Latin squares
// ---------------------------------------------------------------------------

Verdict verify_latin(int n, const std::vector<std::vector<int>>& grid,
                     const std::vector<std::vector<int>>& givens) {
  if (static_cast<int>(grid.size()) != n)
    return Verdict::reject("wrong row count");
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(grid[r].size()) != n)
      return Verdict::reject("wrong column count in row " + std::to_string(r));
    for (int c = 0; c < n; ++c) {
      if (grid[r][c] < 1 || grid[r][c] > n)
        return Verdict::reject("entry out of range at (" + std::to_string(r) +
                               "," + std::to_string(c) + ")");
    }
  }
  for (int r = 0; r < n; ++r) {
    std::vector<bool> seen(n + 1, false);
    for (int c = 0; c < n; ++c) {
      if (seen[grid[r][c]])
        return Verdict::reject("repeat in row " + std::to_string(r));
      seen[grid[r][c]] = true;
    }
  }
  for (int c = 0; c < n; ++c) {
    std::vector<bool> seen(n + 1, false);
    for (int r = 0; r < n; ++r) {
      if (seen[grid[r][c]])
        return Verdict::reject("repeat in column " + std::to_string(c));
      seen[grid[r][c]] = true;
    }
  }
  if (!givens.empty()) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (givens[r][c] != 0 && givens[r][c] != grid[r][c])
          return Verdict::reject("given cell changed at (" +
                                 std::to_string(r) + "," + std::to_string(c) +
                                 ")");
      }
    }
  }
  return Verdict::accept();
}

namespace {

bool latin_fill(int n, std::vector<std::vector<int>>& grid) {
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (grid[r][c] != 0) continue;
      for (int v = 1; v <= n; ++v) {
        bool ok = true;
        for (int k = 0; k < n && ok; ++k) {
          if (grid[r][k] == v || grid[k][c] == v) ok = false;
        }
        if (!ok) continue;
        grid[r][c] = v;
        if (latin_fill(n, grid)) return true;
        grid[r][c] = 0;
      }
      return false;
    }
  }
  return true;
}

std::unordered_map<std::string, bool> g_latin_memo;
std::mutex g_latin_mutex;

}  // namespace

bool latin_completable(int n, const std::vector<std::vector<int>>& grid) {
  std::string key = render_grid(grid);
  {
    std::lock_guard<std::mutex> lock(g_latin_mutex);
    auto it = g_latin_memo.find(key);
    if (it != g_latin_memo.end()) return it->second;
  }
  // reject grids that already violate row/column uniqueness
  bool valid = true;
  for (int r = 0; r < n && valid; ++r) {
    std::vector<bool> seen(n + 1, false);
    for (int c = 0; c < n; ++c) {
      int v = grid[r][c];
      if (v == 0) continue;
      if (v < 1 || v > n || seen[v]) valid = false;
      if (v >= 1 && v <= n) seen[v] = true;
    }
  }
  for (int c = 0; c < n && valid; ++c) {
    std::vector<bool> seen(n + 1, false);
    for (int r = 0; r < n; ++r) {
      int v = grid[r][c];
      if (v == 0) continue;
      if (seen[v]) valid = false;
      seen[v] = true;
    }
  }
  bool ok = false;
  if (valid) {
    auto work = grid;
    ok = latin_fill(n, work);
  }
  std::lock_guard<std::mutex> lock(g_latin_mutex);
  g_latin_memo[key] = ok;
  return ok;
}

// ---------------------------------------------------------------------------
// Knights and knaves
// ---------------------------------------------------------------------------

bool eval_claim(const Claim& claim, const std::vector<bool>& knights) {
  switch (claim.kind) {
    case Claim::Kind::IsKnight: return knights.at(claim.who);
    case Claim::Kind::IsKnave: return !knights.at(claim.who);
    case Claim::Kind::Not: return !eval_claim(claim.args.at(0), knights);
    case Claim::Kind::And:
      return std::all_of(claim.args.begin(), claim.args.end(),
                         [&](const Claim& c) { return eval_claim(c, knights); });
    case Claim::Kind::Or:
      return std::any_of(claim.args.begin(), claim.args.end(),
                         [&](const Claim& c) { return eval_claim(c, knights); });
    case Claim::Kind::Implies:
      return !eval_claim(claim.args.at(0), knights) ||
             eval_claim(claim.args.at(1), knights);
  }
  return false;
}

bool consistent_assignment(const std::vector<Statement>& statements,
                           const std::vector<bool>& knights) {
  for (const auto& st : statements) {
    if (knights.at(st.speaker) != eval_claim(st.claim, knights)) return false;
  }
  return true;
}

std::vector<std::vector<bool>> solve_kk(
    const std::vector<Statement>& statements, int n_characters) {
  std::vector<std::vector<bool>> out;
  for (unsigned mask = 0; mask < (1u << n_characters); ++mask) {
    std::vector<bool> knights(n_characters);
    for (int i = 0; i < n_characters; ++i) knights[i] = (mask >> i) & 1u;
    if (consistent_assignment(statements, knights)) out.push_back(knights);
  }
  return out;
}

std::string render_claim(const Claim& claim) {
  switch (claim.kind) {
    case Claim::Kind::IsKnight:
      return std::string(1, character_name(claim.who)) + " is a knight";
    case Claim::Kind::IsKnave:
      return std::string(1, character_name(claim.who)) + " is a knave";
    case Claim::Kind::Not:
      return "it is false that " + render_claim(claim.args.at(0));
    case Claim::Kind::And:
    case Claim::Kind::Or: {
      const char* sep = claim.kind == Claim::Kind::And ? " and " : " or ";
      std::string out = "(";
      for (size_t i = 0; i < claim.args.size(); ++i) {
        if (i) out += sep;
        out += render_claim(claim.args[i]);
      }
      return out + ")";
    }
    case Claim::Kind::Implies:
      return "(if " + render_claim(claim.args.at(0)) + " then " +
             render_claim(claim.args.at(1)) + ")";
  }
  return "";
}

namespace {

// Splits at top-level occurrences of sep (paren depth 0).
std::vector<std::string> split_top_level(std::string_view text,
                                         std::string_view sep) {
  std::vector<std::string> parts;
  int depth = 0;
  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '(') ++depth;
    if (text[i] == ')') --depth;
    if (depth == 0 && text.compare(i, sep.size(), sep) == 0) {
      parts.push_back(std::string(text.substr(start, i - start)));
      i += sep.size() - 1;
      start = i + 1;
    }
  }
  parts.push_back(std::string(text.substr(start)));
  return parts;
}

}  // namespace

std::optional<Claim> parse_claim(std::string_view raw) {
  std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  if (s.front() == '(' && s.back() == ')') {
    // confirm the opening paren closes at the end
    int depth = 0;
    bool wraps = true;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '(') ++depth;
      if (s[i] == ')') {
        --depth;
        if (depth == 0 && i + 1 != s.size()) {
          wraps = false;
          break;
        }
      }
    }
    if (wraps) {
      std::string inner = s.substr(1, s.size() - 2);
      if (inner.rfind("if ", 0) == 0) {
        auto parts = split_top_level(inner.substr(3), " then ");
        if (parts.size() == 2) {
          auto a = parse_claim(parts[0]);
          auto b = parse_claim(parts[1]);
          if (a && b) {
            Claim c;
            c.kind = Claim::Kind::Implies;
            c.args = {*a, *b};
            return c;
          }
        }
        return std::nullopt;
      }
      for (auto [kind, sep] : {std::pair{Claim::Kind::And, " and "},
                               std::pair{Claim::Kind::Or, " or "}}) {
        auto parts = split_top_level(inner, sep);
        if (parts.size() >= 2) {
          Claim c;
          c.kind = kind;
          for (const auto& p : parts) {
            auto sub = parse_claim(p);
            if (!sub) return std::nullopt;
            c.args.push_back(*sub);
          }
          return c;
        }
      }
      return parse_claim(inner);
    }
  }
  constexpr std::string_view kNot = "it is false that ";
  if (s.rfind(kNot, 0) == 0) {
    auto sub = parse_claim(s.substr(kNot.size()));
    if (!sub) return std::nullopt;
    Claim c;
    c.kind = Claim::Kind::Not;
    c.args = {*sub};
    return c;
  }
  // atom: "X is a knight" / "X is a knave"
  if (s.size() >= 3 && s[0] >= 'A' && s[0] <= 'J' && s[1] == ' ') {
    std::string rest = s.substr(2);
    Claim c;
    c.who = s[0] - 'A';
    if (rest == "is a knight") {
      c.kind = Claim::Kind::IsKnight;
      return c;
    }
    if (rest == "is a knave") {
      c.kind = Claim::Kind::IsKnave;
      return c;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Creative writing
// ---------------------------------------------------------------------------

namespace {

bool contains_word(const std::string& haystack, const std::string& word) {
  std::string h = lower(haystack), w = lower(word);
  size_t pos = 0;
  while ((pos = h.find(w, pos)) != std::string::npos) {
    bool left_ok =
        pos == 0 || !std::isalnum(static_cast<unsigned char>(h[pos - 1]));
    size_t end = pos + w.size();
    bool right_ok =
        end >= h.size() || !std::isalnum(static_cast<unsigned char>(h[end]));
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

}  // namespace

Verdict check_creative(const CreativeInstance& instance,
                       const std::string& output_text) {
  if (trim(output_text).empty()) return Verdict::reject("empty output");
  if (instance.sentence_variant) {
    std::vector<std::string> paragraphs;
    std::stringstream ss(output_text);
    std::string line;
    while (std::getline(ss, line)) {
      line = trim(line);
      if (!line.empty()) paragraphs.push_back(line);
    }
    for (const auto& sentence : instance.items) {
      bool found = std::any_of(paragraphs.begin(), paragraphs.end(),
                               [&](const std::string& p) {
                                 return p.rfind(sentence, 0) == 0;
                               });
      if (!found)
        return Verdict::reject("missing paragraph starting with: " + sentence);
    }
    return Verdict::accept();
  }
  for (const auto& word : instance.items) {
    if (!contains_word(output_text, word))
      return Verdict::reject("missing word: " + word);
  }
  return Verdict::accept();
}

// ---------------------------------------------------------------------------
// Scripted stepper
// ---------------------------------------------------------------------------

namespace {

// --- game24 state <-> text ---

std::optional<std::vector<Rational>> parse_state_24(const std::string& text) {
  std::string s = trim(text);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  s = s.substr(1, s.size() - 2);
  std::vector<Rational> vals;
  if (trim(s).empty()) return vals;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_rational(item);
    if (!v) return std::nullopt;
    vals.push_back(*v);
  }
  return vals;
}

std::string render_state_24(const std::vector<Rational>& vals) {
  std::string out = "[";
  for (size_t i = 0; i < vals.size(); ++i) {
    if (i) out += ",";
    out += to_string(vals[i]);
  }
  return out + "]";
}

// --- latin state ---

std::optional<std::vector<std::vector<int>>> parse_grid(
    const std::string& text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) return std::nullopt;
  std::vector<std::vector<int>> grid;
  for (const auto& row : j) {
    if (!row.is_array()) return std::nullopt;
    std::vector<int> r;
    for (const auto& cell : row) {
      if (!cell.is_number_integer()) return std::nullopt;
      r.push_back(cell.get<int>());
    }
    grid.push_back(std::move(r));
  }
  return grid;
}

// --- knights/knaves state: "[A=Knight,B=?,C=?]" ---

std::optional<std::vector<int>> parse_state_kk(const std::string& text,
                                               int n_characters) {
  std::string s = trim(text);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  s = s.substr(1, s.size() - 2);
  std::vector<int> state(n_characters, -1);
  std::stringstream ss(s);
  std::string item;
  int count = 0;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    auto eq = item.find('=');
    if (eq == std::string::npos || eq != 1) return std::nullopt;
    int idx = item[0] - 'A';
    if (idx < 0 || idx >= n_characters) return std::nullopt;
    std::string v = item.substr(2);
    if (v == "Knight")
      state[idx] = 1;
    else if (v == "Knave")
      state[idx] = 0;
    else if (v == "?")
      state[idx] = -1;
    else
      return std::nullopt;
    ++count;
  }
  if (count != n_characters) return std::nullopt;
  return state;
}

std::string render_state_kk(const std::vector<int>& state) {
  std::string out = "[";
  for (size_t i = 0; i < state.size(); ++i) {
    if (i) out += ",";
    out += character_name(static_cast<int>(i));
    out += "=";
    out += state[i] == 1 ? "Knight" : state[i] == 0 ? "Knave" : "?";
  }
  return out + "]";
}

bool kk_completable(const std::vector<Statement>& statements,
                    const std::vector<int>& state) {
  std::vector<int> unknown;
  for (size_t i = 0; i < state.size(); ++i) {
    if (state[i] < 0) unknown.push_back(static_cast<int>(i));
  }
  for (unsigned mask = 0; mask < (1u << unknown.size()); ++mask) {
    std::vector<bool> knights(state.size());
    for (size_t i = 0; i < state.size(); ++i) knights[i] = state[i] == 1;
    for (size_t u = 0; u < unknown.size(); ++u)
      knights[unknown[u]] = (mask >> u) & 1u;
    if (consistent_assignment(statements, knights)) return true;
  }
  return false;
}

// --- creative state: JSON string array ---

std::optional<std::vector<std::string>> parse_state_creative(
    const std::string& text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) return std::nullopt;
  std::vector<std::string> items;
  for (const auto& it : j) {
    if (!it.is_string()) return std::nullopt;
    items.push_back(it.get<std::string>());
  }
  return items;
}

std::string creative_sentence(const std::string& word) {
  return "The " + lower(word) + " drew every eye in the scene.";
}

std::string creative_pair_sentence(const std::string& a,
                                   const std::string& b) {
  return "The " + lower(a) + " stood out beside the " + lower(b) + ".";
}

std::string creative_paragraph(const std::string& sentence) {
  return sentence + " The thought settled in as the scene unfolded.";
}

}  // namespace

std::string initial_state_text(const TaskSpec& task) {
  switch (task.family) {
    case TaskFamily::GameOf24: {
      const auto& inst = std::get<Game24Instance>(task.instance);
      std::vector<Rational> vals(inst.numbers.begin(), inst.numbers.end());
      return render_state_24(vals);
    }
    case TaskFamily::LatinSudoku:
      return render_grid(std::get<LatinInstance>(task.instance).givens);
    case TaskFamily::KnightsKnaves: {
      const auto& inst = std::get<KnightsKnavesInstance>(task.instance);
      return render_state_kk(std::vector<int>(inst.n_characters, -1));
    }
    case TaskFamily::CreativeWriting:
      return render_items(std::get<CreativeInstance>(task.instance).items);
  }
  throw Error(ErrorCode::InvalidTask, "unknown family");
}

StateClass classify_state(const TaskSpec& task, const std::string& state_text) {
  switch (task.family) {
    case TaskFamily::GameOf24: {
      auto vals = parse_state_24(state_text);
      if (!vals || vals->empty()) return StateClass::Dead;
      if (vals->size() == 1)
        return (*vals)[0] == Rational(24) ? StateClass::Final
                                          : StateClass::Dead;
      return solvable_24(*vals) ? StateClass::Live : StateClass::Dead;
    }
    case TaskFamily::LatinSudoku: {
      const auto& inst = std::get<LatinInstance>(task.instance);
      auto grid = parse_grid(state_text);
      if (!grid || static_cast<int>(grid->size()) != inst.n)
        return StateClass::Dead;
      bool full = true;
      for (const auto& row : *grid) {
        for (int v : row) {
          if (v == 0) full = false;
        }
      }
      if (full)
        return verify_latin(inst.n, *grid, inst.givens).ok ? StateClass::Final
                                                           : StateClass::Dead;
      return latin_completable(inst.n, *grid) ? StateClass::Live
                                              : StateClass::Dead;
    }
    case TaskFamily::KnightsKnaves: {
      const auto& inst = std::get<KnightsKnavesInstance>(task.instance);
      auto state = parse_state_kk(state_text, inst.n_characters);
      if (!state) return StateClass::Dead;
      bool full =
          std::none_of(state->begin(), state->end(), [](int v) { return v < 0; });
      if (full) {
        std::vector<bool> knights(state->size());
        for (size_t i = 0; i < state->size(); ++i) knights[i] = (*state)[i] == 1;
        return consistent_assignment(inst.statements, knights)
                   ? StateClass::Final
                   : StateClass::Dead;
      }
      return kk_completable(inst.statements, *state) ? StateClass::Live
                                                     : StateClass::Dead;
    }
    case TaskFamily::CreativeWriting: {
      const auto& inst = std::get<CreativeInstance>(task.instance);
      auto items = parse_state_creative(state_text);
      if (!items || items->empty()) return StateClass::Dead;
      if (items->size() == 1) {
        return check_creative(inst, (*items)[0]).ok ? StateClass::Final
                                                    : StateClass::Dead;
      }
      return StateClass::Live;
    }
  }
  return StateClass::Dead;
}

std::vector<std::string> successor_thoughts(const TaskSpec& task,
                                            const std::string& state_text,
                                            int max_branches) {
  if (max_branches < 1) return {};
  struct Candidate {
    std::string plan;
    std::string next_state;
    bool winning = false;
  };
  std::vector<Candidate> cands;
  switch (task.family) {
    case TaskFamily::GameOf24: {
      auto vals = parse_state_24(state_text);
      if (!vals || vals->size() < 2) return {};
      for (const auto& succ : successors_24(*vals)) {
        cands.push_back({succ.step.text(), render_state_24(succ.next),
                         solvable_24(succ.next)});
      }
      break;
    }
    case TaskFamily::LatinSudoku: {
      const auto& inst = std::get<LatinInstance>(task.instance);
      auto grid = parse_grid(state_text);
      if (!grid) return {};
      int row = -1;
      for (int r = 0; r < inst.n && row < 0; ++r) {
        for (int c = 0; c < inst.n; ++c) {
          if ((*grid)[r][c] == 0) {
            row = r;
            break;
          }
        }
      }
      if (row < 0) return {};
      std::vector<int> perm(inst.n);
      std::iota(perm.begin(), perm.end(), 1);
      do {
        bool ok = true;
        for (int c = 0; c < inst.n && ok; ++c) {
          if ((*grid)[row][c] != 0 && (*grid)[row][c] != perm[c]) ok = false;
          for (int r2 = 0; r2 < inst.n && ok; ++r2) {
            if (r2 != row && (*grid)[r2][c] == perm[c]) ok = false;
          }
        }
        if (!ok) continue;
        auto next = *grid;
        next[row] = perm;
        json row_json = perm;
        cands.push_back({"fill row " + std::to_string(row + 1) + " as " +
                             row_json.dump(),
                         render_grid(next),
                         latin_completable(inst.n, next)});
      } while (std::next_permutation(perm.begin(), perm.end()));
      break;
    }
    case TaskFamily::KnightsKnaves: {
      const auto& inst = std::get<KnightsKnavesInstance>(task.instance);
      auto state = parse_state_kk(state_text, inst.n_characters);
      if (!state) return {};
      int idx = -1;
      for (size_t i = 0; i < state->size(); ++i) {
        if ((*state)[i] < 0) {
          idx = static_cast<int>(i);
          break;
        }
      }
      if (idx < 0) return {};
      for (int value : {1, 0}) {
        auto next = *state;
        next[idx] = value;
        std::string kind = value == 1 ? "Knight" : "Knave";
        cands.push_back({std::string("assume ") + character_name(idx) +
                             " is a " + kind,
                         render_state_kk(next),
                         kk_completable(inst.statements, next)});
      }
      break;
    }
    case TaskFamily::CreativeWriting: {
      const auto& inst = std::get<CreativeInstance>(task.instance);
      auto items = parse_state_creative(state_text);
      if (!items || items->size() < 2) return {};
      auto is_raw = [&](const std::string& s) {
        return std::find(inst.items.begin(), inst.items.end(), s) !=
               inst.items.end();
      };
      for (size_t i = 0; i < items->size(); ++i) {
        for (size_t j = 0; j < items->size(); ++j) {
          if (i == j) continue;
          const std::string& x = (*items)[i];
          const std::string& y = (*items)[j];
          std::string merged;
          if (inst.sentence_variant) {
            auto part = [&](const std::string& s) {
              return is_raw(s) ? creative_paragraph(s) : s;
            };
            merged = part(x) + "\n" + part(y);
          } else if (is_raw(x) && is_raw(y)) {
            merged = creative_pair_sentence(x, y);
          } else {
            auto part = [&](const std::string& s) {
              return is_raw(s) ? creative_sentence(s) : s;
            };
            merged = part(x) + " " + part(y);
          }
          std::vector<std::string> next;
          next.push_back(merged);
          for (size_t k = 0; k < items->size(); ++k) {
            if (k != i && k != j) next.push_back((*items)[k]);
          }
          cands.push_back({"choose element " + std::to_string(i) +
                               " and element " + std::to_string(j),
                           render_items(next), true});
        }
      }
      break;
    }
  }
  // the solver-preferred candidate moves to the front; everything else keeps
  // enumeration order, so wide fan-outs include genuine dead ends
  auto winner = std::find_if(cands.begin(), cands.end(),
                             [](const Candidate& c) { return c.winning; });
  if (winner != cands.end()) {
    std::rotate(cands.begin(), winner, winner + 1);
  }
  std::vector<std::string> out;
  int limit = std::min<int>(max_branches, static_cast<int>(cands.size()));
  for (int i = 0; i < limit; ++i) {
    out.push_back("Input:" + state_text + " Plan:" + cands[i].plan +
                  " Output:" + cands[i].next_state);
  }
  return out;
}

int score_state(const TaskSpec& task, const std::string& state_text) {
  StateClass cls = classify_state(task, state_text);
  if (cls == StateClass::Final) return 10;
  if (cls == StateClass::Dead) return 2;
  switch (task.family) {
    case TaskFamily::GameOf24: {
      auto vals = parse_state_24(state_text);
      size_t n = vals ? vals->size() : 4;
      return n <= 2 ? 8 : n == 3 ? 7 : 6;
    }
    case TaskFamily::LatinSudoku: {
      const auto& inst = std::get<LatinInstance>(task.instance);
      auto grid = parse_grid(state_text);
      int filled = 0;
      if (grid) {
        for (const auto& row : *grid) {
          for (int v : row) filled += v != 0;
        }
      }
      return 5 + (3 * filled) / (inst.n * inst.n);
    }
    case TaskFamily::KnightsKnaves: {
      const auto& inst = std::get<KnightsKnavesInstance>(task.instance);
      auto state = parse_state_kk(state_text, inst.n_characters);
      int assigned = 0;
      if (state) {
        for (int v : *state) assigned += v >= 0;
      }
      return 5 + (3 * assigned) / inst.n_characters;
    }
    case TaskFamily::CreativeWriting: {
      const auto& inst = std::get<CreativeInstance>(task.instance);
      auto items = parse_state_creative(state_text);
      int n0 = static_cast<int>(inst.items.size());
      int n = items ? static_cast<int>(items->size()) : n0;
      if (n0 <= 1) return 5;
      return 5 + (3 * (n0 - n)) / std::max(1, n0 - 1);
    }
  }
  return 5;
}

Verdict verify_solution(const TaskSpec& task,
                        const std::vector<std::string>& path_texts) {
  if (path_texts.empty()) return Verdict::reject("empty solution path");
  auto final_state = last_output_state(path_texts.back());
  if (!final_state) return Verdict::reject("final thought has no output state");
  switch (task.family) {
    case TaskFamily::GameOf24: {
      const auto& inst = std::get<Game24Instance>(task.instance);
      std::vector<std::string> plans;
      for (const auto& text : path_texts) {
        auto plan = thought_plan(text);
        if (!plan)
          return Verdict::reject("thought without a plan: " + text);
        plans.push_back(*plan);
      }
      return verify_24(inst.numbers, plans);
    }
    case TaskFamily::LatinSudoku: {
      const auto& inst = std::get<LatinInstance>(task.instance);
      auto grid = parse_grid(*final_state);
      if (!grid) return Verdict::reject("final state is not a grid");
      return verify_latin(inst.n, *grid, inst.givens);
    }
    case TaskFamily::KnightsKnaves: {
      const auto& inst = std::get<KnightsKnavesInstance>(task.instance);
      auto state = parse_state_kk(*final_state, inst.n_characters);
      if (!state) return Verdict::reject("final state is not an assignment");
      std::vector<bool> knights(state->size());
      for (size_t i = 0; i < state->size(); ++i) {
        if ((*state)[i] < 0)
          return Verdict::reject("character left unassigned");
        knights[i] = (*state)[i] == 1;
      }
      return consistent_assignment(inst.statements, knights)
                 ? Verdict::accept()
                 : Verdict::reject("assignment contradicts a statement");
    }
    case TaskFamily::CreativeWriting: {
      const auto& inst = std::get<CreativeInstance>(task.instance);
      auto items = parse_state_creative(*final_state);
      if (!items || items->size() != 1)
        return Verdict::reject("final state is not a single text");
      return check_creative(inst, (*items)[0]);
    }
  }
  return Verdict::reject("unknown family");
}

// ---------------------------------------------------------------------------
// Description parsing (oracle recovers the task from prompt text)
// ---------------------------------------------------------------------------

namespace {

std::optional<TaskSpec> parse_game24_description(std::string_view text) {
  if (text.find("obtain 24") == std::string_view::npos) return std::nullopt;
  constexpr std::string_view kMarker = "Numbers: [";
  auto pos = text.find(kMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  auto payload = extract_bracketed(text, pos + kMarker.size() - 1);
  if (!payload) return std::nullopt;
  auto vals = parse_state_24(*payload);
  if (!vals || vals->size() != 4) return std::nullopt;
  std::vector<long long> numbers;
  for (const auto& v : *vals) {
    if (!v.is_integer()) return std::nullopt;
    numbers.push_back(v.num);
  }
  return make_game24(numbers);
}

std::optional<TaskSpec> parse_latin_description(std::string_view text) {
  constexpr std::string_view kMarker = "Givens: [";
  auto pos = text.find(kMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  auto payload = extract_bracketed(text, pos + kMarker.size() - 1);
  if (!payload) return std::nullopt;
  auto grid = parse_grid(*payload);
  if (!grid || grid->empty()) return std::nullopt;
  return make_latin(static_cast<int>(grid->size()), *grid);
}

std::optional<TaskSpec> parse_kk_description(std::string_view text) {
  constexpr std::string_view kHeader = "Each of the ";
  auto pos = text.find(kHeader);
  if (pos == std::string_view::npos ||
      text.find("always tells the truth") == std::string_view::npos)
    return std::nullopt;
  size_t num_start = pos + kHeader.size();
  size_t num_end = num_start;
  while (num_end < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[num_end])))
    ++num_end;
  if (num_end == num_start) return std::nullopt;
  int n = std::stoi(std::string(text.substr(num_start, num_end - num_start)));
  std::vector<Statement> statements;
  size_t cursor = num_end;
  while (true) {
    auto says = text.find(" says: ", cursor);
    if (says == std::string_view::npos) break;
    if (says < 1) break;
    char name = text[says - 1];
    if (name < 'A' || name >= 'A' + n) {
      cursor = says + 7;
      continue;
    }
    size_t claim_start = says + 7;
    auto period = text.find('.', claim_start);
    if (period == std::string_view::npos) break;
    auto claim = parse_claim(text.substr(claim_start, period - claim_start));
    if (!claim) return std::nullopt;
    statements.push_back({name - 'A', *claim});
    cursor = period + 1;
  }
  return make_knights_knaves(n, statements);
}

std::optional<TaskSpec> parse_creative_description(std::string_view text) {
  for (auto [marker, variant] : {std::pair{std::string_view("Words: ["), false},
                                 std::pair{std::string_view("Sentences: ["), true}}) {
    auto pos = text.find(marker);
    if (pos == std::string_view::npos) continue;
    auto payload = extract_bracketed(text, pos + marker.size() - 1);
    if (!payload) continue;
    auto items = parse_state_creative(*payload);
    if (!items || items->empty()) continue;
    return make_creative(*items, variant);
  }
  return std::nullopt;
}

}  // namespace

std::optional<TaskSpec> parse_task(std::string_view text) {
  if (auto t = parse_game24_description(text)) return t;
  if (auto t = parse_latin_description(text)) return t;
  if (auto t = parse_creative_description(text)) return t;
  if (auto t = parse_kk_description(text)) return t;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Instance JSON
// ---------------------------------------------------------------------------

namespace {

json claim_to_json(const Claim& claim) {
  switch (claim.kind) {
    case Claim::Kind::IsKnight: return {{"kind", "knight"}, {"who", claim.who}};
    case Claim::Kind::IsKnave: return {{"kind", "knave"}, {"who", claim.who}};
    case Claim::Kind::Not:
      return {{"kind", "not"}, {"args", json::array({claim_to_json(claim.args.at(0))})}};
    case Claim::Kind::And:
    case Claim::Kind::Or:
    case Claim::Kind::Implies: {
      const char* kind = claim.kind == Claim::Kind::And   ? "and"
                         : claim.kind == Claim::Kind::Or  ? "or"
                                                          : "implies";
      json args = json::array();
      for (const auto& a : claim.args) args.push_back(claim_to_json(a));
      return {{"kind", kind}, {"args", args}};
    }
  }
  throw Error(ErrorCode::InvalidTask, "unknown claim kind");
}

Claim claim_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  Claim c;
  if (kind == "knight" || kind == "knave") {
    c.kind = kind == "knight" ? Claim::Kind::IsKnight : Claim::Kind::IsKnave;
    c.who = j.at("who").get<int>();
    return c;
  }
  c.kind = kind == "not"       ? Claim::Kind::Not
           : kind == "and"     ? Claim::Kind::And
           : kind == "or"      ? Claim::Kind::Or
           : kind == "implies" ? Claim::Kind::Implies
                               : throw Error(ErrorCode::InvalidTask,
                                             "unknown claim kind: " + kind);
  for (const auto& a : j.at("args")) c.args.push_back(claim_from_json(a));
  return c;
}

}  // namespace

std::string task_to_json(const TaskSpec& task) {
  json j;
  j["family"] = family_name(task.family);
  switch (task.family) {
    case TaskFamily::GameOf24:
      j["numbers"] = std::get<Game24Instance>(task.instance).numbers;
      break;
    case TaskFamily::LatinSudoku: {
      const auto& inst = std::get<LatinInstance>(task.instance);
      j["n"] = inst.n;
      j["givens"] = inst.givens;
      break;
    }
    case TaskFamily::KnightsKnaves: {
      const auto& inst = std::get<KnightsKnavesInstance>(task.instance);
      j["n_characters"] = inst.n_characters;
      json stmts = json::array();
      for (const auto& st : inst.statements) {
        stmts.push_back(
            {{"speaker", st.speaker}, {"claim", claim_to_json(st.claim)}});
      }
      j["statements"] = stmts;
      break;
    }
    case TaskFamily::CreativeWriting: {
      const auto& inst = std::get<CreativeInstance>(task.instance);
      j[inst.sentence_variant ? "sentences" : "words"] = inst.items;
      break;
    }
  }
  return j.dump(2);
}

TaskSpec task_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  std::string family = j.at("family").get<std::string>();
  if (family == "game24") {
    return make_game24(j.at("numbers").get<std::vector<long long>>());
  }
  if (family == "latin") {
    return make_latin(j.at("n").get<int>(),
                      j.at("givens").get<std::vector<std::vector<int>>>());
  }
  if (family == "knights_knaves") {
    std::vector<Statement> statements;
    for (const auto& st : j.at("statements")) {
      statements.push_back({st.at("speaker").get<int>(),
                            claim_from_json(st.at("claim"))});
    }
    return make_knights_knaves(j.at("n_characters").get<int>(), statements);
  }
  if (family == "creative") {
    if (j.contains("sentences"))
      return make_creative(j.at("sentences").get<std::vector<std::string>>(),
                           true);
    return make_creative(j.at("words").get<std::vector<std::string>>(), false);
  }
  throw Error(ErrorCode::InvalidTask, "unknown family: " + family);
}

TaskSpec load_task_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open task file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return task_from_json(buffer.str());
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

TaskSpec gen_game24(Rng& rng, bool solvable) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<long long> numbers;
    for (int i = 0; i < 4; ++i)
      numbers.push_back(1 + static_cast<long long>(rng.uniform_int(13)));
    std::vector<Rational> vals(numbers.begin(), numbers.end());
    if (solvable_24(vals) == solvable) return make_game24(numbers);
  }
  throw Error(ErrorCode::InvalidTask, "instance generation exhausted");
}

TaskSpec gen_latin(Rng& rng, int n, int givens_count) {
  // random latin square: relabeled, row/column-shuffled cyclic square
  std::vector<int> row_perm(n), col_perm(n), sym_perm(n);
  std::iota(row_perm.begin(), row_perm.end(), 0);
  std::iota(col_perm.begin(), col_perm.end(), 0);
  std::iota(sym_perm.begin(), sym_perm.end(), 0);
  auto shuffle = [&rng](std::vector<int>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[rng.uniform_int(i)]);
    }
  };
  shuffle(row_perm);
  shuffle(col_perm);
  shuffle(sym_perm);
  std::vector<std::vector<int>> square(n, std::vector<int>(n));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      square[r][c] = sym_perm[(row_perm[r] + col_perm[c]) % n] + 1;
    }
  }
  std::vector<int> cells(n * n);
  std::iota(cells.begin(), cells.end(), 0);
  shuffle(cells);
  std::vector<std::vector<int>> givens(n, std::vector<int>(n, 0));
  for (int i = 0; i < std::min<int>(givens_count, n * n); ++i) {
    int cell = cells[i];
    givens[cell / n][cell % n] = square[cell / n][cell % n];
  }
  return make_latin(n, givens);
}

TaskSpec gen_knights_knaves(Rng& rng, int n_characters) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<bool> hidden(n_characters);
    for (int i = 0; i < n_characters; ++i) hidden[i] = rng.uniform() < 0.5;
    auto atom = [&]() {
      Claim c;
      c.who = static_cast<int>(rng.uniform_int(n_characters));
      c.kind = rng.uniform() < 0.5 ? Claim::Kind::IsKnight : Claim::Kind::IsKnave;
      return c;
    };
    std::vector<Statement> statements;
    for (int speaker = 0; speaker < n_characters; ++speaker) {
      Claim claim;
      double shape = rng.uniform();
      if (shape < 0.4) {
        claim = atom();
      } else {
        claim.kind = shape < 0.6   ? Claim::Kind::And
                     : shape < 0.8 ? Claim::Kind::Or
                                   : Claim::Kind::Implies;
        claim.args = {atom(), atom()};
      }
      // knights must speak truth, knaves must lie; negate when it mismatches
      if (eval_claim(claim, hidden) != hidden[speaker]) {
        Claim neg;
        neg.kind = Claim::Kind::Not;
        neg.args = {claim};
        claim = neg;
      }
      statements.push_back({speaker, claim});
    }
    if (solve_kk(statements, n_characters).size() == 1) {
      return make_knights_knaves(n_characters, statements);
    }
  }
  throw Error(ErrorCode::InvalidTask, "instance generation exhausted");
}

TaskSpec gen_creative(Rng& rng, int n_items, bool sentence_variant) {
  static const std::vector<std::string> kWords = {
      "Elephant", "Solar",   "Lantern", "Velvet",  "River",   "Marble",
      "Comet",    "Garden",  "Anchor",  "Prism",   "Willow",  "Ember",
      "Falcon",   "Harbor",  "Quartz",  "Meadow",  "Copper",  "Drift",
      "Beacon",   "Cinder",  "Orchid",  "Summit",  "Tundra",  "Voyage"};
  std::vector<std::string> pool = kWords;
  std::vector<std::string> items;
  for (int i = 0; i < n_items && !pool.empty(); ++i) {
    size_t idx = rng.uniform_int(pool.size());
    items.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<long>(idx));
  }
  if (sentence_variant) {
    static const std::vector<std::string> kShapes = {
        "The % waited at the edge of the story.",
        "A % appeared before anyone spoke.",
        "Nobody expected the % that morning."};
    for (std::size_t i = 0; i < items.size(); ++i) {
      std::string shape = kShapes[i % kShapes.size()];
      items[i] = shape.replace(shape.find('%'), 1, lower(items[i]));
    }
  }
  return make_creative(items, sentence_variant);
}

}  // namespace l2t::tasks
