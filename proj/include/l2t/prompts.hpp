#ifndef L2T_PROMPTS_HPP_
#define L2T_PROMPTS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "l2t/graph.hpp"

namespace l2t::prompts {

enum class TemplateKind { Format, EvalInfo, Evaluate, NodeClass, Generate };

const char* template_name(TemplateKind kind);

// Template bodies are data: built-in defaults baked from the asset files at
// build time, overridable per run from a directory of <name>.txt files.
class PromptLibrary {
 public:
  static PromptLibrary builtin();
  static PromptLibrary load_dir(const std::string& dir);  // builtin + overrides

  const std::string& body(TemplateKind kind) const;
  const std::string& dependency_sentence() const { return dependency_; }

 private:
  std::map<TemplateKind, std::string> bodies_;
  std::string dependency_;
};

using Bindings = std::map<std::string, std::string>;

// Substitutes {name} placeholders. Every placeholder in the template must be
// bound; substitution is single-pass, so values containing braces are safe.
std::string render(const PromptLibrary& lib, TemplateKind kind,
                   const Bindings& bindings);

// Subgraph serializer: "The former generated thoughts are: {t1}, {t2}" with
// texts ordered root-ward to focus, braces doubled, and the chain topology
// spelled out in prose when more than one node is listed.
std::string tau(const graph::AncestorSubgraph& sub,
                const graph::ReasoningGraph& g);

// Inverse of tau's text listing; recovers the exact node texts.
std::vector<std::string> tau_parse(const std::string& text);

struct ParsedClassification {
  int label = 0;  // 1..4
  std::string raw;
};

// First standalone digit 1-4 in the reply.
std::optional<ParsedClassification> parse_label(const std::string& reply);

// First integer token, clamped to [0, 10].
std::optional<int> parse_score(const std::string& reply);

// Splits a reply into at most `expected` thought blocks: numbered items
// first, blank-line groups otherwise. Never returns more than `expected`.
std::vector<std::string> parse_thoughts(const std::string& reply, int expected);

}  // namespace l2t::prompts

#endif  // L2T_PROMPTS_HPP_
