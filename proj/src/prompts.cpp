#include "l2t/prompts.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "l2t/errors.hpp"
#include "l2t/prompt_defaults.hpp"

namespace l2t::prompts {

const char* template_name(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::Format: return "format";
    case TemplateKind::EvalInfo: return "eval_info";
    case TemplateKind::Evaluate: return "evaluate";
    case TemplateKind::NodeClass: return "node_class";
    case TemplateKind::Generate: return "generate";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

constexpr TemplateKind kAllKinds[] = {
    TemplateKind::Format, TemplateKind::EvalInfo, TemplateKind::Evaluate,
    TemplateKind::NodeClass, TemplateKind::Generate};

}  // namespace

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  lib.bodies_[TemplateKind::Format] = trim(defaults::kFormat);
  lib.bodies_[TemplateKind::EvalInfo] = trim(defaults::kEvalInfo);
  lib.bodies_[TemplateKind::Evaluate] = trim(defaults::kEvaluate);
  lib.bodies_[TemplateKind::NodeClass] = trim(defaults::kNodeClass);
  lib.bodies_[TemplateKind::Generate] = trim(defaults::kGenerate);
  lib.dependency_ = trim(defaults::kDependency);
  return lib;
}

PromptLibrary PromptLibrary::load_dir(const std::string& dir) {
  PromptLibrary lib = builtin();
  auto read_if_present = [&dir](const std::string& name) -> std::optional<std::string> {
    std::filesystem::path path = std::filesystem::path(dir) / (name + ".txt");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::stringstream buffer;
    buffer << in.rdbuf();
    return trim(buffer.str());
  };
  for (TemplateKind kind : kAllKinds) {
    if (auto body = read_if_present(template_name(kind))) {
      lib.bodies_[kind] = *body;
    }
  }
  if (auto dep = read_if_present("dependency")) lib.dependency_ = *dep;
  return lib;
}

const std::string& PromptLibrary::body(TemplateKind kind) const {
  return bodies_.at(kind);
}

std::string render(const PromptLibrary& lib, TemplateKind kind,
                   const Bindings& bindings) {
  const std::string& body = lib.body(kind);
  std::string out;
  out.reserve(body.size());
  for (size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c != '{') {
      out += c;
      continue;
    }
    if (i + 1 < body.size() && body[i + 1] == '{') {
      out += '{';
      ++i;
      continue;
    }
    size_t close = body.find('}', i);
    if (close == std::string::npos)
      throw Error(ErrorCode::MissingPlaceholder,
                  "unterminated placeholder in template " +
                      std::string(template_name(kind)));
    std::string name = body.substr(i + 1, close - i - 1);
    auto it = bindings.find(name);
    if (it == bindings.end())
      throw Error(ErrorCode::MissingPlaceholder,
                  "no binding for {" + name + "} in template " +
                      std::string(template_name(kind)));
    out += it->second;
    i = close;
  }
  return out;
}

namespace {

std::string escape_braces(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '{') {
      out += "{{";
    } else if (c == '}') {
      out += "}}";
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

std::string tau(const graph::AncestorSubgraph& sub,
                const graph::ReasoningGraph& g) {
  std::string out = "The former generated thoughts are: ";
  for (size_t i = 0; i < sub.node_ids.size(); ++i) {
    if (i) out += ", ";
    out += "{" + escape_braces(g.node(sub.node_ids[i]).text) + "}";
  }
  if (sub.node_ids.size() > 1) {
    // neighbors carry historical or backtracking information; spell out the
    // chain so the positions are unambiguous
    for (const auto& [u, w] : sub.edge_ids) {
      auto pos = [&sub](graph::NodeId id) {
        for (size_t i = 0; i < sub.node_ids.size(); ++i) {
          if (sub.node_ids[i] == id) return i + 1;
        }
        return static_cast<size_t>(0);
      };
      out += ". Thought " + std::to_string(pos(u)) +
             " is the former thought of thought " + std::to_string(pos(w));
    }
  }
  return out;
}

std::vector<std::string> tau_parse(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      ++i;
      continue;
    }
    ++i;  // inside a group
    std::string current;
    while (i < text.size()) {
      char c = text[i];
      if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
        current += '{';
        i += 2;
      } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
        current += '}';
        i += 2;
      } else if (c == '}') {
        ++i;
        break;
      } else {
        current += c;
        ++i;
      }
    }
    out.push_back(std::move(current));
  }
  return out;
}

std::optional<ParsedClassification> parse_label(const std::string& reply) {
  auto alnum = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  };
  for (size_t i = 0; i < reply.size(); ++i) {
    char c = reply[i];
    if (c < '1' || c > '4') continue;
    bool left_ok = i == 0 || !alnum(reply[i - 1]);
    bool right_ok = i + 1 >= reply.size() || !alnum(reply[i + 1]);
    if (left_ok && right_ok) {
      return ParsedClassification{c - '0', reply};
    }
  }
  return std::nullopt;
}

std::optional<int> parse_score(const std::string& reply) {
  for (size_t i = 0; i < reply.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) continue;
    size_t end = i;
    while (end < reply.size() &&
           std::isdigit(static_cast<unsigned char>(reply[end])))
      ++end;
    long long value = std::stoll(reply.substr(i, end - i));
    if (value > 10) value = 10;
    if (value < 0) value = 0;
    return static_cast<int>(value);
  }
  return std::nullopt;
}

namespace {

// Start of a numbered item: optional indent, digits, then '.', ')' or ':'.
std::optional<size_t> numbered_item_start(const std::string& text, size_t line_start) {
  size_t i = line_start;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  size_t digits = i;
  while (digits < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[digits])))
    ++digits;
  if (digits == i || digits >= text.size()) return std::nullopt;
  char c = text[digits];
  if (c != '.' && c != ')' && c != ':') return std::nullopt;
  return digits + 1;
}

}  // namespace

std::vector<std::string> parse_thoughts(const std::string& reply, int expected) {
  if (expected < 1)
    throw Error(ErrorCode::InvalidArgument, "expected must be >= 1");
  std::vector<std::string> blocks;

  // pass 1: numbered items at line starts
  std::vector<std::pair<size_t, size_t>> markers;  // (line start, content start)
  size_t pos = 0;
  while (pos <= reply.size()) {
    if (auto content = numbered_item_start(reply, pos)) {
      markers.emplace_back(pos, *content);
    }
    size_t next = reply.find('\n', pos);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (markers.size() >= 2) {
    for (size_t k = 0; k < markers.size(); ++k) {
      size_t begin = markers[k].second;
      size_t end = k + 1 < markers.size() ? markers[k + 1].first : reply.size();
      std::string block = trim(reply.substr(begin, end - begin));
      if (!block.empty()) blocks.push_back(std::move(block));
    }
  } else {
    // pass 2: blank-line groups
    std::string current;
    std::stringstream ss(reply);
    std::string line;
    auto flush = [&]() {
      std::string block = trim(current);
      if (!block.empty()) blocks.push_back(block);
      current.clear();
    };
    while (std::getline(ss, line)) {
      if (trim(line).empty()) {
        flush();
      } else {
        if (!current.empty()) current += '\n';
        current += line;
      }
    }
    flush();
  }

  if (static_cast<int>(blocks.size()) > expected) {
    blocks.resize(expected);
  }
  return blocks;
}

}  // namespace l2t::prompts
