#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "l2t/errors.hpp"
#include "l2t/prompts.hpp"
#include "l2t/rng.hpp"

using namespace l2t;
using namespace l2t::prompts;

namespace {

graph::ReasoningGraph make_chain(const std::vector<std::string>& texts) {
  auto g = graph::ReasoningGraph::new_graph(texts.at(0), 2);
  graph::NodeId parent = 0;
  for (std::size_t i = 1; i < texts.size(); ++i) {
    g.annotate_label(parent, graph::Label::Continue);
    g.apply_label(parent, graph::Label::Continue);
    parent = g.add_children(parent, {texts[i]})[0];
  }
  return g;
}

}  // namespace

TEST_CASE("tau renders the exact single-node shape") {
  auto g = make_chain({"Use numbers [10,9,2,3]"});
  auto sub = g.ancestor_subgraph(0, 2);
  CHECK(tau(sub, g) ==
        "The former generated thoughts are: {Use numbers [10,9,2,3]}");
}

TEST_CASE("tau lists the parent before the child and annotates the chain") {
  auto g = make_chain({"root thought", "child thought"});
  auto sub = g.ancestor_subgraph(1, 2);
  std::string text = tau(sub, g);
  auto root_pos = text.find("{root thought}");
  auto child_pos = text.find("{child thought}");
  REQUIRE(root_pos != std::string::npos);
  REQUIRE(child_pos != std::string::npos);
  CHECK(root_pos < child_pos);
  CHECK(text.find("Thought 1 is the former thought of thought 2") !=
        std::string::npos);
}

TEST_CASE("tau escaping round-trips arbitrary brace-laden texts") {
  Rng rng(123);
  const std::string alphabet = "{}ab {}{{}}x,";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> texts;
    int n = 1 + static_cast<int>(rng.uniform_int(4));
    for (int i = 0; i < n; ++i) {
      std::string t = "seed";
      int len = 1 + static_cast<int>(rng.uniform_int(12));
      for (int k = 0; k < len; ++k)
        t += alphabet[rng.uniform_int(alphabet.size())];
      texts.push_back(t);
    }
    auto g = make_chain(texts);
    auto sub = g.ancestor_subgraph(static_cast<graph::NodeId>(texts.size() - 1),
                                   static_cast<int>(texts.size()));
    auto recovered = tau_parse(tau(sub, g));
    CHECK(recovered == texts);
  }
}

TEST_CASE("render substitutes placeholders and is pure") {
  auto lib = PromptLibrary::builtin();
  Bindings gen_bindings{{"task", "T"},
                        {"subgraph", "S"},
                        {"format_info", "F"},
                        {"branch_number", "5"},
                        {"dependency", ""}};
  std::string generate = render(lib, TemplateKind::Generate, gen_bindings);
  CHECK(generate.find("Generate 5 different thoughts") != std::string::npos);
  CHECK(render(lib, TemplateKind::Generate, gen_bindings) == generate);

  std::string evaluate = render(lib, TemplateKind::Evaluate,
                                {{"task", "T"},
                                 {"results", "R"},
                                 {"eval_info", "E"}});
  CHECK(evaluate.find("outputting an integer from 0 to 10") !=
        std::string::npos);

  std::string node_class = render(lib, TemplateKind::NodeClass,
                                  {{"task", "T"}, {"subgraph", "S"}});
  CHECK(node_class.find("(1) Terminate") != std::string::npos);
  CHECK(node_class.find("(2) Continues") != std::string::npos);
  CHECK(node_class.find("(3) Complete") != std::string::npos);
  CHECK(node_class.find("(4) Backtrack") != std::string::npos);
  CHECK(node_class.find("from 1 to 4") != std::string::npos);

  // values containing brace patterns are not re-substituted
  std::string tricky = render(lib, TemplateKind::NodeClass,
                              {{"task", "{subgraph}"}, {"subgraph", "S"}});
  CHECK(tricky.find("{subgraph}") != std::string::npos);

  CHECK_THROWS_AS(render(lib, TemplateKind::Generate, {{"task", "T"}}), Error);
  try {
    render(lib, TemplateKind::Generate, {{"task", "T"}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingPlaceholder);
  }
}

TEST_CASE("template overrides load from a directory") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "l2t_prompt_override";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "evaluate.txt");
    out << "rate {results} for {task} with {eval_info}";
  }
  auto lib = PromptLibrary::load_dir(dir.string());
  std::string evaluate = render(lib, TemplateKind::Evaluate,
                                {{"task", "T"},
                                 {"results", "R"},
                                 {"eval_info", "E"}});
  CHECK(evaluate == "rate R for T with E");
  // untouched templates fall back to the builtin bodies
  CHECK(lib.body(TemplateKind::Format) ==
        PromptLibrary::builtin().body(TemplateKind::Format));
  fs::remove_all(dir);
}

TEST_CASE("parse_label finds the first standalone action digit") {
  CHECK(parse_label("2")->label == 2);
  CHECK(parse_label("Class: 3 (Complete)")->label == 3);
  CHECK(parse_label("answer: (4)")->label == 4);
  CHECK(!parse_label("maybe").has_value());
  CHECK(!parse_label("10 things").has_value());
  CHECK(parse_label("x5 then 1.")->label == 1);
}

TEST_CASE("parse_score clamps the first integer token") {
  CHECK(parse_score("7") == 7);
  CHECK(parse_score("Score: 10/10") == 10);
  CHECK(parse_score("11") == 10);
  CHECK(parse_score("0") == 0);
  CHECK(!parse_score("banana").has_value());
}

TEST_CASE("parse_thoughts splits replies into at most n blocks") {
  std::string oracle_reply =
      "Input:[10,9,2,3] Plan:10 + 2 = 12 Output:[9,3,12]\n\n"
      "Input:[10,9,2,3] Plan:9 - 3 = 6 Output:[10,2,6]\n\n"
      "Input:[10,9,2,3] Plan:10 - 9 = 1 Output:[1,2,3]\n\n"
      "Input:[10,9,2,3] Plan:3 * 2 = 6 Output:[10,9,6]\n\n"
      "Input:[10,9,2,3] Plan:9 + 3 = 12 Output:[10,2,12]";
  auto blocks = parse_thoughts(oracle_reply, 5);
  REQUIRE(blocks.size() == 5);
  for (const auto& block : blocks) {
    CHECK(block.find("Input:[") != std::string::npos);
    CHECK(block.find("Plan:") != std::string::npos);
    CHECK(block.find("Output:[") != std::string::npos);
  }

  auto single = parse_thoughts("one paragraph, no separators", 1);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == "one paragraph, no separators");

  std::string seven;
  for (int i = 0; i < 7; ++i) seven += "block " + std::to_string(i) + "\n\n";
  CHECK(parse_thoughts(seven, 5).size() == 5);

  auto numbered = parse_thoughts("1. first idea\n2. second idea\n", 5);
  REQUIRE(numbered.size() == 2);
  CHECK(numbered[0] == "first idea");
  CHECK(numbered[1] == "second idea");

  CHECK(parse_thoughts("   \n  \n", 3).empty());
}
