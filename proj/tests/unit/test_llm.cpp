#include <gtest/gtest.h>

#include <openssl/evp.h>

#include <fstream>
#include <json.hpp>

#include "kf/cdsl/program.hpp"
#include "kf/llm/gateway.hpp"
#include "support.hpp"

namespace kf::llm {
namespace {

std::string sha256_hex(const std::string &text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  static const char *kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

Gateway scripted(int faults = 0) {
  return Gateway(std::make_shared<ScriptedProvider>(ScriptedOptions{faults}),
                 std::make_shared<Transcript>());
}

PromptInputs analyst_inputs(const std::string &exemplar) {
  const auto dir = testing::data_dir() / "exemplars" / exemplar;
  const auto bundle = patch::load_commit_bundle(dir);
  return {{"patch", patch::serialize(bundle.commit)},
          {"function_contexts",
           render_function_contexts(patch::extract_function_contexts(bundle.commit, dir / "corpus"))}};
}

TEST(Prompts, MissingInputIsNamed) {
  try {
    render_prompt(AgentRole::Planner, {{"patch", "x"}});
    FAIL();
  } catch (const MissingInput &e) {
    EXPECT_NE(std::string(e.what()).find("pattern"), std::string::npos) << e.what();
  }
}

TEST(Prompts, DigestIsSha256OfRenderedText) {
  const PromptInputs in{{"checker", "checker c {}"}, {"diagnostics", "E-SYNTAX: x at 1:1"}};
  const auto a = render_prompt(AgentRole::SyntaxRepairer, in);
  const auto b = render_prompt(AgentRole::SyntaxRepairer, in);
  EXPECT_EQ(a.inputs_digest, b.inputs_digest);
  EXPECT_EQ(a.inputs_digest, sha256_hex(a.rendered_text));
  auto changed = in;
  changed["iteration"] = "2";
  const auto c = render_prompt(AgentRole::SyntaxRepairer, changed);
  EXPECT_NE(c.inputs_digest, a.inputs_digest);
  EXPECT_NE(c.rendered_text.find("2"), std::string::npos);
}

TEST(Prompts, ImplementerSeesCatalogAndTemplate) {
  const auto p = render_prompt(AgentRole::Implementer, {{"patch", "p"}, {"pattern", "q"}, {"plan", "r"}});
  EXPECT_NE(p.rendered_text.find("mark_all_aliases"), std::string::npos);
  EXPECT_NE(p.rendered_text.find(checker_template()), std::string::npos);
}

TEST(Prompts, ExemplarSetCoversThreeCategories) {
  ASSERT_EQ(exemplar_set().size(), 3u);
  EXPECT_EQ(find_exemplar(BugCategory::NullPointerDereference)->key_callee, "devm_kzalloc");
  EXPECT_NE(find_exemplar(BugCategory::DoubleFree), nullptr);
  EXPECT_NE(find_exemplar(BugCategory::UseBeforeInitialization), nullptr);
  EXPECT_EQ(find_exemplar(BugCategory::MemoryLeak), nullptr);
  for (const auto &e : exemplar_set()) EXPECT_TRUE(cdsl::parse_checker(e.checker).ok()) << e.name;
}

TEST(Scripted, AnalystRecognizesExemplars) {
  auto gw = scripted();
  const std::pair<const char *, BugCategory> cases[] = {
      {"npd", BugCategory::NullPointerDereference},
      {"double_free", BugCategory::DoubleFree},
      {"ubi", BugCategory::UseBeforeInitialization}};
  for (const auto &[dir, cat] : cases) {
    const auto fields = parse_pattern_text(gw.complete(AgentRole::PatternAnalyst, analyst_inputs(dir)));
    EXPECT_EQ(fields.category, cat) << dir;
    EXPECT_FALSE(fields.callees.empty()) << dir;
    EXPECT_FALSE(fields.narrative.empty()) << dir;
  }
}

TEST(Scripted, UnrecognizedPatchIsUnsupported) {
  auto gw = scripted();
  EXPECT_THROW(gw.complete(AgentRole::PatternAnalyst,
                           {{"patch", "--- a/x.mc\n+++ b/x.mc\n@@ -1,1 +1,1 @@\n-a = 1;\n+a = 2;\n"},
                            {"function_contexts", ""}}),
               UnsupportedPattern);
}

TEST(Scripted, FaultsAreRepaired) {
  auto gw = scripted(2);
  auto in = analyst_inputs("npd");
  const auto pattern = gw.complete(AgentRole::PatternAnalyst, in);
  const auto plan = gw.complete(AgentRole::Planner, {{"patch", in["patch"]}, {"pattern", pattern}});
  std::string text = extract_checker_text(
      gw.complete(AgentRole::Implementer, {{"patch", in["patch"]}, {"pattern", pattern}, {"plan", plan}}));
  auto parsed = cdsl::parse_checker(text);
  ASSERT_FALSE(parsed.ok());
  int rounds = 0;
  while (!parsed.ok() && rounds < 5) {
    ++rounds;
    text = extract_checker_text(gw.complete(
        AgentRole::SyntaxRepairer, {{"checker", text}, {"diagnostics", parsed.error_text()},
                                    {"repair", std::to_string(rounds)}}));
    parsed = cdsl::parse_checker(text);
  }
  ASSERT_TRUE(parsed.ok()) << text;
  EXPECT_EQ(rounds, 2);
  EXPECT_EQ(static_cast<ScriptedProvider &>(gw.provider()).faults_remaining(), 0);
  EXPECT_EQ(*parsed.program,
            *cdsl::parse_checker(find_exemplar(BugCategory::NullPointerDereference)->checker).program);
}

TEST(Responses, ExtractCheckerText) {
  EXPECT_EQ(extract_checker_text("Here:\n```cdsl\nchecker a {}\n```\nthanks"), "checker a {}\n");
  EXPECT_EQ(extract_checker_text("checker a {}\n"), "checker a {}\n");
}

TEST(Responses, ParsePatternText) {
  const auto f = parse_pattern_text(
      "Category: Double-Free\nCallees: kfree, vfree\nPattern: freed twice\nScope: all\n");
  EXPECT_EQ(f.category, BugCategory::DoubleFree);
  EXPECT_EQ(f.callees, (std::vector<std::string>{"kfree", "vfree"}));
  EXPECT_EQ(f.narrative, "freed twice");
  EXPECT_EQ(f.scope, "all");
}

TEST(Replay, AnswersInOrderThenRepeats) {
  testing::TempDir tmp("replay");
  const auto bundle = render_prompt(AgentRole::Refiner, {{"checker", "c"}, {"fp_cases", "f"}});
  {
    std::ofstream out(tmp.path() / "c.jsonl");
    for (const char *r : {"first", "second"}) {
      out << nlohmann::json{{"digest", bundle.inputs_digest}, {"role", "Refiner"}, {"response", r}}.dump()
          << "\n";
    }
  }
  ReplayProvider replay(tmp.path() / "c.jsonl");
  EXPECT_EQ(replay.complete(bundle), "first");
  EXPECT_EQ(replay.complete(bundle), "second");
  EXPECT_EQ(replay.complete(bundle), "second");
  const auto other = render_prompt(AgentRole::Refiner, {{"checker", "d"}, {"fp_cases", "f"}});
  EXPECT_THROW(replay.complete(other), CassetteMiss);
}

TEST(Replay, MissingOrBrokenCassette) {
  testing::TempDir tmp("cassette");
  EXPECT_THROW(ReplayProvider(tmp.path() / "none.jsonl"), FileNotFound);
  write_file(tmp.path() / "bad.jsonl", "{not json\n");
  EXPECT_THROW(ReplayProvider(tmp.path() / "bad.jsonl"), ConfigError);
}

TEST(Replay, RecordThenReplayMatches) {
  testing::TempDir tmp("record");
  const auto cassette = tmp.path() / "run.jsonl";
  const auto in = analyst_inputs("ubi");
  Gateway rec(std::make_shared<RecordingProvider>(std::make_shared<ScriptedProvider>(), cassette),
              std::make_shared<Transcript>(tmp.path() / "transcript.jsonl"));
  const auto recorded = rec.complete(AgentRole::PatternAnalyst, in);
  Gateway rep(std::make_shared<ReplayProvider>(cassette), std::make_shared<Transcript>());
  EXPECT_EQ(rep.complete(AgentRole::PatternAnalyst, in), recorded);
  EXPECT_EQ(rec.transcript().size(), 1u);
  const auto lines = split_lines(read_file(tmp.path() / "transcript.jsonl"));
  ASSERT_EQ(lines.size(), 1u);
  const auto j = nlohmann::json::parse(lines[0]);
  EXPECT_EQ(j["role"], "PatternAnalyst");
  EXPECT_EQ(j["response"], recorded);
  EXPECT_EQ(j["provider"], "scripted");
}

TEST(Live, UnreachableEndpoint) {
  LiveProvider live({"http://127.0.0.1:9/v1/chat/completions", "m", "k", 2});
  const auto bundle = render_prompt(AgentRole::Refiner, {{"checker", "c"}, {"fp_cases", "f"}});
  EXPECT_THROW(live.complete(bundle), ProviderUnavailable);
}

}  // namespace
}  // namespace kf::llm
