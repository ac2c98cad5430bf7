#include <gtest/gtest.h>

#include <map>
#include <set>
#include <tuple>

#include "kf/cdsl/program.hpp"
#include "kf/engine/engine.hpp"
#include "kf/minilang/parser.hpp"
#include "support.hpp"

namespace kf {
namespace {

using Key = std::tuple<std::string, int, int, std::string>;

std::set<Key> keys(const std::vector<engine::Report> &reports) {
  std::set<Key> out;
  for (const auto &r : reports) out.insert({r.checker, r.span.start_line, r.span.start_col, r.message});
  return out;
}

TEST(EngineOracle, GeneratedFunctionsAgree) {
  std::vector<std::shared_ptr<const engine::CheckerHooks>> hooks;
  for (const char *src : testing::kEquivalenceCheckers) {
    auto parsed = cdsl::parse_checker(src);
    ASSERT_TRUE(parsed.ok()) << parsed.error_text();
    hooks.push_back(cdsl::instantiate_hooks(*parsed.program));
  }
  engine::EngineBudget budget;
  budget.loop_unroll = 2;
  int compared = 0;
  std::map<std::string, int> reported;
  int infeasible = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    testing::FunctionGenerator gen(seed);
    const std::string text = gen.function("f");
    const auto module = minilang::parse_module(text, "gen.mc");
    const auto &fn = module.functions.front();
    const auto paths = engine::enumerate_paths_oracle(fn, budget);
    for (const auto &p : paths) infeasible += p.feasible ? 0 : 1;
    for (const auto &h : hooks) {
      const auto explored = engine::analyze_function(fn, *h, budget);
      ASSERT_FALSE(explored.truncated);
      EXPECT_EQ(keys(explored.reports), keys(engine::replay_hooks(paths, *h)))
          << "seed " << seed << "\n" << text;
      for (const auto &r : explored.reports) ++reported[r.checker];
      ++compared;
    }
  }
  EXPECT_EQ(compared, 900);
  // The comparison is only meaningful if every checker fires somewhere and
  // path pruning actually happens.
  EXPECT_GT(reported["eq_npd"], 20);
  EXPECT_GT(reported["eq_df"], 20);
  EXPECT_GT(reported["eq_ubi"], 20);
  EXPECT_GT(infeasible, 50);
}

}  // namespace
}  // namespace kf
