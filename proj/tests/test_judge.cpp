#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bongard/judge/ensemble.hpp"
#include "support.hpp"

using namespace bongard;

namespace {

const core::ConceptLabel kLabels{"One line.", "Two lines."};

void register_judges(gateway::Gateway& gw, const std::vector<std::string>& replies) {
  for (std::size_t i = 0; i < replies.size(); ++i)
    gw.register_endpoint(gateway::scripted_endpoint("j" + std::to_string(i),
                                                    std::vector<std::string>{replies[i]}));
}

std::vector<std::string> tags(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("j" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("judge replies parse: OK, WRONG, and mixed garbage") {
  prompts::PromptCatalog catalog;
  gateway::Gateway gw;
  register_judges(gw, {"EVALUATION: OK", "WRONG", "OK but WRONG"});
  auto v0 = judge::judge_answer(gw, "answer", kLabels, "j0", judge::JudgeVariant::Final, catalog);
  CHECK(v0.parsed == eval::OkWrong::Ok);
  auto v1 = judge::judge_answer(gw, "answer", kLabels, "j1", judge::JudgeVariant::Final, catalog);
  CHECK(v1.parsed == eval::OkWrong::Wrong);
  auto v2 = judge::judge_answer(gw, "answer", kLabels, "j2", judge::JudgeVariant::Final, catalog);
  CHECK(v2.parsed == eval::OkWrong::Unparseable);
}

TEST_CASE("judging is text-only and fills the template slots") {
  prompts::PromptCatalog catalog;
  gateway::Gateway gw;
  register_judges(gw, {"OK"});
  judge::judge_answer(gw, "the model answer", kLabels, "j0", judge::JudgeVariant::Final, catalog);
  auto log = gw.scripted("j0")->log();
  REQUIRE(log.size() == 1);
  CHECK(log[0].request.message.image_count() == 0);
  CHECK(log[0].request.history.empty());
  std::string text = log[0].request.message.text();
  CHECK(text.find("One line.") != std::string::npos);
  CHECK(text.find("Two lines.") != std::string::npos);
  CHECK(text.find("the model answer") != std::string::npos);
  CHECK(text.find("strictly logically match the labels") != std::string::npos);
}

TEST_CASE("variant swap changes only the template text") {
  prompts::PromptCatalog catalog;
  CHECK(catalog.get("judge_final").find("strictly logically match the labels") != std::string::npos);
  CHECK(catalog.get("judge_initial").find("strictly logically") == std::string::npos);

  gateway::Gateway gw;
  register_judges(gw, {"OK", "OK"});
  judge::judge_answer(gw, "a", kLabels, "j0", judge::JudgeVariant::Initial, catalog);
  judge::judge_answer(gw, "a", kLabels, "j1", judge::JudgeVariant::Final, catalog);
  auto initial_log = gw.scripted("j0")->log();
  auto final_log = gw.scripted("j1")->log();
  CHECK(initial_log[0].request.message.image_count() == 0);
  CHECK(final_log[0].request.message.image_count() == 0);
  CHECK(initial_log[0].request.message.text() != final_log[0].request.message.text());
  CHECK(initial_log[0].request.message.text().find("FIRST EXAMPLE") == std::string::npos);
  CHECK(final_log[0].request.message.text().find("FIRST EXAMPLE") != std::string::npos);
}

TEST_CASE("empty answers are rejected before any call") {
  prompts::PromptCatalog catalog;
  gateway::Gateway gw;
  register_judges(gw, {"OK"});
  CHECK_THROWS_AS(judge::judge_answer(gw, "", kLabels, "j0", judge::JudgeVariant::Final, catalog),
                  core::EmptyAnswerError);
  CHECK(gw.scripted("j0")->calls() == 0);
}

TEST_CASE("hard voting: two of four suffices") {
  prompts::PromptCatalog catalog;
  gateway::Gateway gw;
  register_judges(gw, {"OK", "OK", "WRONG", "WRONG"});
  auto verdict =
      judge::ensemble_verdict(gw, "answer", kLabels, tags(4), judge::JudgeVariant::Final, catalog);
  CHECK(verdict.correct);
  CHECK(verdict.ok_votes() == 2);
  CHECK(!verdict.incomplete);
  REQUIRE(verdict.votes.size() == 4);
}

TEST_CASE("all-wrong votes lose; unparseable counts as not-OK") {
  prompts::PromptCatalog catalog;
  gateway::Gateway all_wrong;
  register_judges(all_wrong, {"WRONG", "WRONG", "WRONG", "WRONG"});
  CHECK(!judge::ensemble_verdict(all_wrong, "a", kLabels, tags(4), judge::JudgeVariant::Final, catalog)
             .correct);

  gateway::Gateway mixed;
  register_judges(mixed, {"OK", "gibberish", "gibberish", "WRONG"});
  auto verdict =
      judge::ensemble_verdict(mixed, "a", kLabels, tags(4), judge::JudgeVariant::Final, catalog);
  CHECK(verdict.ok_votes() == 1);
  CHECK(!verdict.correct);
}

TEST_CASE("all 16 vote vectors follow popcount >= 2") {
  prompts::PromptCatalog catalog;
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<std::string> replies;
    for (int j = 0; j < 4; ++j) replies.push_back((mask >> j) & 1 ? "OK" : "WRONG");
    gateway::Gateway gw;
    register_judges(gw, replies);
    auto verdict =
        judge::ensemble_verdict(gw, "a", kLabels, tags(4), judge::JudgeVariant::Final, catalog);
    CHECK(verdict.correct == (__builtin_popcount(mask) >= 2));
  }
}

TEST_CASE("flipping any wrong vote to OK never revokes a win") {
  for (int mask = 0; mask < 16; ++mask) {
    bool before = __builtin_popcount(mask) >= 2;
    for (int j = 0; j < 4; ++j) {
      int flipped = mask | (1 << j);
      bool after = __builtin_popcount(flipped) >= 2;
      if (before) CHECK(after);
    }
  }
}

TEST_CASE("threshold is configurable and bounded by the judge count") {
  prompts::PromptCatalog catalog;
  gateway::Gateway gw;
  register_judges(gw, {"OK", "OK", "WRONG", "WRONG"});
  auto strict = judge::ensemble_verdict(gw, "a", kLabels, tags(4), judge::JudgeVariant::Final,
                                        catalog, /*threshold=*/3);
  CHECK(!strict.correct);
  gateway::Gateway gw2;
  register_judges(gw2, {"OK"});
  CHECK_THROWS_AS(judge::ensemble_verdict(gw2, "a", kLabels, tags(1), judge::JudgeVariant::Final,
                                          catalog, /*threshold=*/2),
                  core::ConfigError);
}

TEST_CASE("hard judge transport failure marks the verdict incomplete") {
  prompts::PromptCatalog catalog;
  gateway::Gateway gw;
  gateway::ScriptEntry fail;
  fail.kind = gateway::ScriptEntry::Kind::TransportError;
  for (int i = 0; i < 4; ++i) {
    gateway::ModelEndpoint ep =
        i == 2 ? gateway::scripted_endpoint("j2", std::vector<gateway::ScriptEntry>{fail})
               : gateway::scripted_endpoint("j" + std::to_string(i), std::vector<std::string>{"OK"});
    ep.params.max_retries = 0;
    gw.register_endpoint(ep);
  }
  auto verdict = judge::ensemble_verdict(gw, "a", kLabels, tags(4), judge::JudgeVariant::Final, catalog);
  CHECK(verdict.incomplete);
  CHECK(!verdict.correct);
  CHECK(verdict.votes.size() == 3);
  CHECK(verdict.failure_detail.find("j2") != std::string::npos);
}

TEST_CASE("consensus: unanimity, deviations, and manual-gold modes") {
  std::vector<std::string> judges = tags(4);
  auto item = [](const std::string& id, int ok_count) {
    judge::JudgedItem it;
    it.problem_id = id;
    for (int j = 0; j < 4; ++j)
      it.votes.push_back(j < ok_count ? eval::OkWrong::Ok : eval::OkWrong::Wrong);
    return it;
  };

  // all judges identical on every item
  std::vector<judge::JudgedItem> unanimous;
  for (int i = 0; i < 100; ++i) unanimous.push_back(item(std::to_string(i), i % 2 == 0 ? 4 : 0));
  auto all_same = judge::consensus_report(unanimous, judges);
  CHECK(all_same.unanimity_rate == doctest::Approx(1.0));
  CHECK(all_same.deviations.empty());

  // 87 unanimous of 100
  std::vector<judge::JudgedItem> mixed;
  for (int i = 0; i < 100; ++i) mixed.push_back(item(std::to_string(i), i < 87 ? 4 : 2));
  CHECK(judge::consensus_report(mixed, judges).unanimity_rate == doctest::Approx(0.87));

  // voting agrees with manual on 99 of 100
  std::map<std::string, bool> gold;
  std::vector<judge::JudgedItem> voted;
  for (int i = 0; i < 100; ++i) {
    voted.push_back(item(std::to_string(i), i % 2 == 0 ? 3 : 1));
    bool voting_outcome = i % 2 == 0;
    gold[std::to_string(i)] = i == 7 ? !voting_outcome : voting_outcome;
  }
  auto report = judge::consensus_report(voted, judges, 2, &gold);
  REQUIRE(report.voting_rate.has_value());
  CHECK(*report.voting_rate == doctest::Approx(0.99));
  CHECK(*report.all_models_rate == doctest::Approx(0.49));
  CHECK(*report.any_model_rate == doctest::Approx(0.51));

  // per-judge deviation lists name the dissenting items
  std::vector<judge::JudgedItem> dissent = {item("a", 3)};
  auto d = judge::consensus_report(dissent, judges);
  REQUIRE(d.deviations.contains("j3"));
  CHECK(d.deviations.at("j3") == std::vector<std::string>{"a"});

  // misaligned inputs are rejected
  judge::JudgedItem bad;
  bad.problem_id = "x";
  bad.votes = {eval::OkWrong::Ok};
  CHECK_THROWS_AS(judge::consensus_report({bad}, judges), core::MisalignedIdsError);
  std::map<std::string, bool> sparse_gold;
  CHECK_THROWS_AS(judge::consensus_report({item("zz", 4)}, judges, 2, &sparse_gold),
                  core::MisalignedIdsError);
}
