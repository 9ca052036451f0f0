#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bongard/harness/report.hpp"
#include "bongard/harness/runner.hpp"
#include "support.hpp"

using namespace bongard;
using testsupport::TempDir;

namespace {

// Writes a runnable spec with scripted endpoints into dir and returns its path.
std::filesystem::path write_spec(const std::filesystem::path& dir, int problems, int direct_replies,
                                 int judge_replies_each, std::uint64_t seed = 7) {
  core::DatasetManifest manifest = testsupport::make_manifest(dir / "images", problems);
  core::save_manifest(manifest, dir / "manifest.json");

  nlohmann::ordered_json spec;
  spec["manifest"] = "manifest.json";
  nlohmann::ordered_json solver;
  solver["tag"] = "solver";
  solver["kind"] = "scripted";
  nlohmann::ordered_json script = nlohmann::ordered_json::array();
  for (int i = 0; i < direct_replies; ++i) script.push_back("answer for call " + std::to_string(i));
  solver["script"] = script;
  spec["solvers"] = nlohmann::ordered_json::array({solver});
  nlohmann::ordered_json judges = nlohmann::ordered_json::array();
  for (int j = 0; j < 4; ++j) {
    nlohmann::ordered_json judge_ep;
    judge_ep["tag"] = "judge" + std::to_string(j);
    judge_ep["kind"] = "scripted";
    nlohmann::ordered_json jscript = nlohmann::ordered_json::array();
    for (int i = 0; i < judge_replies_each; ++i) jscript.push_back(j < 2 ? "OK" : "WRONG");
    judge_ep["script"] = jscript;
    judges.push_back(judge_ep);
  }
  spec["judges"] = judges;
  spec["strategies"] = nlohmann::ordered_json::array({"direct"});
  spec["seed"] = seed;
  spec["cache_dir"] = "cache";
  spec["output_dir"] = "out";
  spec["layout"] = {{"panel_w", 12}, {"panel_h", 12}, {"gutter", 0}, {"separator_w", 2}};
  std::filesystem::path path = dir / "spec.json";
  core::write_file_text(path, spec.dump(2));
  return path;
}

struct RunParts {
  harness::RunSpec spec;
  core::DatasetManifest manifest;
  std::unique_ptr<gateway::Gateway> gw;
  std::unique_ptr<harness::ResultsStore> store;
};

RunParts open_parts(const std::filesystem::path& spec_path) {
  RunParts parts{harness::RunSpec::load(spec_path), {}, nullptr, nullptr};
  parts.manifest = core::load_manifest(parts.spec.manifest_path);
  gateway::Gateway::Options options;
  options.cache_dir = parts.spec.cache_dir;
  parts.gw = std::make_unique<gateway::Gateway>(options);
  for (const auto& ep : parts.spec.solvers) parts.gw->register_endpoint(ep);
  for (const auto& ep : parts.spec.judges) parts.gw->register_endpoint(ep);
  std::filesystem::create_directories(parts.spec.output_dir);
  parts.store = std::make_unique<harness::ResultsStore>(parts.spec.output_dir / "results.jsonl");
  return parts;
}

// Results stream with volatile fields (timestamps, wall clock) removed.
std::string canonical_results(const std::filesystem::path& path) {
  std::string out;
  for (auto& r : harness::ResultsStore::read_all(path)) {
    nlohmann::ordered_json j = harness::record_to_json(r);
    j.erase("ts");
    if (j["payload"].contains("wall_ms")) j["payload"].erase("wall_ms");
    out += j.dump() + "\n";
  }
  return out;
}

harness::ResultRecord verdict_record(const std::string& problem, const std::string& model,
                                     const std::string& strategy_name, bool correct,
                                     const std::string& dataset = "synthetic") {
  harness::ResultRecord r;
  r.run_id = "fixture";
  r.problem_id = problem;
  r.dataset = dataset;
  r.model = model;
  r.workload = "verdict:" + strategy_name;
  r.payload = {{"kind", "verdict"}, {"strategy", strategy_name}, {"correct", correct},
               {"threshold", 2},   {"incomplete", false}};
  return r;
}

}  // namespace

TEST_CASE("solve records one outcome per problem and resumes for free") {
  TempDir dir("runner");
  std::filesystem::path spec_path = write_spec(dir.path, 2, 2, 0);
  {
    RunParts parts = open_parts(spec_path);
    harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
    CHECK(runner.solve({strategy::StrategyKind::Direct}));
    CHECK(parts.store->appended() == 2);
    CHECK(parts.gw->scripted("solver")->calls() == 2);
    CHECK(parts.gw->scripted("solver")->remaining() == 0);
  }
  {
    // resume: same spec, fresh process state; nothing new happens
    RunParts parts = open_parts(spec_path);
    harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
    CHECK(runner.solve({strategy::StrategyKind::Direct}));
    CHECK(parts.store->appended() == 0);
    CHECK(parts.gw->scripted("solver")->calls() == 0);
  }
  auto records = harness::ResultsStore::read_all(dir.path / "out/results.jsonl");
  REQUIRE(records.size() == 2);
  CHECK(records[0].workload == "strategy:direct");
  CHECK(records[0].payload.at("call_count") == 1);
}

TEST_CASE("judging adds one verdict per recorded answer") {
  TempDir dir("judge-flow");
  std::filesystem::path spec_path = write_spec(dir.path, 2, 2, 2);
  RunParts parts = open_parts(spec_path);
  harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
  REQUIRE(runner.solve({strategy::StrategyKind::Direct}));
  REQUIRE(runner.judge_answers());
  auto records = harness::ResultsStore::read_all(parts.store->path());
  REQUIRE(records.size() == 4);
  int verdicts = 0;
  for (const auto& r : records)
    if (r.workload == "verdict:direct") {
      ++verdicts;
      CHECK(r.payload.at("correct") == true);  // 2 OK of 4 judges
      CHECK(r.payload.at("votes").size() == 4);
    }
  CHECK(verdicts == 2);

  // a second pass finds nothing left to judge
  harness::Runner again(*parts.gw, parts.spec, parts.manifest, *parts.store);
  CHECK(again.judge_answers());
  CHECK(harness::ResultsStore::read_all(parts.store->path()).size() == 4);
}

TEST_CASE("missing manifest is a ConfigError") {
  TempDir dir("noman");
  nlohmann::ordered_json spec;
  spec["manifest"] = "nope.json";
  spec["settings"] = nlohmann::ordered_json::array({"ground_truth"});
  core::write_file_text(dir.path / "spec.json", spec.dump());
  harness::RunSpec loaded = harness::RunSpec::load(dir.path / "spec.json");
  CHECK_THROWS_AS(core::load_manifest(loaded.manifest_path), core::ConfigError);
}

TEST_CASE("run spec validation catches empty and inconsistent selections") {
  TempDir dir("spec-val");
  core::write_file_text(dir.path / "m.json", "{\"problems\": []}");
  nlohmann::ordered_json spec;
  spec["manifest"] = "m.json";
  core::write_file_text(dir.path / "spec.json", spec.dump());
  CHECK_THROWS_AS(harness::RunSpec::load(dir.path / "spec.json"), core::ConfigError);

  spec["strategies"] = nlohmann::ordered_json::array({"direct"});
  core::write_file_text(dir.path / "spec.json", spec.dump());
  CHECK_THROWS_AS(harness::RunSpec::load(dir.path / "spec.json"), core::ConfigError);

  spec["judges"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"tag", "j"}, {"kind", "scripted"}}});
  core::write_file_text(dir.path / "spec.json", spec.dump());
  CHECK(harness::RunSpec::load(dir.path / "spec.json").run_id.size() == 12);

  spec["settings"] = nlohmann::ordered_json::array({"sideways"});
  core::write_file_text(dir.path / "spec.json", spec.dump());
  CHECK_THROWS_AS(harness::RunSpec::load(dir.path / "spec.json"), core::ConfigError);
}

TEST_CASE("classification via per-problem scripts works end to end") {
  TempDir dir("classify2");
  core::DatasetManifest manifest = testsupport::make_manifest(dir.path / "images", 2);
  core::save_manifest(manifest, dir.path / "manifest.json");
  nlohmann::ordered_json spec;
  spec["manifest"] = "manifest.json";
  nlohmann::ordered_json solver;
  solver["tag"] = "solver";
  solver["kind"] = "scripted";
  // per problem: ground_truth reply, incorrect_label reply, sides reply
  // (the sides reply names the PRESENTED slots, so it must honor the seeded shuffle)
  nlohmann::ordered_json script = nlohmann::ordered_json::array();
  for (int p = 1; p <= 2; ++p) {
    script.push_back("OK");
    script.push_back("WRONG");
    std::mt19937_64 rng(harness::derive_seed(11, std::to_string(p), "sides"));
    bool swap = (rng() & 1) != 0;
    script.push_back(swap ? R"({"first": {"answer": "RIGHT"}, "second": {"answer": "LEFT"}})"
                          : R"({"first": {"answer": "LEFT"}, "second": {"answer": "RIGHT"}})");
  }
  solver["script"] = script;
  spec["solvers"] = nlohmann::ordered_json::array({solver});
  spec["settings"] =
      nlohmann::ordered_json::array({"ground_truth", "incorrect_label", "images_to_sides"});
  spec["output_dir"] = "out";
  spec["seed"] = 11;
  spec["layout"] = {{"panel_w", 10}, {"panel_h", 10}, {"gutter", 0}, {"separator_w", 1}};
  core::write_file_text(dir.path / "spec.json", spec.dump(2));

  RunParts parts = open_parts(dir.path / "spec.json");
  harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
  REQUIRE(runner.classify({"ground_truth", "incorrect_label", "images_to_sides"}));
  auto records = harness::ResultsStore::read_all(parts.store->path());
  REQUIRE(records.size() == 6);
  int correct = 0;
  for (const auto& r : records) {
    if (r.workload == "classify:ground_truth") {
      CHECK(r.payload.at("correct") == true);
      ++correct;
    } else if (r.workload == "classify:incorrect_label") {
      CHECK(r.payload.at("correct") == true);  // expected wrong, model said WRONG
      CHECK(r.payload.at("candidate_source_id") != r.problem_id);
    } else {
      CHECK(r.payload.at("solved") == true);
    }
  }
  CHECK(correct == 2);
}

TEST_CASE("re-running a workload is byte-identical and backend-free") {
  TempDir dir("det-run");
  std::filesystem::path spec_path = write_spec(dir.path, 2, 2, 2);
  std::string first;
  for (int round = 0; round < 2; ++round) {
    if (round == 1) std::filesystem::remove(dir.path / "out/results.jsonl");
    RunParts parts = open_parts(spec_path);
    harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
    REQUIRE(runner.solve({strategy::StrategyKind::Direct}));
    REQUIRE(runner.judge_answers());
    std::string canon = canonical_results(parts.store->path());
    if (round == 0) {
      first = canon;
      CHECK(!first.empty());
    } else {
      CHECK(canon == first);  // byte-identical modulo the stripped timestamps
      CHECK(parts.gw->scripted("solver")->calls() == 0);
      for (int j = 0; j < 4; ++j) CHECK(parts.gw->scripted("judge" + std::to_string(j))->calls() == 0);
    }
  }
}

namespace {

// Deterministic request-addressed solver: the reply is a function of the
// matrix image, the way a temperature-0 model would behave. Positional
// scripts cannot model resumption, which restarts the process.
std::shared_ptr<gateway::FunctionBackend> digest_solver() {
  return std::make_shared<gateway::FunctionBackend>([](const gateway::TransportRequest& req) {
    return "answer keyed to " + req.message.image_digests().at(0).substr(0, 8);
  });
}

RunParts open_parts_with_function_solver(const std::filesystem::path& spec_path) {
  RunParts parts{harness::RunSpec::load(spec_path), {}, nullptr, nullptr};
  parts.manifest = core::load_manifest(parts.spec.manifest_path);
  gateway::Gateway::Options options;
  options.cache_dir = parts.spec.cache_dir;
  parts.gw = std::make_unique<gateway::Gateway>(options);
  for (const auto& ep : parts.spec.solvers) parts.gw->register_backend(ep, digest_solver());
  for (const auto& ep : parts.spec.judges) parts.gw->register_endpoint(ep);
  std::filesystem::create_directories(parts.spec.output_dir);
  parts.store = std::make_unique<harness::ResultsStore>(parts.spec.output_dir / "results.jsonl");
  return parts;
}

}  // namespace

TEST_CASE("interrupted runs converge to the uninterrupted record set") {
  TempDir dir("resume");
  std::filesystem::path spec_path = write_spec(dir.path, 3, 0, 0);

  // uninterrupted reference run in a sibling directory (identical panel
  // bytes, so the request-addressed replies match across directories)
  TempDir ref_dir("resume-ref");
  std::filesystem::path ref_spec = write_spec(ref_dir.path, 3, 0, 0);
  {
    RunParts parts = open_parts_with_function_solver(ref_spec);
    harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
    REQUIRE(runner.solve({strategy::StrategyKind::Direct}));
  }
  auto reference = harness::ResultsStore::read_all(ref_dir.path / "out/results.jsonl");

  {
    RunParts parts = open_parts_with_function_solver(spec_path);
    harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
    runner.set_max_new_records(1);
    harness::PartialRunMarker marker(parts.store->path());
    CHECK(!runner.solve({strategy::StrategyKind::Direct}));  // interrupted
    CHECK(std::filesystem::exists(dir.path / "out/results.jsonl.partial"));
  }
  {
    RunParts parts = open_parts_with_function_solver(spec_path);
    harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
    harness::PartialRunMarker marker(parts.store->path());
    CHECK(runner.solve({strategy::StrategyKind::Direct}));
    marker.complete();
    CHECK(!std::filesystem::exists(dir.path / "out/results.jsonl.partial"));
  }
  auto resumed = harness::ResultsStore::read_all(dir.path / "out/results.jsonl");
  REQUIRE(resumed.size() == reference.size());
  for (std::size_t i = 0; i < resumed.size(); ++i) {
    CHECK(resumed[i].problem_id == reference[i].problem_id);
    CHECK(resumed[i].workload == reference[i].workload);
    CHECK(resumed[i].payload.at("final_answer") == reference[i].payload.at("final_answer"));
  }
}

TEST_CASE("aggregate table counts correct outcomes per cell") {
  std::vector<harness::ResultRecord> records;
  for (int i = 0; i < 20; ++i)
    records.push_back(verdict_record(std::to_string(i), "model-a", "direct", i < 17));
  for (int i = 0; i < 20; ++i)
    records.push_back(verdict_record(std::to_string(i), "model-b", "direct", i < 6));
  harness::ResultRecord label;
  label.problem_id = "1";
  label.dataset = "synthetic";
  label.model = "model-a";
  label.workload = "classify:ground_truth";
  label.payload = {{"kind", "label_check"}, {"correct", true}};
  records.push_back(label);

  harness::AggregateTable table = harness::aggregate_table(records);
  std::string csv = table.csv();
  CHECK(csv.find("dataset,workload,model-a,model-b") == 0);
  CHECK(csv.find("synthetic,ground_truth,1,") != std::string::npos);
  CHECK(csv.find("synthetic,direct,17,6") != std::string::npos);
  // ground_truth has no model-b outcomes: flagged as incomplete
  REQUIRE(!table.warnings.empty());
  CHECK(table.warnings[0].find("model-b") != std::string::npos);

  CHECK(harness::aggregate_table({}).csv() == "dataset,workload\n");
}

TEST_CASE("incomplete verdicts never reach the aggregates") {
  auto r = verdict_record("1", "m", "direct", true);
  r.payload["incomplete"] = true;
  harness::AggregateTable table = harness::aggregate_table({r});
  CHECK(table.cells.empty());
}

TEST_CASE("coverage: disjoint strategy wins union as expected") {
  std::vector<harness::ResultRecord> records;
  for (int i = 0; i < 10; ++i)
    records.push_back(verdict_record("d" + std::to_string(i), "m", "descriptive", true));
  for (int i = 0; i < 10; ++i)
    records.push_back(verdict_record("c" + std::to_string(i), "m", "contrastive", true));
  harness::CoverageMap map = harness::coverage_map(records, harness::CoverageGrouping::Strategy);
  CHECK(map.union_count == 20);
  CHECK(map.groups == std::vector<std::string>{"descriptive", "contrastive"});

  harness::CoverageMap single =
      harness::coverage_map({verdict_record("1", "m", "direct", true)}, harness::CoverageGrouping::All);
  CHECK(single.union_count == 1);
  CHECK(single.groups == std::vector<std::string>{"any"});
  CHECK(single.csv() == "problem_id,any\n1,1\n");

  // unsolved problems stay in the grid with empty rows
  auto unsolved = verdict_record("zz", "m", "direct", false);
  harness::CoverageMap with_miss =
      harness::coverage_map({unsolved}, harness::CoverageGrouping::Strategy);
  CHECK(with_miss.union_count == 0);
  CHECK(with_miss.problem_ids == std::vector<std::string>{"zz"});
  CHECK(with_miss.csv().find("zz,0,0") != std::string::npos);
}

TEST_CASE("coverage grouping folds strategies into families") {
  std::vector<harness::ResultRecord> records = {
      verdict_record("1", "m", "descriptive-iterative", true),
      verdict_record("2", "m", "contrastive-direct", true),
      verdict_record("3", "m", "direct", true),
  };
  harness::CoverageMap map = harness::coverage_map(records, harness::CoverageGrouping::StrategyGroup);
  CHECK(map.groups == std::vector<std::string>{"direct", "descriptive", "contrastive"});
  CHECK(map.solved_by.at("1").contains("descriptive"));
  CHECK(map.solved_by.at("2").contains("contrastive"));
}

TEST_CASE("category heatmap: signed common-minus-uncommon similarity") {
  harness::CategoryIndex index = {
      {"a", {"x", "y"}},
      {"b", {"x", "y"}},
      {"c", {"p"}},
  };
  harness::Heatmap map = harness::category_heatmap(index, {"a", "b", "c"});
  CHECK(map.matrix[0][1] == 2);   // identical sets of size 2
  CHECK(map.matrix[0][2] == -3);  // disjoint {x,y} vs {p}
  CHECK(map.matrix[0][0] == 2);   // diagonal = +|cat|
  CHECK(map.matrix[2][2] == 1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(map.matrix[i][j] == map.matrix[j][i]);

  harness::CategoryIndex tiny = {{"a", {"x"}}, {"b", {"y"}}};
  CHECK(harness::category_heatmap(tiny, {"a", "b"}).matrix[0][1] == -2);

  CHECK_THROWS_AS(harness::category_heatmap(tiny, {"a", "zz"}), core::MissingCategoryError);
}

TEST_CASE("committed category fixture reaches a -14 cell") {
  harness::CategoryIndex index =
      harness::load_category_index(std::string(BONGARD_FIXTURES_DIR) + "/category_index.json");
  std::vector<std::string> ids;
  for (const auto& [id, tags] : index) ids.push_back(id);
  harness::Heatmap map = harness::category_heatmap(index, ids);
  CHECK(map.min_value == -14);
  std::string csv = map.csv();
  CHECK(csv.find("-14") != std::string::npos);
}

TEST_CASE("rendered artifacts are valid PNGs sized to the data") {
  harness::CoverageMap map;
  map.groups = {"direct"};
  map.problem_ids = {"1", "2"};
  map.solved_by["1"].insert("direct");
  auto png = harness::render_coverage_png(map, 10);
  core::Raster img = core::decode_png(png);
  CHECK(img.width == 21);
  CHECK(img.height == 21);

  harness::CategoryIndex index = {{"a", {"x"}}, {"b", {"y"}}};
  harness::Heatmap heat = harness::category_heatmap(index, {"a", "b"});
  auto heat_png = harness::render_heatmap_png(heat, 4);
  core::Raster heat_img = core::decode_png(heat_png);
  CHECK(heat_img.width == 8);
}

// --- CLI end-to-end ----------------------------------------------------------

namespace {

int run_cli(const std::vector<std::string>& args, const std::filesystem::path& cwd,
            std::string* output = nullptr) {
  std::string cmd = "cd " + cwd.string() + " && " + std::string(BONGARD_CLI_PATH);
  for (const auto& a : args) cmd += " " + a;
  cmd += " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[512];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  int status = pclose(pipe);
  if (output) *output = out;
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli: solve, judge, and report run end to end") {
  TempDir dir("cli");
  write_spec(dir.path, 2, 2, 2);

  std::string out;
  CHECK(run_cli({"solve", "--spec", "spec.json"}, dir.path, &out) == 0);
  INFO(out);
  CHECK(out.find("run complete: 2 new records") != std::string::npos);
  CHECK(std::filesystem::exists(dir.path / "out/results.jsonl"));
  CHECK(!std::filesystem::exists(dir.path / "out/results.jsonl.partial"));

  CHECK(run_cli({"judge", "--spec", "spec.json"}, dir.path, &out) == 0);
  CHECK(out.find("run complete: 2 new records") != std::string::npos);

  CHECK(run_cli({"report", "--records", "out/results.jsonl", "--table", "table.csv", "--coverage",
                 "cov.csv", "--group-by", "all", "--png", "cov.png"},
                dir.path, &out) == 0);
  CHECK(out.find("problems solved by any group: 2") != std::string::npos);
  std::string csv = core::read_file_text(dir.path / "table.csv");
  CHECK(csv.find("synthetic,direct,2") != std::string::npos);
  core::Raster grid = core::decode_png(core::read_file_bytes(dir.path / "cov.png"));
  CHECK(grid.height > 0);

  // resume: a second solve performs no new work and exits cleanly
  CHECK(run_cli({"solve", "--spec", "spec.json"}, dir.path, &out) == 0);
  CHECK(out.find("run complete: 0 new records") != std::string::npos);
}

TEST_CASE("cli: config errors exit 1, exhausted scripts exit 2") {
  TempDir dir("cli-err");
  std::string out;
  CHECK(run_cli({"solve", "--spec", "missing.json"}, dir.path, &out) == 1);
  CHECK(out.find("config error") != std::string::npos);

  write_spec(dir.path, 2, 1, 0);  // one reply for two problems
  int code = run_cli({"solve", "--spec", "spec.json"}, dir.path, &out);
  CHECK(code == 2);
  CHECK(std::filesystem::exists(dir.path / "out/results.jsonl.partial"));
}

TEST_CASE("cli: forge against a fixture directory emits manifest and report") {
  TempDir dir("cli-forge");
  core::DatasetManifest sources;
  sources.name = "concepts";
  sources.problems.push_back(testsupport::make_problem(dir.path / "img", "3", 30));
  core::save_manifest(sources, dir.path / "concepts.json");

  // fixture search directory: shared pool, enough distinct images for all queries
  std::filesystem::create_directories(dir.path / "pool");
  for (int i = 0; i < 26; ++i)
    core::write_file_bytes(dir.path / "pool" / (std::string(1, static_cast<char>('a' + i)) + ".png"),
                           testsupport::tiny_png(9000 + i));

  nlohmann::ordered_json spec;
  spec["manifest"] = "concepts.json";
  nlohmann::ordered_json translator;
  translator["tag"] = "translator";
  translator["kind"] = "scripted";
  nlohmann::ordered_json tr = nlohmann::ordered_json::array();
  tr.push_back({{"left", {{"concept", "pyramids"}}}, {"right", {{"concept", "towers"}}}});
  tr.push_back({{"left", {{"concept", "hills"}}}, {"right", {{"concept", "valleys"}}}});
  tr.push_back({{"left", {{"concept", "loops"}}}, {"right", {{"concept", "lines"}}}});
  translator["script"] = nlohmann::ordered_json::array({tr.dump()});
  nlohmann::ordered_json filter;
  filter["tag"] = "filter";
  filter["kind"] = "scripted";
  nlohmann::ordered_json fscript = nlohmann::ordered_json::array();
  for (int i = 0; i < 12; ++i) fscript.push_back("EVALUATION: OK\nEXPLANATION: fits");
  filter["script"] = fscript;
  spec["solvers"] = nlohmann::ordered_json::array({translator, filter});
  spec["judges"] = nlohmann::ordered_json::array();
  spec["output_dir"] = "out";
  spec["forge"] = {{"params", {{"images_per_side", 15}, {"translations", 3}, {"required", 3}}},
                   {"translate", "translator"},
                   {"filter", "filter"},
                   {"search_dir", "pool"},
                   {"staging", "staging"}};
  core::write_file_text(dir.path / "spec.json", spec.dump(2));

  std::string out;
  int code = run_cli({"forge", "--spec", "spec.json"}, dir.path, &out);
  INFO(out);
  CHECK(code == 0);
  CHECK(out.find("forged 1 instances") != std::string::npos);
  core::DatasetManifest forged = core::load_manifest(dir.path / "out/rwr_manifest.json");
  REQUIRE(forged.problems.size() == 1);
  CHECK(forged.problems[0].dataset == core::DatasetKind::RWR);
  CHECK(forged.problems[0].left.size() == 6);
  CHECK(std::filesystem::exists(dir.path / "out/forge_report.json"));
}

TEST_CASE("a concurrent worker pool yields the full record set") {
  TempDir dir("pool");
  core::DatasetManifest manifest = testsupport::make_manifest(dir.path / "images", 6);
  core::save_manifest(manifest, dir.path / "manifest.json");
  nlohmann::ordered_json spec_json;
  spec_json["manifest"] = "manifest.json";
  spec_json["solvers"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"tag", "solver"}, {"kind", "scripted"}}});
  spec_json["judges"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"tag", "j"}, {"kind", "scripted"}}});
  spec_json["strategies"] = nlohmann::ordered_json::array({"direct"});
  spec_json["output_dir"] = "out";
  spec_json["concurrency"] = 3;
  spec_json["layout"] = {{"panel_w", 10}, {"panel_h", 10}, {"gutter", 0}, {"separator_w", 1}};
  core::write_file_text(dir.path / "spec.json", spec_json.dump());

  RunParts parts = open_parts_with_function_solver(dir.path / "spec.json");
  harness::Runner runner(*parts.gw, parts.spec, parts.manifest, *parts.store);
  REQUIRE(runner.solve({strategy::StrategyKind::Direct}));
  auto records = harness::ResultsStore::read_all(parts.store->path());
  REQUIRE(records.size() == 6);
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.problem_id);
  CHECK(ids.size() == 6);
}

TEST_CASE("consensus csv aggregates recorded votes per model and strategy") {
  std::vector<harness::ResultRecord> records;
  for (int p = 1; p <= 10; ++p) {
    harness::ResultRecord r;
    r.problem_id = std::to_string(p);
    r.dataset = "synthetic";
    r.model = "m";
    r.workload = "verdict:direct";
    nlohmann::ordered_json votes = nlohmann::ordered_json::array();
    for (int j = 0; j < 4; ++j) {
      bool ok = p <= 8 ? true : j < 2;  // 8 unanimous, 2 split
      votes.push_back({{"judge", "j" + std::to_string(j)},
                       {"parsed", ok ? "ok" : "wrong"},
                       {"raw", ok ? "OK" : "WRONG"}});
    }
    r.payload = {{"kind", "verdict"}, {"strategy", "direct"}, {"correct", true},
                 {"threshold", 2},   {"incomplete", false},  {"votes", votes}};
    records.push_back(std::move(r));
  }
  std::string csv = harness::consensus_csv(records);
  CHECK(csv.find("model,workload,items,unanimity") == 0);
  CHECK(csv.find("m,direct,10,0.8000") != std::string::npos);

  std::map<std::string, bool> gold;
  for (int p = 1; p <= 10; ++p) gold[std::to_string(p)] = p != 10;
  std::string with_gold = harness::consensus_csv(records, &gold);
  // voting says correct on all 10; gold disagrees once
  CHECK(with_gold.find(",0.9000\n") != std::string::npos);
}

TEST_CASE("manual gold loader enforces the documented shape") {
  TempDir dir("gold");
  core::write_file_text(dir.path / "gold.json", R"({"1": true, "2": false})");
  auto gold = judge::load_manual_gold(dir.path / "gold.json");
  CHECK(gold.at("1"));
  CHECK(!gold.at("2"));
  core::write_file_text(dir.path / "bad.json", "[1,2]");
  CHECK_THROWS_AS(judge::load_manual_gold(dir.path / "bad.json"), core::SchemaError);
}
