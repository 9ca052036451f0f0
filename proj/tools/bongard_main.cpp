#include <iostream>

#include <CLI11.hpp>

#include "bongard/bongard.hpp"

namespace {

using namespace bongard;

struct RunContext {
  harness::RunSpec spec;
  core::DatasetManifest manifest;
  std::unique_ptr<gateway::Gateway> gw;
  std::unique_ptr<harness::ResultsStore> store;
};

RunContext open_run(const std::string& spec_path) {
  RunContext ctx{harness::RunSpec::load(spec_path), {}, nullptr, nullptr};
  ctx.manifest = core::load_manifest(ctx.spec.manifest_path);
  gateway::Gateway::Options options;
  options.cache_dir = ctx.spec.cache_dir;
  options.max_in_flight = std::max(4, ctx.spec.concurrency);
  ctx.gw = std::make_unique<gateway::Gateway>(options);
  for (const auto& ep : ctx.spec.solvers) ctx.gw->register_endpoint(ep);
  for (const auto& ep : ctx.spec.judges)
    if (!ctx.gw->has_endpoint(ep.tag)) ctx.gw->register_endpoint(ep);
  std::filesystem::create_directories(ctx.spec.output_dir);
  ctx.store = std::make_unique<harness::ResultsStore>(ctx.spec.output_dir / "results.jsonl");
  return ctx;
}

void warn_unconsumed_scripts(RunContext& ctx, const std::vector<std::string>& tags) {
  for (const auto& tag : tags) {
    auto scripted = ctx.gw->scripted(tag);
    if (scripted && scripted->remaining() > 0)
      std::cerr << "warning: scripted endpoint " << tag << " has " << scripted->remaining()
                << " unconsumed replies\n";
  }
}

int finish_run(RunContext& ctx, harness::PartialRunMarker& marker, bool complete, int new_records,
               const std::vector<std::string>& used_tags) {
  warn_unconsumed_scripts(ctx, used_tags);
  if (complete) marker.complete();
  std::cout << (complete ? "run complete" : "run interrupted") << ": " << new_records
            << " new records in " << ctx.store->path().string() << "\n";
  return complete ? 0 : 3;
}

std::string canonical_setting(std::string s) {
  if (s == "gt") return "ground_truth";
  if (s == "incorrect") return "incorrect_label";
  if (s == "sides") return "images_to_sides";
  return s;
}

int run_solve(const std::string& spec_path, const std::vector<std::string>& strategy_names) {
  RunContext ctx = open_run(spec_path);
  std::vector<strategy::StrategyKind> kinds = ctx.spec.strategies;
  if (!strategy_names.empty()) {
    kinds.clear();
    for (const auto& name : strategy_names) kinds.push_back(strategy::strategy_from_string(name));
  }
  if (kinds.empty()) throw core::ConfigError("no strategies selected");
  harness::Runner runner(*ctx.gw, ctx.spec, ctx.manifest, *ctx.store);
  harness::PartialRunMarker marker(ctx.store->path());
  bool complete = runner.solve(kinds);
  return finish_run(ctx, marker, complete, ctx.store->appended(), ctx.spec.solver_tags());
}

int run_classify(const std::string& spec_path, std::vector<std::string> settings) {
  RunContext ctx = open_run(spec_path);
  for (auto& s : settings) s = canonical_setting(s);
  if (settings.empty()) settings = ctx.spec.settings;
  if (settings.empty()) throw core::ConfigError("no settings selected");
  harness::Runner runner(*ctx.gw, ctx.spec, ctx.manifest, *ctx.store);
  harness::PartialRunMarker marker(ctx.store->path());
  bool complete = runner.classify(settings);
  return finish_run(ctx, marker, complete, ctx.store->appended(), ctx.spec.solver_tags());
}

int run_judge(const std::string& spec_path, const std::string& variant, int threshold) {
  RunContext ctx = open_run(spec_path);
  if (!variant.empty()) ctx.spec.judge_variant = judge::variant_from_string(variant);
  if (threshold > 0) ctx.spec.judge_threshold = threshold;
  harness::Runner runner(*ctx.gw, ctx.spec, ctx.manifest, *ctx.store);
  harness::PartialRunMarker marker(ctx.store->path());
  bool complete = runner.judge_answers();
  return finish_run(ctx, marker, complete, ctx.store->appended(), ctx.spec.judge_tags());
}

int run_forge(const std::string& spec_path, const std::string& concepts_path) {
  harness::RunSpec spec = harness::RunSpec::load(spec_path);
  if (spec.translate_tag.empty() || spec.filter_tag.empty())
    throw core::ConfigError("forge needs translate and filter endpoint tags in the spec");
  core::DatasetManifest sources = core::load_manifest(
      concepts_path.empty() ? spec.manifest_path : std::filesystem::path(concepts_path));

  gateway::Gateway::Options options;
  options.cache_dir = spec.cache_dir;
  gateway::Gateway gw(options);
  for (const auto& ep : spec.solvers) gw.register_endpoint(ep);
  for (const auto& ep : spec.judges)
    if (!gw.has_endpoint(ep.tag)) gw.register_endpoint(ep);

  std::unique_ptr<rwr::ImageSearchClient> base_client;
  if (!spec.search_fixture_dir.empty())
    base_client = std::make_unique<rwr::DirectoryImageClient>(spec.search_fixture_dir);
  else
    base_client = std::make_unique<rwr::PexelsClient>();
  std::unique_ptr<rwr::CachingSearchClient> caching;
  rwr::ImageSearchClient* client = base_client.get();
  if (!spec.cache_dir.empty()) {
    caching = std::make_unique<rwr::CachingSearchClient>(*base_client, spec.cache_dir / "search");
    client = caching.get();
  }

  rwr::RwrForge::Config config;
  config.params = spec.rwr_params;
  config.translate_tag = spec.translate_tag;
  config.filter_tag = spec.filter_tag;
  config.staging = spec.staging_dir.empty() ? spec.output_dir / "staging" : spec.staging_dir;
  if (!spec.prompt_overrides.empty()) config.catalog.load_overrides(spec.prompt_overrides);
  std::filesystem::create_directories(config.staging);
  std::filesystem::create_directories(spec.output_dir);

  rwr::RwrForge forge(gw, *client, config);
  auto result = forge.forge_dataset(sources.problems);

  core::write_file_text(spec.output_dir / "rwr_manifest.json", result.manifest_json.dump(2) + "\n");
  core::write_file_text(spec.output_dir / "forge_report.json",
                        rwr::RwrForge::report_json(result.report).dump(2) + "\n");
  int skipped = static_cast<int>(result.report.size() - result.manifest.problems.size());
  std::cout << "forged " << result.manifest.problems.size() << " instances, skipped " << skipped
            << "; manifest and report written to " << spec.output_dir.string() << "\n";
  return 0;
}

int run_report(const std::string& records_path, const std::string& table_out,
               const std::string& coverage_out, const std::string& group_by,
               const std::string& heatmap_out, const std::string& categories_path,
               const std::string& png_out, const std::string& consensus_out,
               const std::string& gold_path) {
  auto records = harness::ResultsStore::read_all(records_path);
  if (!table_out.empty()) {
    harness::AggregateTable table = harness::aggregate_table(records);
    core::write_file_text(table_out, table.csv());
    for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "aggregate table written to " << table_out << "\n";
  }
  if (!coverage_out.empty()) {
    auto grouping = harness::grouping_from_string(group_by.empty() ? "strategy" : group_by);
    harness::CoverageMap map = harness::coverage_map(records, grouping);
    core::write_file_text(coverage_out, map.csv());
    if (!png_out.empty()) core::write_file_bytes(png_out, harness::render_coverage_png(map));
    std::cout << "coverage written to " << coverage_out << "; problems solved by any group: "
              << map.union_count << "\n";
  }
  if (!heatmap_out.empty()) {
    if (categories_path.empty()) throw core::ConfigError("--heatmap needs --categories");
    harness::CategoryIndex index = harness::load_category_index(categories_path);
    std::vector<std::string> ids;
    for (const auto& [id, tags] : index) ids.push_back(id);
    std::sort(ids.begin(), ids.end(), harness::detail::natural_less);
    harness::Heatmap map = harness::category_heatmap(index, ids);
    core::write_file_text(heatmap_out, map.csv());
    if (!png_out.empty()) core::write_file_bytes(png_out, harness::render_heatmap_png(map));
    std::cout << "heatmap written to " << heatmap_out << " (min " << map.min_value << ", max "
              << map.max_value << ")\n";
  }
  if (!consensus_out.empty()) {
    std::map<std::string, bool> gold;
    if (!gold_path.empty()) gold = judge::load_manual_gold(gold_path);
    core::write_file_text(consensus_out,
                          harness::consensus_csv(records, gold_path.empty() ? nullptr : &gold));
    std::cout << "consensus written to " << consensus_out << "\n";
  }
  if (table_out.empty() && coverage_out.empty() && heatmap_out.empty() && consensus_out.empty())
    throw core::ConfigError(
        "report needs at least one of --table/--coverage/--heatmap/--consensus");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bongard Problem evaluation harness"};
  app.require_subcommand(1);

  std::string spec_path, concepts_path, variant, records_path;
  std::string table_out, coverage_out, group_by, heatmap_out, categories_path, png_out;
  std::string consensus_out, gold_path;
  std::vector<std::string> strategy_names, settings;
  int threshold = 0;

  auto* solve = app.add_subcommand("solve", "run answer-generation strategies");
  solve->add_option("--spec", spec_path, "run spec file")->required();
  solve->add_option("--strategy", strategy_names, "strategy name (repeatable)");

  auto* classify = app.add_subcommand("classify", "run binary-classification settings");
  classify->add_option("--spec", spec_path, "run spec file")->required();
  classify->add_option("--setting", settings, "gt | incorrect | sides (repeatable)");

  auto* judge_cmd = app.add_subcommand("judge", "adjudicate recorded answers with the ensemble");
  judge_cmd->add_option("--spec", spec_path, "run spec file")->required();
  judge_cmd->add_option("--variant", variant, "initial | final");
  judge_cmd->add_option("--threshold", threshold, "OK votes needed for correct");

  auto* forge = app.add_subcommand("forge", "build real-world problem instances");
  forge->add_option("--spec", spec_path, "run spec file")->required();
  forge->add_option("--concepts", concepts_path, "source concept manifest (defaults to spec manifest)");

  auto* report = app.add_subcommand("report", "aggregate results into tables and maps");
  report->add_option("--records", records_path, "results JSONL file")->required();
  report->add_option("--table", table_out, "write the aggregate counts CSV here");
  report->add_option("--coverage", coverage_out, "write the solved-by-any CSV here");
  report->add_option("--group-by", group_by, "strategy | strategy-group | all");
  report->add_option("--heatmap", heatmap_out, "write the category-similarity CSV here");
  report->add_option("--categories", categories_path, "category index JSON");
  report->add_option("--png", png_out, "also render the selected map as a PNG");
  report->add_option("--consensus", consensus_out, "write per-(model,strategy) judge agreement CSV");
  report->add_option("--gold", gold_path, "manual-gold JSON for consensus rates");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return run_solve(spec_path, strategy_names);
    if (classify->parsed()) return run_classify(spec_path, settings);
    if (judge_cmd->parsed()) return run_judge(spec_path, variant, threshold);
    if (forge->parsed()) return run_forge(spec_path, concepts_path);
    if (report->parsed())
      return run_report(records_path, table_out, coverage_out, group_by, heatmap_out,
                        categories_path, png_out, consensus_out, gold_path);
  } catch (const bongard::core::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const bongard::core::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
