#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bongard/core/raster.hpp"
#include "bongard/harness/results.hpp"
#include "bongard/judge/ensemble.hpp"

namespace bongard::harness {

// --- aggregate table --------------------------------------------------------

struct CellCount {
  int correct = 0;
  int total = 0;
};

struct AggregateTable {
  // dataset -> workload -> model -> counts
  std::map<std::string, std::map<std::string, CellCount>> cells;  // key: dataset \x1f workload
  std::set<std::string> models;
  std::vector<std::string> warnings;

  std::string csv() const;
};

namespace detail {

inline int workload_rank(const std::string& w) {
  static const std::vector<std::string> order = {
      "ground_truth",       "incorrect_label",      "images_to_sides",  "direct",
      "descriptive",        "descriptive-iterative", "descriptive-direct", "contrastive",
      "contrastive-iterative", "contrastive-direct"};
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] == w) return static_cast<int>(i);
  return static_cast<int>(order.size());
}

inline int dataset_rank(const std::string& d) {
  static const std::vector<std::string> order = {"synthetic", "hoi", "openworld", "rwr", "custom"};
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] == d) return static_cast<int>(i);
  return static_cast<int>(order.size());
}

template <typename Rank>
inline std::vector<std::string> ordered_keys(const std::set<std::string>& keys, Rank rank) {
  std::vector<std::string> out(keys.begin(), keys.end());
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    int ra = rank(a), rb = rank(b);
    return ra != rb ? ra < rb : a < b;
  });
  return out;
}

}  // namespace detail

// Counts correct/solved outcomes per (dataset, model, workload). Generation
// workloads count ensemble verdicts (incomplete ones are excluded); the
// classification settings count their own outcome records.
inline AggregateTable aggregate_table(const std::vector<ResultRecord>& records) {
  AggregateTable table;
  for (const auto& r : records) {
    std::string workload;
    bool correct = false;
    if (r.workload.starts_with("classify:")) {
      workload = r.workload.substr(9);
      if (r.payload.value("kind", std::string{}) == "side_assignment")
        correct = r.payload.value("solved", false);
      else
        correct = r.payload.value("correct", false);
    } else if (r.workload.starts_with("verdict:")) {
      if (r.payload.value("incomplete", false)) continue;
      workload = r.workload.substr(8);
      correct = r.payload.value("correct", false);
    } else {
      continue;  // raw strategy traces are not aggregated
    }
    CellCount& cell = table.cells[r.dataset + "\x1f" + workload][r.model];
    ++cell.total;
    if (correct) ++cell.correct;
    table.models.insert(r.model);
  }
  // incomplete-cell warnings: differing totals within one (dataset, workload) row
  for (const auto& [key, row] : table.cells) {
    int max_total = 0;
    for (const auto& [model, cell] : row) max_total = std::max(max_total, cell.total);
    for (const auto& model : table.models) {
      auto it = row.find(model);
      int total = it == row.end() ? 0 : it->second.total;
      if (total < max_total) {
        std::string pretty = key;
        std::replace(pretty.begin(), pretty.end(), '\x1f', '/');
        table.warnings.push_back("incomplete cell: " + pretty + " for model " + model + " has " +
                                 std::to_string(total) + "/" + std::to_string(max_total) + " outcomes");
      }
    }
  }
  return table;
}

inline std::string AggregateTable::csv() const {
  std::set<std::string> datasets, workloads;
  for (const auto& [key, row] : cells) {
    std::size_t sep = key.find('\x1f');
    datasets.insert(key.substr(0, sep));
    workloads.insert(key.substr(sep + 1));
  }
  std::vector<std::string> model_cols(models.begin(), models.end());
  std::string out = "dataset,workload";
  for (const auto& m : model_cols) out += "," + m;
  out += "\n";
  for (const auto& dataset : detail::ordered_keys(datasets, detail::dataset_rank)) {
    for (const auto& workload : detail::ordered_keys(workloads, detail::workload_rank)) {
      auto it = cells.find(dataset + "\x1f" + workload);
      if (it == cells.end()) continue;
      out += dataset + "," + workload;
      for (const auto& m : model_cols) {
        auto cit = it->second.find(m);
        out += ",";
        if (cit != it->second.end()) out += std::to_string(cit->second.correct);
      }
      out += "\n";
    }
  }
  return out;
}

// --- coverage map -----------------------------------------------------------

enum class CoverageGrouping { Strategy, StrategyGroup, All };

inline CoverageGrouping grouping_from_string(const std::string& s) {
  if (s == "strategy") return CoverageGrouping::Strategy;
  if (s == "strategy-group") return CoverageGrouping::StrategyGroup;
  if (s == "all") return CoverageGrouping::All;
  throw core::ConfigError("unknown coverage grouping: " + s);
}

struct CoverageMap {
  std::vector<std::string> groups;
  std::vector<std::string> problem_ids;
  std::map<std::string, std::set<std::string>> solved_by;  // id -> groups that solved it
  int union_count = 0;

  std::string csv() const {
    // the union column is redundant when "any" is the only group
    bool with_union = !(groups.size() == 1 && groups[0] == "any");
    std::string out = "problem_id";
    for (const auto& g : groups) out += "," + g;
    if (with_union) out += ",any";
    out += "\n";
    for (const auto& id : problem_ids) {
      out += id;
      auto it = solved_by.find(id);
      bool any = it != solved_by.end() && !it->second.empty();
      for (const auto& g : groups)
        out += (it != solved_by.end() && it->second.contains(g)) ? ",1" : ",0";
      if (with_union) out += any ? ",1" : ",0";
      out += "\n";
    }
    return out;
  }
};

namespace detail {

inline std::string strategy_group(const std::string& strategy_name) {
  if (strategy_name.starts_with("descriptive")) return "descriptive";
  if (strategy_name.starts_with("contrastive")) return "contrastive";
  return "direct";
}

// Numeric-aware id ordering so "2" sorts before "10".
inline bool natural_less(const std::string& a, const std::string& b) {
  auto all_digits = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
      return std::isdigit(static_cast<unsigned char>(c));
    });
  };
  if (all_digits(a) && all_digits(b)) {
    if (a.size() != b.size()) return a.size() < b.size();
  }
  return a < b;
}

}  // namespace detail

// Which problems were solved by any model, grouped by strategy, strategy
// family, or altogether. A problem counts as solved by a group when any
// complete verdict in that group is correct.
inline CoverageMap coverage_map(const std::vector<ResultRecord>& records, CoverageGrouping grouping) {
  CoverageMap map;
  std::set<std::string> ids, groups;
  for (const auto& r : records) {
    if (!r.workload.starts_with("verdict:")) continue;
    ids.insert(r.problem_id);
    std::string strategy_name = r.workload.substr(8);
    std::string group;
    switch (grouping) {
      case CoverageGrouping::Strategy: group = strategy_name; break;
      case CoverageGrouping::StrategyGroup: group = detail::strategy_group(strategy_name); break;
      case CoverageGrouping::All: group = "any"; break;
    }
    groups.insert(group);
    if (r.payload.value("incomplete", false)) continue;
    if (r.payload.value("correct", false)) map.solved_by[r.problem_id].insert(group);
  }
  map.groups = detail::ordered_keys(groups, detail::workload_rank);
  map.problem_ids.assign(ids.begin(), ids.end());
  std::sort(map.problem_ids.begin(), map.problem_ids.end(), detail::natural_less);
  for (const auto& [id, solved] : map.solved_by)
    if (!solved.empty()) ++map.union_count;
  return map;
}

// --- category heatmap -------------------------------------------------------

using CategoryIndex = std::map<std::string, std::set<std::string>>;

inline CategoryIndex load_category_index(const std::filesystem::path& path) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::parse(core::read_file_text(path));
  if (!doc.is_object()) throw core::SchemaError("category index must be a JSON object");
  CategoryIndex index;
  for (const auto& [id, tags] : doc.items()) {
    for (const auto& t : tags) {
      std::string tag = t.get<std::string>();
      if (tag.empty()) throw core::SchemaError("category index has an empty tag for problem " + id);
      index[id].insert(tag);
    }
  }
  return index;
}

struct Heatmap {
  std::vector<std::string> ids;
  std::vector<std::vector<int>> matrix;  // similarity = common - uncommon categories
  int min_value = 0;
  int max_value = 0;

  std::string csv() const {
    std::string out = "problem_id";
    for (const auto& id : ids) out += "," + id;
    out += "\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out += ids[i];
      for (std::size_t j = 0; j < ids.size(); ++j) out += "," + std::to_string(matrix[i][j]);
      out += "\n";
    }
    return out;
  }
};

// Pairwise similarity = |cat(a) n cat(b)| - |cat(a) symmetric-diff cat(b)|:
// positive when two problems exercise the same abilities.
inline Heatmap category_heatmap(const CategoryIndex& index, const std::vector<std::string>& ids) {
  Heatmap map;
  map.ids = ids;
  for (const auto& id : ids)
    if (!index.contains(id)) throw core::MissingCategoryError("no categories for problem " + id);
  map.matrix.assign(ids.size(), std::vector<int>(ids.size(), 0));
  bool first = true;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& a = index.at(ids[i]);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const auto& b = index.at(ids[j]);
      int common = 0;
      for (const auto& tag : a)
        if (b.contains(tag)) ++common;
      int uncommon = static_cast<int>(a.size()) + static_cast<int>(b.size()) - 2 * common;
      int value = common - uncommon;
      map.matrix[i][j] = value;
      if (first) {
        map.min_value = map.max_value = value;
        first = false;
      } else {
        map.min_value = std::min(map.min_value, value);
        map.max_value = std::max(map.max_value, value);
      }
    }
  }
  return map;
}

// --- consensus over recorded verdicts ----------------------------------------

// Rebuilds per-judge vote matrices from the verdict records of each
// (model, strategy) pair and reports agreement statistics, optionally
// against a manual-gold mapping.
inline std::string consensus_csv(const std::vector<ResultRecord>& records,
                                 const std::map<std::string, bool>* gold = nullptr) {
  struct Slot {
    std::vector<std::string> judge_tags;
    std::vector<judge::JudgedItem> items;
  };
  std::map<std::string, Slot> slots;  // model \x1f workload
  int threshold = 2;
  for (const auto& r : records) {
    if (!r.workload.starts_with("verdict:")) continue;
    if (r.payload.value("incomplete", false)) continue;
    Slot& slot = slots[r.model + "\x1f" + r.workload.substr(8)];
    judge::JudgedItem item;
    item.problem_id = r.problem_id;
    std::vector<std::string> tags;
    for (const auto& vote : r.payload.value("votes", json::array())) {
      tags.push_back(vote.value("judge", std::string{}));
      item.votes.push_back(eval::ok_wrong_from_string(vote.value("parsed", std::string{})));
    }
    threshold = r.payload.value("threshold", threshold);
    if (slot.judge_tags.empty()) slot.judge_tags = tags;
    if (tags == slot.judge_tags) slot.items.push_back(std::move(item));
  }
  std::string out = "model,workload,items,unanimity";
  if (gold) out += ",all_models,any_model,voting";
  out += "\n";
  char buf[64];
  for (const auto& [key, slot] : slots) {
    if (slot.items.empty()) continue;
    judge::ConsensusReport report =
        judge::consensus_report(slot.items, slot.judge_tags, threshold, gold);
    std::size_t sep = key.find('\x1f');
    out += key.substr(0, sep) + "," + key.substr(sep + 1) + "," + std::to_string(report.items);
    std::snprintf(buf, sizeof buf, ",%.4f", report.unanimity_rate);
    out += buf;
    if (gold) {
      std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f", *report.all_models_rate,
                    *report.any_model_rate, *report.voting_rate);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// --- optional rendered artifacts (CSV stays the contract) -------------------

inline std::vector<std::uint8_t> render_coverage_png(const CoverageMap& map, int cell = 12) {
  int w = static_cast<int>(map.groups.size() + 1) * cell + 1;
  int h = static_cast<int>(map.problem_ids.size()) * cell + 1;
  core::Raster img = core::Raster::filled(std::max(w, 1), std::max(h, 1), 255, 255, 255);
  auto fill = [&](int cx, int cy, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = cy * cell; y < (cy + 1) * cell && y < img.height; ++y)
      for (int x = cx * cell; x < (cx + 1) * cell && x < img.width; ++x) {
        auto* p = img.px(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
      }
  };
  for (std::size_t row = 0; row < map.problem_ids.size(); ++row) {
    auto it = map.solved_by.find(map.problem_ids[row]);
    bool any = false;
    for (std::size_t col = 0; col < map.groups.size(); ++col) {
      bool solved = it != map.solved_by.end() && it->second.contains(map.groups[col]);
      any = any || solved;
      if (solved)
        fill(static_cast<int>(col), static_cast<int>(row), 46, 160, 67);
      else
        fill(static_cast<int>(col), static_cast<int>(row), 235, 235, 235);
    }
    if (any)
      fill(static_cast<int>(map.groups.size()), static_cast<int>(row), 24, 100, 170);
    else
      fill(static_cast<int>(map.groups.size()), static_cast<int>(row), 250, 250, 250);
  }
  return core::encode_png(img);
}

inline std::vector<std::uint8_t> render_heatmap_png(const Heatmap& map, int cell = 8) {
  int n = static_cast<int>(map.ids.size());
  core::Raster img = core::Raster::filled(std::max(n * cell, 1), std::max(n * cell, 1), 255, 255, 255);
  int scale = std::max(std::abs(map.min_value), std::abs(map.max_value));
  if (scale == 0) scale = 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = static_cast<double>(map.matrix[i][j]) / scale;  // [-1, 1]
      std::uint8_t r, g, b;
      if (v >= 0) {  // white -> red
        r = 255;
        g = b = static_cast<std::uint8_t>(255 - 200 * v);
      } else {  // white -> blue
        b = 255;
        r = g = static_cast<std::uint8_t>(255 + 200 * v);
      }
      for (int y = i * cell; y < (i + 1) * cell; ++y)
        for (int x = j * cell; x < (j + 1) * cell; ++x) {
          auto* p = img.px(x, y);
          p[0] = r;
          p[1] = g;
          p[2] = b;
        }
    }
  return core::encode_png(img);
}

}  // namespace bongard::harness
