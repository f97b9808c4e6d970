#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vxp/bench/episode.hpp"

namespace vxp::bench {

inline constexpr FailureCategory kFailureCategories[] = {FailureCategory::perception, FailureCategory::specification,
                                                         FailureCategory::dynamics, FailureCategory::other};

struct SuiteSelection {
  /// Template ids; empty means no cells.
  std::vector<std::string> templates;
  std::vector<sim::Split> splits{sim::Split::seen, sim::Split::unseen};
  int episodes = 20;
  /// Episode i uses seeds[i]; when empty, seed i.
  std::vector<std::uint64_t> seeds;
  bool disturbances = false;

  /// The 13 benchmark rows over both splits.
  static SuiteSelection full() {
    SuiteSelection s;
    for (const auto& t : sim::templates())
      if (t.in_suite) s.templates.push_back(t.id);
    return s;
  }

  std::uint64_t seed(int i) const {
    if (seeds.empty()) return static_cast<std::uint64_t>(i);
    if (static_cast<std::size_t>(i) >= seeds.size()) fail(ErrorKind::invalid_input, "seed list shorter than episode count");
    return seeds[static_cast<std::size_t>(i)];
  }
};

/// One (template, split) row.
struct CellRow {
  std::string template_id;
  std::string category;
  std::string split;
  int episodes = 0;
  int successes = 0;
  std::map<FailureCategory, int> failures;

  double rate() const { return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0; }
  bool operator==(const CellRow&) const = default;
};

struct Aggregate {
  int episodes = 0;
  int successes = 0;
  double rate() const { return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0; }
  bool operator==(const Aggregate&) const = default;
};

struct Report {
  std::vector<EpisodeResult> episodes;
  std::vector<CellRow> cells;
  /// Keyed by "seen"/"unseen" and by category name.
  std::map<std::string, Aggregate> by_split, by_category;
  /// Failed episodes per category.
  std::map<FailureCategory, int> errors;

  bool empty() const { return cells.empty(); }
};

/// Cells and aggregates from cell rows alone. Used for both fresh reports
/// and re-parsed CSV.
inline void aggregate_cells(Report& r) {
  r.by_split.clear();
  r.by_category.clear();
  r.errors.clear();
  for (const auto& c : r.cells) {
    for (auto* a : {&r.by_split[c.split], &r.by_category[c.category]}) {
      a->episodes += c.episodes;
      a->successes += c.successes;
    }
    for (const auto& [k, n] : c.failures) r.errors[k] += n;
  }
}

/// Report from episode rows. Cell order follows first appearance.
inline Report summarize(std::vector<EpisodeResult> rows) {
  Report r;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& e : rows) {
    const auto key = std::make_pair(e.task_id, e.split);
    auto it = index.find(key);
    if (it == index.end()) {
      CellRow c;
      c.template_id = e.task_id;
      c.category = std::string(sim::to_string(sim::template_info(e.task_id).category));
      c.split = e.split;
      it = index.emplace(key, r.cells.size()).first;
      r.cells.push_back(std::move(c));
    }
    CellRow& c = r.cells[it->second];
    ++c.episodes;
    if (e.success) ++c.successes;
    else ++c.failures[e.failure];
  }
  r.episodes = std::move(rows);
  aggregate_cells(r);
  return r;
}

inline Report run_suite(lmp::LmpRuntime& rt, const SuiteSelection& sel, const EpisodeConfig& cfg = {}) {
  std::vector<EpisodeResult> rows;
  for (const auto& id : sel.templates) {
    sim::template_info(id);
    for (sim::Split split : sel.splits)
      for (int i = 0; i < sel.episodes; ++i) {
        const TaskSpec task = sim::make_task(id, split, static_cast<std::uint64_t>(i), sel.disturbances);
        EpisodeResult e = run_episode(rt, task, sel.seed(i), cfg);
        e.trace.clear();
        rows.push_back(std::move(e));
      }
  }
  return summarize(std::move(rows));
}

// CSV ------------------------------------------------------------------------

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') out.back() += line[++i];
      else if (c == '"') quoted = false;
      else out.back() += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) fail(ErrorKind::invalid_input, "unterminated quote in CSV line");
  return out;
}

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace detail

inline constexpr const char* kCellHeader =
    "template,instruction,category,split,episodes,successes,success_rate,perception,specification,dynamics,other";

/// One row per (template, split), in the benchmark table's layout.
inline void write_cells_csv(std::ostream& os, const Report& r) {
  os << kCellHeader << "\n";
  for (const auto& c : r.cells) {
    os << c.template_id << "," << detail::csv_field(sim::template_info(c.template_id).text) << "," << c.category << ","
       << c.split << "," << c.episodes << "," << c.successes << "," << detail::fixed(c.rate(), 4);
    for (auto k : kFailureCategories) {
      auto it = c.failures.find(k);
      os << "," << (it == c.failures.end() ? 0 : it->second);
    }
    os << "\n";
  }
}

inline void write_episodes_csv(std::ostream& os, const Report& r) {
  os << "template,split,seed,instruction,success,ticks,failure,replans,pushes,error\n";
  for (const auto& e : r.episodes)
    os << e.task_id << "," << e.split << "," << e.seed << "," << detail::csv_field(e.instruction) << ","
       << (e.success ? 1 : 0) << "," << e.ticks << "," << to_string(e.failure) << "," << e.replans << "," << e.pushes
       << "," << detail::csv_field(e.error) << "\n";
}

/// Inverse of write_cells_csv; aggregates are recomputed from the rows.
inline Report parse_cells_csv(std::istream& is) {
  Report r;
  std::string line;
  if (!std::getline(is, line) || line != kCellHeader) fail(ErrorKind::invalid_input, "missing or unexpected CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::csv_split(line);
    if (f.size() != 11) fail(ErrorKind::invalid_input, "CSV row has " + std::to_string(f.size()) + " fields");
    CellRow c;
    c.template_id = f[0];
    c.category = f[2];
    c.split = f[3];
    try {
      c.episodes = std::stoi(f[4]);
      c.successes = std::stoi(f[5]);
      for (std::size_t k = 0; k < 4; ++k)
        if (const int n = std::stoi(f[7 + k]); n > 0) c.failures[kFailureCategories[k]] = n;
    } catch (const std::logic_error&) {
      fail(ErrorKind::invalid_input, "non-numeric count in CSV row: " + line);
    }
    r.cells.push_back(std::move(c));
  }
  aggregate_cells(r);
  return r;
}

/// Percentages at one decimal that sum to exactly 100.0 (largest remainder).
inline std::map<FailureCategory, double> error_percentages(const std::map<FailureCategory, int>& errors) {
  std::map<FailureCategory, double> out;
  int total = 0;
  for (auto k : kFailureCategories) {
    auto it = errors.find(k);
    total += it == errors.end() ? 0 : it->second;
  }
  if (total == 0) return out;
  std::vector<std::pair<double, FailureCategory>> rem;
  long assigned = 0;
  for (auto k : kFailureCategories) {
    auto it = errors.find(k);
    const double tenths = 1000.0 * (it == errors.end() ? 0 : it->second) / total;
    const long fl = static_cast<long>(std::floor(tenths));
    out[k] = static_cast<double>(fl);
    assigned += fl;
    rem.push_back({tenths - static_cast<double>(fl), k});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < 1000; ++i, ++assigned) out[rem[i % rem.size()].second] += 1.0;
  for (auto& [k, v] : out) v /= 10.0;
  return out;
}

inline void write_summary(std::ostream& os, const Report& r) {
  os << "cells: " << r.cells.size() << "\n";
  for (const auto& c : r.cells)
    os << "  " << std::left << std::setw(22) << c.template_id << std::setw(7) << c.split << " "
       << detail::fixed(100.0 * c.rate(), 1) << "% (" << c.successes << "/" << c.episodes << ")\n";
  for (const auto& [k, a] : r.by_split)
    os << (k == "seen" ? "SA" : k == "unseen" ? "UA" : k) << ": " << detail::fixed(100.0 * a.rate(), 1) << "% ("
       << a.successes << "/" << a.episodes << ")\n";
  for (const auto& [k, a] : r.by_category)
    os << k << ": " << detail::fixed(100.0 * a.rate(), 1) << "% (" << a.successes << "/" << a.episodes << ")\n";
  int failed = 0;
  for (const auto& [k, n] : r.errors) failed += n;
  os << "failures: " << failed << "\n";
  for (const auto& [k, p] : error_percentages(r.errors))
    os << "  " << to_string(k) << ": " << detail::fixed(p, 1) << "%\n";
}

/// Writes cells.csv, episodes.csv and summary.txt under `dir`.
inline void report_emit(const Report& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) fail(ErrorKind::io, "cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("cells.csv");
    write_cells_csv(os, r);
  }
  {
    auto os = open("episodes.csv");
    write_episodes_csv(os, r);
  }
  auto os = open("summary.txt");
  write_summary(os, r);
  if (!os) fail(ErrorKind::io, "failed writing report under " + dir.string());
}

}  // namespace vxp::bench
