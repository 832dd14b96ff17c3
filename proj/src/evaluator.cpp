/*
 * Copyright 2026 The ragcodegen Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ragcg/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

namespace ragcg::eval {

using nlohmann::json;
using nlohmann::ordered_json;

LineAnnotation annotation_from_json(const json& j) {
  LineAnnotation a;
  a.task_id = j.at("task_id").get<std::string>();
  a.total = j.at("total").get<long long>();
  a.errors = j.at("errors").get<long long>();
  if (j.contains("notes") && j.at("notes").is_string()) a.notes = j.at("notes").get<std::string>();
  if (j.contains("cell") && j.at("cell").is_string()) a.cell = j.at("cell").get<std::string>();
  if (a.errors < 0) {
    throw Error(Errc::InvalidRequest, fmt::format("task {}: negative error count", a.task_id));
  }
  return a;
}

double pcl(long long total, long long errors) {
  if (total < 1) throw Error(Errc::ZeroTotal, fmt::format("total lines must be >= 1, got {}", total));
  const double v = static_cast<double>(total - errors) / static_cast<double>(total);
  return std::clamp(v, 0.0, 1.0);
}

double pcl(const LineAnnotation& a) { return pcl(a.total, a.errors); }

std::string format_percent(double fraction) {
  // the small bias keeps exact halves like 12.345 from rounding down on
  // representation error
  const double hundredths = std::floor(fraction * 10000.0 + 0.5 + 1e-9);
  return fmt::format("{:.2f}", hundredths / 100.0);
}

EvalReport aggregate(const std::vector<LineAnnotation>& annotations) {
  if (annotations.empty()) throw Error(Errc::EmptySet, "no annotations to aggregate");
  EvalReport r;
  double sum = 0.0;
  for (const auto& a : annotations) {
    const double v = pcl(a);
    r.per_task.push_back({a.task_id, v});
    sum += v;
  }
  r.mean_pcl = sum / static_cast<double>(annotations.size());
  return r;
}

ordered_json to_json(const EvalReport& r) {
  ordered_json j;
  ordered_json tasks = ordered_json::array();
  for (const auto& t : r.per_task) {
    ordered_json tj;
    tj["task_id"] = t.task_id;
    if (t.pcl) {
      tj["pcl"] = *t.pcl;
    } else {
      tj["pcl"] = nullptr;
    }
    tasks.push_back(std::move(tj));
  }
  j["per_task"] = std::move(tasks);
  j["mean_pcl"] = r.mean_pcl;
  j["executability"] = r.executability ? ordered_json(*r.executability) : ordered_json(nullptr);
  j["functionality"] = r.functionality ? ordered_json(*r.functionality) : ordered_json(nullptr);
  j["config"] = r.config_snapshot;
  return j;
}

namespace {

std::vector<json> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::UnreadableInput, fmt::format("cannot read {}", path.string()));
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(Errc::UnreadableInput,
                  fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return rows;
}

std::optional<bool> opt_bool(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<bool>();
}

}  // namespace

std::vector<LineAnnotation> load_annotations(const std::filesystem::path& path) {
  std::vector<LineAnnotation> out;
  for (const auto& row : read_rows(path)) {
    try {
      out.push_back(annotation_from_json(row));
    } catch (const json::exception& e) {
      throw Error(Errc::UnreadableInput, fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return out;
}

std::vector<Verdict> load_verdicts(const std::filesystem::path& path) {
  std::vector<Verdict> out;
  for (const auto& row : read_rows(path)) {
    try {
      Verdict v;
      v.task_id = row.at("task_id").get<std::string>();
      if (row.contains("cell") && row.at("cell").is_string()) v.cell = row.at("cell").get<std::string>();
      v.executable = opt_bool(row, "executable");
      v.functional = opt_bool(row, "functional");
      out.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw Error(Errc::UnreadableInput, fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return out;
}

void attach_verdicts(EvalReport& report, const std::vector<Verdict>& verdicts,
                     std::string_view cell) {
  std::size_t exec_n = 0, exec_ok = 0, func_n = 0, func_ok = 0;
  for (const auto& t : report.per_task) {
    for (const auto& v : verdicts) {
      if (v.task_id != t.task_id || (!v.cell.empty() && v.cell != cell)) continue;
      if (v.executable) {
        ++exec_n;
        exec_ok += *v.executable ? 1 : 0;
      }
      if (v.functional) {
        ++func_n;
        func_ok += *v.functional ? 1 : 0;
      }
    }
  }
  if (exec_n) report.executability = static_cast<double>(exec_ok) / static_cast<double>(exec_n);
  if (func_n) report.functionality = static_cast<double>(func_ok) / static_cast<double>(func_n);
}

std::string_view splitter_mode_name(SplitterMode m) noexcept {
  return m == SplitterMode::Fixed ? "fixed" : "semantic";
}

std::string_view renovation_mode_name(RenovationMode m) noexcept {
  switch (m) {
    case RenovationMode::Off: return "off";
    case RenovationMode::NoGate: return "no-gate";
    case RenovationMode::Full: return "full";
  }
  return "off";
}

RenovationMode parse_renovation_mode(std::string_view s) {
  if (s == "off") return RenovationMode::Off;
  if (s == "no-gate") return RenovationMode::NoGate;
  if (s == "full") return RenovationMode::Full;
  throw Error(Errc::UsageError, fmt::format("unknown renovation mode '{}'", s));
}

const std::vector<ExperimentConfig>& experiment_groups() {
  static const std::vector<ExperimentConfig> groups = [] {
    auto g = [](std::string id, std::string name, SplitterMode s, RenovationMode r,
                std::string planner, std::string method) {
      ExperimentConfig c;
      c.group_id = std::move(id);
      c.group_name = std::move(name);
      c.splitter = s;
      c.renovation = r;
      c.planner = std::move(planner);
      c.method = std::move(method);
      c.experimental = c.method == "react";
      return c;
    };
    using S = SplitterMode;
    using R = RenovationMode;
    return std::vector<ExperimentConfig>{
        g("baseline-rag", "Baseline - RAG", S::Fixed, R::Off, "direct", "rag"),
        g("baseline-react", "Baseline - ReAct", S::Fixed, R::Off, "direct", "react"),
        g("rag-splitter", "RAG + Data Splitter", S::Semantic, R::Off, "direct", "rag"),
        g("baseline-rag-chateda", "Baseline - RAG + ChatEDA", S::Fixed, R::Off, "chateda", "rag"),
        g("baseline-react-chateda", "Baseline - ReAct + ChatEDA", S::Fixed, R::Off, "chateda",
          "react"),
        g("rag-splitter-chateda", "RAG + Data Splitter + ChatEDA", S::Semantic, R::Off, "chateda",
          "rag"),
        g("rag-splitter-renovation-nogate",
          "RAG + Data Splitter + Renovation (without CoDRC and ATRA)", S::Semantic, R::NoGate,
          "direct", "rag"),
        g("rag-splitter-renovation-nogate-chateda",
          "RAG + Data Splitter + Renovation (without CoDRC and ATRA) + ChatEDA", S::Semantic,
          R::NoGate, "chateda", "rag"),
        g("rag-splitter-renovation", "RAG + Data Splitter + Renovation", S::Semantic, R::Full,
          "direct", "rag"),
        g("proposed", "Our proposed (RAG + Data Splitter + Renovation + ChatEDA)", S::Semantic,
          R::Full, "chateda", "rag"),
    };
  }();
  return groups;
}

ExperimentConfig find_group(std::string_view id_or_name) {
  for (const auto& g : experiment_groups()) {
    if (g.group_id == id_or_name || g.group_name == id_or_name) return g;
  }
  throw Error(Errc::UnknownGroup, fmt::format("no experiment group '{}'", id_or_name));
}

std::string cell_key(const ExperimentConfig& cfg) {
  return fmt::format("{}@cs{}-k{}", cfg.group_id, cfg.chunk_size, cfg.top_k);
}

std::vector<MatrixCell> run_matrix(const std::vector<ExperimentConfig>& groups, const Sweep& sweep,
                                   const CellRunner& runner) {
  if (sweep.chunk_sizes.empty() || sweep.top_ks.empty()) {
    throw Error(Errc::UsageError, "sweep needs at least one chunk size and one top_k");
  }
  std::vector<MatrixCell> cells;
  for (const auto& g : groups) {
    for (std::size_t cs : sweep.chunk_sizes) {
      for (std::size_t k : sweep.top_ks) {
        MatrixCell cell;
        cell.config = g;
        cell.config.chunk_size = cs;
        cell.config.top_k = k;
        try {
          cell.report = runner(cell.config);
        } catch (const std::exception& e) {
          cell.error = e.what();
          spdlog::warn("cell {} failed: {}", cell_key(cell.config), e.what());
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

namespace {

std::vector<std::string> task_columns(const std::vector<MatrixCell>& cells) {
  std::vector<std::string> ids;
  for (const auto& c : cells) {
    if (!c.report) continue;
    for (const auto& t : c.report->per_task) {
      if (std::find(ids.begin(), ids.end(), t.task_id) == ids.end()) ids.push_back(t.task_id);
    }
  }
  return ids;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_percent(const std::optional<double>& v) { return v ? format_percent(*v) : ""; }

std::vector<std::vector<std::string>> matrix_rows(const std::vector<MatrixCell>& cells) {
  const auto tasks = task_columns(cells);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"group", "chunk_size", "top_k", "mean_pcl"};
  header.insert(header.end(), tasks.begin(), tasks.end());
  header.push_back("executability");
  header.push_back("functionality");
  rows.push_back(std::move(header));
  for (const auto& c : cells) {
    std::vector<std::string> row{c.config.group_name, std::to_string(c.config.chunk_size),
                                 std::to_string(c.config.top_k)};
    if (!c.report) {
      row.push_back("null");
      row.resize(row.size() + tasks.size() + 2);
    } else {
      row.push_back(format_percent(c.report->mean_pcl));
      for (const auto& id : tasks) {
        auto it = std::find_if(c.report->per_task.begin(), c.report->per_task.end(),
                               [&](const TaskScore& t) { return t.task_id == id; });
        row.push_back(it == c.report->per_task.end() ? "" : opt_percent(it->pcl));
      }
      row.push_back(opt_percent(c.report->executability));
      row.push_back(opt_percent(c.report->functionality));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    std::vector<std::string> fields;
    for (const auto& f : row) fields.push_back(csv_field(f));
    out += text::join(fields, ",") + "\n";
  }
  return out;
}

std::string to_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], text::count_chars(row[i]));
    }
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i) line += "  ";
      line += rows[r][i];
      if (i + 1 < rows[r].size()) line.append(width[i] - text::count_chars(rows[r][i]), ' ');
    }
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  return out;
}

std::vector<std::vector<std::string>> report_rows(const EvalReport& r) {
  std::vector<std::vector<std::string>> rows{{"task_id", "pcl"}};
  for (const auto& t : r.per_task) rows.push_back({t.task_id, t.pcl ? format_percent(*t.pcl) : "null"});
  rows.push_back({"mean", format_percent(r.mean_pcl)});
  return rows;
}

}  // namespace

std::string matrix_csv(const std::vector<MatrixCell>& cells) { return to_csv(matrix_rows(cells)); }
std::string matrix_table(const std::vector<MatrixCell>& cells) { return to_table(matrix_rows(cells)); }
std::string report_csv(const EvalReport& r) { return to_csv(report_rows(r)); }
std::string report_table(const EvalReport& r) { return to_table(report_rows(r)); }

}  // namespace ragcg::eval
