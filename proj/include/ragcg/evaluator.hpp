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

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Percentage of Correct Lines and the ablation matrix. Line annotations come
// from people; this module only does the arithmetic and the bookkeeping.
namespace ragcg::eval {

struct LineAnnotation {
  std::string task_id;
  long long total = 0;   // lines in the gold answer, >= 1
  long long errors = 0;  // erroneous or missing lines; may exceed total
  std::string notes;
  std::string cell;      // matrix cell key; empty applies to any cell
};

LineAnnotation annotation_from_json(const nlohmann::json& j);

/// clamp((total - errors) / total, 0, 1). Throws Errc::ZeroTotal when
/// total < 1.
double pcl(long long total, long long errors);
double pcl(const LineAnnotation& a);

/// Percentage with two decimals, rounded half-up: 0.862068... -> "86.21".
std::string format_percent(double fraction);

struct TaskScore {
  std::string task_id;
  std::optional<double> pcl;  // nullopt when the task failed
};

struct EvalReport {
  std::vector<TaskScore> per_task;
  double mean_pcl = 0.0;  // over tasks with a score
  nlohmann::ordered_json config_snapshot = nlohmann::ordered_json::object();
  std::optional<double> executability;  // share of passing verdicts
  std::optional<double> functionality;
};

/// Per-task pcl and their arithmetic mean. Throws Errc::EmptySet when no
/// annotation is given.
EvalReport aggregate(const std::vector<LineAnnotation>& annotations);

nlohmann::ordered_json to_json(const EvalReport& r);

std::vector<LineAnnotation> load_annotations(const std::filesystem::path& path);

/// Externally produced executability / functionality verdicts.
struct Verdict {
  std::string task_id;
  std::string cell;
  std::optional<bool> executable;
  std::optional<bool> functional;
};

std::vector<Verdict> load_verdicts(const std::filesystem::path& path);
/// Fills executability / functionality from the verdicts of the report's
/// tasks that match `cell` (or carry no cell).
void attach_verdicts(EvalReport& report, const std::vector<Verdict>& verdicts,
                     std::string_view cell);

enum class SplitterMode { Fixed, Semantic };
enum class RenovationMode { Off, NoGate, Full };
std::string_view splitter_mode_name(SplitterMode m) noexcept;
std::string_view renovation_mode_name(RenovationMode m) noexcept;
RenovationMode parse_renovation_mode(std::string_view s);

struct ExperimentConfig {
  std::string group_id;    // short identifier used on the command line
  std::string group_name;  // display name
  SplitterMode splitter = SplitterMode::Semantic;
  RenovationMode renovation = RenovationMode::Full;
  std::string planner = "chateda";  // chateda | direct
  std::string method = "rag";       // rag | react
  std::size_t chunk_size = 500;
  std::size_t top_k = 3;
  double temperature = 0.0;
  std::string model_id;
  bool experimental = false;  // ReAct adaptation
};

/// The ten comparison groups in their canonical order.
const std::vector<ExperimentConfig>& experiment_groups();
/// Looks a group up by id or display name. Throws Errc::UnknownGroup.
ExperimentConfig find_group(std::string_view id_or_name);

struct Sweep {
  std::vector<std::size_t> chunk_sizes;
  std::vector<std::size_t> top_ks;
};

/// "<group_id>@cs<chunk_size>-k<top_k>"
std::string cell_key(const ExperimentConfig& cfg);

struct MatrixCell {
  ExperimentConfig config;
  std::optional<EvalReport> report;  // nullopt when the cell failed
  std::string error;
};

/// Evaluates one configured cell; throwing marks the cell failed.
using CellRunner = std::function<EvalReport(const ExperimentConfig&)>;

/// Every group crossed with every sweep point, in group order then chunk size
/// then top_k. Failures become null cells; the matrix always completes.
std::vector<MatrixCell> run_matrix(const std::vector<ExperimentConfig>& groups, const Sweep& sweep,
                                   const CellRunner& runner);

/// One row per cell: group, chunk_size, top_k, mean pcl, one column per task.
std::string matrix_csv(const std::vector<MatrixCell>& cells);
std::string matrix_table(const std::vector<MatrixCell>& cells);

/// Report for a single annotation set, as CSV and as aligned text.
std::string report_csv(const EvalReport& r);
std::string report_table(const EvalReport& r);

}  // namespace ragcg::eval
