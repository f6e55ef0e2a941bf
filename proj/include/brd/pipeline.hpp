// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "brd/analysis.hpp"
#include "brd/compose.hpp"
#include "brd/corpus.hpp"
#include "brd/eval.hpp"
#include "brd/lm.hpp"
#include "brd/teacher.hpp"

namespace brd {

struct PipelinePaths {
  std::filesystem::path corpus;
  std::string corpus_format = "auto";
  std::filesystem::path behaviors = "out/behaviors.jsonl";
  std::filesystem::path dataset = "out/dataset/train.jsonl";
  std::filesystem::path model = "out/model.json";
  std::vector<std::filesystem::path> tasks;
  std::filesystem::path reports = "out/reports";
  std::filesystem::path templates = default_template_dir();
  std::filesystem::path abbreviations;
};

/// Everything a pipeline stage needs. Loaded from JSON; `${VAR}` inside any
/// string is replaced by the environment variable of that name.
struct PipelineConfig {
  PipelinePaths paths;
  TeacherConfig teacher;
  std::vector<BehaviorKind> kinds{BehaviorKind::kNer, BehaviorKind::kQra};
  ValidationRules validation;
  MixSpec mix;
  FilterSpec filters;
  NGramConfig lm;
  std::uint64_t seed = 42;

  /// Relative paths resolve against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
  void validate() const;
};

/// Replaces `${NAME}` in every string of `j`. Unset variables are an error.
nlohmann::json interpolate_env(const nlohmann::json& j);

/// Parses "ORI=1,NER=2,QRA=1" into mix ratios.
std::map<DocKind, double> parse_ratios(const std::string& text);

std::vector<Passage> load_passages(const PipelineConfig& config);
SegmenterConfig segmenter_for(const PipelineConfig& config);

SynthesisSummary run_synthesize(const PipelineConfig& config, std::shared_ptr<Transport> transport = nullptr);

/// Extra task-derived document streams for compose.
struct TaskDocSources {
  std::vector<std::filesystem::path> gold;
  std::vector<std::filesystem::path> pseudo;
  std::vector<std::filesystem::path> brd2;
};

MixResult run_compose(const PipelineConfig& config, const TaskDocSources& task_sources = {});

struct TrainResult {
  NGramModel model;
  double train_nll = 0.0;
  std::size_t documents = 0;
};
TrainResult run_train(const PipelineConfig& config);

/// Evaluates every task file; writes eval_<task>.json and eval.md under the
/// reports directory. Relaxed mode needs a non-empty train split whose ids do
/// not overlap the evaluated instances.
std::vector<EvalReport> run_eval(const PipelineConfig& config, EvalMode mode, const ScorerBackend& backend,
                                 const std::optional<std::filesystem::path>& train_split = std::nullopt);

std::vector<TaskSuite> load_suites(const PipelineConfig& config);

struct DemoClaim {
  std::string description;
  bool holds = false;
};

struct DemoResult {
  std::vector<DemoClaim> claims;
  std::vector<std::filesystem::path> reports;
};

/// Runs synthesize, compose, train, eval and analyze on the bundled
/// fixtures, writing everything below `out_dir`.
DemoResult run_demo(const std::filesystem::path& out_dir, const std::filesystem::path& data_dir);

/// Root holding templates/ and data/. Honors BRD_DATA_DIR.
std::filesystem::path default_data_dir();

}  // namespace brd
