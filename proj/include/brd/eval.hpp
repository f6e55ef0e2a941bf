// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brd/lm.hpp"
#include "brd/task.hpp"

namespace brd {

struct Prediction {
  std::string id;
  std::vector<double> scores;
  std::string chosen;
  std::optional<bool> correct;

  nlohmann::json to_json() const;
};

enum class EvalMode { kBlind, kRelaxed };

std::string to_string(EvalMode mode);
EvalMode parse_eval_mode(const std::string& name);

struct EvalReport {
  std::string task_id;
  std::size_t n = 0;
  /// Absent when any instance lacks a gold answer.
  std::optional<double> accuracy;
  EvalMode mode = EvalMode::kBlind;
  std::string backend_id;
  std::vector<Prediction> predictions;

  nlohmann::json to_json() const;
};

/// One markdown row per report.
std::string reports_markdown(std::span<const EvalReport> reports);

/// Index of the largest score; the first listed wins exact ties.
std::size_t select_candidate(std::span<const double> scores);

/// Scores every candidate by its average token log-probability after the
/// prompt and picks the best.
Prediction predict(const TaskInstance& instance, const ScorerBackend& backend, const TaskTemplate* tmpl);

EvalReport evaluate(const Taskset& taskset, const ScorerBackend& backend, EvalMode mode,
                    const TaskTemplate* tmpl = nullptr);

struct TaskSplit {
  std::vector<TaskInstance> train;
  std::vector<TaskInstance> tune;
  std::vector<TaskInstance> test;
};

/// Seeded shuffle, then contiguous train/tune/test blocks. tune and test get
/// floor(n * fraction); train gets the rest.
TaskSplit split_taskset(std::vector<TaskInstance> instances, double train_fraction, double tune_fraction,
                        double test_fraction, std::uint64_t seed);

}  // namespace brd
