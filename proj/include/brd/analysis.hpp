// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "brd/compose.hpp"
#include "brd/eval.hpp"
#include "brd/lm.hpp"
#include "brd/task.hpp"

namespace brd {

/// How per-token probabilities are folded into one sequence probability.
enum class SequenceAveraging {
  kGeometric,   ///< exp(mean token logprob), the default
  kArithmetic,  ///< mean of token probabilities
};

std::string to_string(SequenceAveraging averaging);
SequenceAveraging parse_sequence_averaging(const std::string& name);

/// Length-normalized probability of a text under a backend, in (0, 1].
double sequence_prob(const ScorerBackend& backend, std::string_view text,
                     SequenceAveraging averaging = SequenceAveraging::kGeometric);

/// sum over texts of -p_teacher(text) * log p_student(text). Lower means the
/// student agrees more with the teacher.
double cross_entropy(const ScorerBackend& teacher, const ScorerBackend& student, std::span<const std::string> texts,
                     SequenceAveraging averaging = SequenceAveraging::kGeometric);

struct NamedBackend {
  std::string name;
  const ScorerBackend* backend = nullptr;
};

struct ConsistencyReport {
  std::string teacher_id;
  std::vector<std::string> students;
  std::vector<std::string> tasks;
  std::vector<std::size_t> sample_sizes;  ///< per task
  /// values[task][student]
  std::vector<std::vector<double>> values;
  std::uint64_t seed = 0;
  SequenceAveraging averaging = SequenceAveraging::kGeometric;

  /// Mean over tasks, per student.
  std::vector<double> averages() const;
  nlohmann::json to_json() const;
  /// Students as rows, tasks as columns, plus an Avg column.
  std::string to_markdown() const;
};

/// Text used to represent an instance: its prompt, followed by the gold
/// answer when one is known.
std::string instance_text(const TaskInstance& instance, const TaskTemplate* tmpl);

/// Up to `n` instance texts drawn without replacement, kept in input order.
std::vector<std::string> sample_texts(const TaskSuite& suite, std::size_t n, std::uint64_t seed);

ConsistencyReport consistency_report(const NamedBackend& teacher, std::span<const NamedBackend> students,
                                     std::span<const TaskSuite> suites, std::size_t sample_n, std::uint64_t seed,
                                     SequenceAveraging averaging = SequenceAveraging::kGeometric);

struct ScalingRow {
  std::size_t size = 0;
  std::map<std::string, double> accuracy;
  /// nll of the model on the documents it was trained on.
  double train_nll = 0.0;
};

struct ScalingRun {
  std::vector<std::string> tasks;
  std::vector<ScalingRow> rows;
  std::string config_digest;

  /// Header `size,<task>...`, one row per size.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Trains on growing prefixes of a seeded permutation of `dataset` and
/// evaluates every suite at each size.
ScalingRun scaling_curve(std::span<const std::size_t> sizes, std::span<const TrainingDoc> dataset,
                         const NGramConfig& lm_config, std::span<const TaskSuite> suites, std::uint64_t seed);

}  // namespace brd
