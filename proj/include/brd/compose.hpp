// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "brd/corpus.hpp"
#include "brd/task.hpp"
#include "brd/teacher.hpp"

namespace brd {

enum class DocKind { kOri, kNer, kQra, kSentNer, kSentQra, kTaskPseudo, kTaskGold, kTaskBrd };

std::string to_string(DocKind kind);
DocKind parse_doc_kind(const std::string& name);

struct TrainingDoc {
  DocKind kind = DocKind::kOri;
  std::string source_id;
  std::string text;

  bool operator==(const TrainingDoc&) const = default;
  nlohmann::json to_json() const;
  static TrainingDoc from_json(const nlohmann::json& j);
};

enum class CompositionLevel { kPassage, kSentence };

struct MixSpec {
  /// Document-count ratios. Kinds not listed get ratio 0.
  std::map<DocKind, double> ratios{{DocKind::kOri, 1.0}, {DocKind::kNer, 1.0}, {DocKind::kQra, 1.0}};
  std::uint64_t seed = 42;
  CompositionLevel level = CompositionLevel::kPassage;
  std::string delimiter = "<sep>";

  void validate() const;
};

struct FilterSpec {
  bool drop_ner = false;
  bool drop_qra = false;
  bool drop_sentiment = false;
  std::vector<std::string> sentiment_words{"positive", "negative", "neutral"};
};

/// The delimiter as it appears between segments: one space on each side.
std::string padded(const std::string& delimiter);

/// s_1 D R(s_1) D s_2 D R(s_2) ... D R(s_n) with D the padded delimiter.
/// Every sentence needs an accepted record of `kind`; content containing the
/// delimiter is refused so the layout can be split back apart.
TrainingDoc compose_behavior_passage(const Passage& passage, std::span<const BehaviorRecord> records,
                                     BehaviorKind kind, const std::string& delimiter = "<sep>");

TrainingDoc compose_original(const Passage& passage, const std::string& delimiter = "<sep>");

/// One "s_i D R(s_i)" document per sentence, shuffled with `seed`.
std::vector<TrainingDoc> sentence_level_variant(std::span<const Passage> passages,
                                                std::span<const BehaviorRecord> records,
                                                BehaviorKind kind, const std::string& delimiter,
                                                std::uint64_t seed);

struct QraParts {
  std::string question;
  std::string answer;
};

/// Splits a question/answer response at its "Answer:" marker. Without a
/// marker both parts are the whole response.
QraParts split_qra(const std::string& response);

/// True for QRA records asking about attitude or answering with a sentiment word.
bool is_sentiment_record(const BehaviorRecord& record, const std::vector<std::string>& words);

std::vector<BehaviorRecord> apply_filters(std::vector<BehaviorRecord> records, const FilterSpec& spec);

struct MixResult {
  std::vector<TrainingDoc> docs;
  nlohmann::json manifest;
};

/// Takes floor(u * ratio) documents of each kind, where u is the smallest
/// available/ratio over kinds with a positive ratio, then shuffles them
/// together with the seed's "mix" substream.
MixResult mix(const std::map<DocKind, std::vector<TrainingDoc>>& streams, const MixSpec& spec);

/// Document streams for a behavior dataset: ORI plus NER/QRA (passage level)
/// or SENT_NER/SENT_QRA (sentence level). Passages without a complete set of
/// accepted records for a kind are left out of that kind's stream.
struct DatasetStreams {
  std::map<DocKind, std::vector<TrainingDoc>> streams;
  std::map<DocKind, std::size_t> incomplete_passages;
};
DatasetStreams build_streams(std::span<const Passage> passages, std::span<const BehaviorRecord> records,
                             const MixSpec& spec);

/// Filters the records, builds the streams and mixes them together with any
/// `extra` streams (task documents). Ratios of dropped kinds are forced to
/// zero. The manifest also records the filters.
MixResult build_dataset(std::span<const Passage> passages, std::vector<BehaviorRecord> records,
                        MixSpec spec, const FilterSpec& filters,
                        const std::map<DocKind, std::vector<TrainingDoc>>& extra = {});

void write_dataset(const std::filesystem::path& path, const MixResult& result);
std::vector<TrainingDoc> load_dataset(const std::filesystem::path& path);

struct TaskComposeSummary {
  std::size_t composed = 0;
  std::size_t skipped = 0;
};

/// Teacher pseudo-labels: prompt text, a space, then the teacher's answer.
std::vector<TrainingDoc> compose_task_pseudo(std::span<const TaskInstance> instances, const Teacher& teacher,
                                             const TaskTemplate* tmpl, TaskComposeSummary* summary = nullptr);

/// Gold labels: prompt text, a space, then the gold answer.
std::vector<TrainingDoc> compose_task_gold(std::span<const TaskInstance> instances, const TaskTemplate* tmpl);

/// Reading distillation over the task inputs themselves.
std::vector<TrainingDoc> compose_brd2(std::span<const TaskInstance> instances, const Teacher& teacher,
                                      const TeachingTemplates& templates,
                                      const std::vector<BehaviorKind>& kinds,
                                      const std::string& delimiter = "<sep>",
                                      const SegmenterConfig& segmenter = {},
                                      TaskComposeSummary* summary = nullptr);

/// Neural-student settings carried in every manifest as metadata.
nlohmann::json training_metadata();

}  // namespace brd
