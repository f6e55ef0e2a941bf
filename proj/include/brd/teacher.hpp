// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "brd/corpus.hpp"
#include "brd/http.hpp"
#include "brd/prompt.hpp"

namespace brd {

enum class TeacherBackend { kMock, kRemote };

struct TeacherConfig {
  TeacherBackend backend = TeacherBackend::kMock;
  /// scheme://host[:port], e.g. http://127.0.0.1:8000
  std::string endpoint;
  std::string path = "/v1/chat/completions";
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
  int max_in_flight = 4;
  int retry_limit = 3;
  int backoff_base_ms = 500;
  double timeout_s = 60.0;

  void validate() const;
  std::string teacher_id() const;

  static TeacherConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ValidationRules {
  /// Whitespace-separated tokens allowed in a response.
  std::size_t max_response_tokens = 512;
};

struct BehaviorRecord {
  std::string passage_id;
  std::size_t sentence_index = 0;
  BehaviorKind kind = BehaviorKind::kNer;
  std::string sentence;
  std::string response;
  std::string prompt_hash;
  std::string teacher_id;
  /// Empty when accepted; otherwise transport, protocol, empty, too_long or echo.
  std::string rejection;

  bool accepted() const { return rejection.empty(); }
  std::string status() const { return accepted() ? "accepted" : "rejected:" + rejection; }

  nlohmann::json to_json() const;
  static BehaviorRecord from_json(const nlohmann::json& j);
};

using RecordKey = std::tuple<std::string, std::size_t, BehaviorKind>;
inline RecordKey key_of(const BehaviorRecord& r) { return {r.passage_id, r.sentence_index, r.kind}; }

/// Outcome of asking the teacher for one completion.
struct Completion {
  std::string text;
  /// Empty on success; transport, protocol or empty otherwise.
  std::string failure;
  int attempts = 0;
};

/// Deterministic stand-in teacher. NER reports maximal capitalized spans and
/// numeric tokens; QRA asks about the first entity and answers with the
/// sentence itself.
std::string mock_teacher(const std::string& sentence, BehaviorKind kind);

/// Capitalized-span and numeric-token extraction used by mock_teacher.
std::vector<std::string> mock_entity_spans(const std::string& sentence);

/// Mock answer for a multiple-choice prompt: the candidate mentioned most
/// often (whole word, case-insensitive) in the instance input, first on ties.
std::string mock_task_answer(const std::string& input_text, const std::vector<std::string>& candidates);

class Teacher {
 public:
  explicit Teacher(TeacherConfig config, std::shared_ptr<Transport> transport = nullptr);

  const TeacherConfig& config() const { return config_; }
  std::string id() const { return config_.teacher_id(); }

  /// Chat completion with retry and exponential backoff. Remote only.
  Completion complete(const std::string& prompt_text) const;

  BehaviorRecord generate_behavior(const RenderedPrompt& prompt, const std::string& passage_id,
                                   const Sentence& sentence, BehaviorKind kind) const;

  /// Picks one of `candidates` for a task prompt. Remote replies are matched
  /// to the candidate they start with; std::nullopt means the reply was
  /// unusable and `failure` says why.
  std::optional<std::string> answer_task(const RenderedPrompt& prompt, const std::string& input_text,
                                         const std::vector<std::string>& candidates,
                                         std::string* failure = nullptr) const;

 private:
  TeacherConfig config_;
  std::shared_ptr<Transport> transport_;
};

BehaviorRecord generate_behavior(const TeacherConfig& config, const RenderedPrompt& prompt,
                                 const std::string& passage_id, const Sentence& sentence,
                                 BehaviorKind kind);

BehaviorRecord validate_response(BehaviorRecord record, const ValidationRules& rules = {});

/// Destination for synthesized records. Knows which keys it already holds so
/// synthesis can resume.
class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual bool contains(const RecordKey& key) const = 0;
  virtual void append(const BehaviorRecord& record) = 0;
};

class MemoryRecordSink : public RecordSink {
 public:
  bool contains(const RecordKey& key) const override { return keys_.count(key) > 0; }
  void append(const BehaviorRecord& record) override;
  const std::vector<BehaviorRecord>& records() const { return records_; }

 private:
  std::vector<BehaviorRecord> records_;
  std::set<RecordKey> keys_;
};

/// Appends one JSON object per line, flushing after each record.
class JsonlRecordSink : public RecordSink {
 public:
  explicit JsonlRecordSink(const std::filesystem::path& path);
  bool contains(const RecordKey& key) const override { return keys_.count(key) > 0; }
  void append(const BehaviorRecord& record) override;
  std::size_t existing() const { return existing_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::set<RecordKey> keys_;
  std::size_t existing_ = 0;
};

std::vector<BehaviorRecord> load_behaviors(const std::filesystem::path& path);

struct TeachingTemplates {
  TeachingTemplate ner;
  TeachingTemplate qra;

  const TeachingTemplate& for_kind(BehaviorKind kind) const {
    return kind == BehaviorKind::kNer ? ner : qra;
  }
  static TeachingTemplates load(const std::filesystem::path& template_dir);
};

struct SynthesisSummary {
  std::size_t requested = 0;
  std::size_t skipped = 0;
  std::map<BehaviorKind, std::size_t> accepted;
  std::map<BehaviorKind, std::size_t> rejected;
  std::map<std::string, std::size_t> rejected_by_reason;

  std::size_t total_accepted() const;
  std::size_t total_rejected() const;
};

/// Generates one record per (sentence, kind) that the sink does not already
/// hold. Requests may overlap up to config.max_in_flight, but records reach
/// the sink in passage order, sentence order, NER before QRA.
SynthesisSummary synthesize(std::span<const Passage> passages, const std::vector<BehaviorKind>& kinds,
                            const Teacher& teacher, const TeachingTemplates& templates,
                            RecordSink& sink, const ValidationRules& rules = {});

}  // namespace brd
