// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "brd/corpus.hpp"

namespace brd {

enum class BehaviorKind { kNer, kQra };

std::string to_string(BehaviorKind kind);
BehaviorKind parse_behavior_kind(const std::string& name);

struct Shot {
  std::string input;
  std::string output;
};

/// Few-shot prompt that asks the teacher to read one sentence.
///
/// Rendered layout, one element per line:
///   instruction
///   input_header / shot input / output_header / shot output   (per shot)
///   input_header / sentence / output_header
/// An empty header contributes no line, which is how the question-answering
/// prompt ends right after the sentence.
struct TeachingTemplate {
  BehaviorKind kind = BehaviorKind::kNer;
  std::string instruction;
  std::vector<Shot> shots;
  std::string input_header;
  std::string output_header;
  std::size_t max_sentence_chars = 4000;

  static TeachingTemplate from_json_file(const std::filesystem::path& path);
  static TeachingTemplate from_json_text(const std::string& text);
};

/// Downstream task prompt with `{slot}` placeholders.
struct TaskTemplate {
  std::string task_id;
  std::vector<std::string> slots;
  std::string body;
  std::vector<std::string> candidates;
  /// Slots that may be omitted by the caller, with their fill-in values.
  std::map<std::string, std::string> defaults;

  static TaskTemplate from_json_file(const std::filesystem::path& path);
  static TaskTemplate from_json_text(const std::string& text);
  /// Throws if a placeholder is not a declared slot or candidates repeat.
  void validate() const;
};

struct RenderedPrompt {
  std::string text;
  std::string hash;
  std::string template_id;
};

RenderedPrompt make_prompt(std::string text, std::string template_id);

RenderedPrompt render_teaching_prompt(const TeachingTemplate& tmpl, const Sentence& sentence);
RenderedPrompt render_task_prompt(const TaskTemplate& tmpl,
                                  const std::map<std::string, std::string>& fields);

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(const std::string& body);

/// Directory holding ner.json, qra.json and tasks/*.json. Honors BRD_DATA_DIR.
std::filesystem::path default_template_dir();

}  // namespace brd
