// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brd/prompt.hpp"

namespace brd {

/// One multiple-choice item. Either `prompt` is given verbatim, or `fields`
/// fill a TaskTemplate at prediction time.
struct TaskInstance {
  std::string id;
  std::optional<std::string> prompt;
  std::map<std::string, std::string> fields;
  std::vector<std::string> candidates;
  std::optional<std::string> gold;

  nlohmann::json to_json() const;
};

struct Taskset {
  std::string task_id;
  std::vector<TaskInstance> instances;
};

/// A taskset plus the template its `fields` instances render through.
struct TaskSuite {
  Taskset taskset;
  std::optional<TaskTemplate> tmpl;

  const TaskTemplate* template_ptr() const { return tmpl ? &*tmpl : nullptr; }
};

/// Loads a taskset and, when `template_dir/tasks/<task id>.json` exists, its template.
TaskSuite load_task_suite(const std::filesystem::path& path, const std::filesystem::path& template_dir);

/// Reads task JSONL. The task id is the file stem.
Taskset load_taskset(const std::filesystem::path& path);
Taskset parse_taskset(std::istream& in, const std::string& task_id);
void write_taskset(const std::filesystem::path& path, std::span<const TaskInstance> instances);

/// Throws unless the instance has >= 2 distinct candidates and its gold (if
/// any) is one of them.
void validate_instance(const TaskInstance& instance);

/// Prompt text for an instance; `tmpl` is required when the instance uses fields.
std::string instance_prompt(const TaskInstance& instance, const TaskTemplate* tmpl);

/// The instance's own input text (field values in key order, or the prompt),
/// used when the input itself is read by the teacher.
std::string instance_input_text(const TaskInstance& instance);

}  // namespace brd
