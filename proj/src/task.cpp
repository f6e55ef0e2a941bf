// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/task.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;

json TaskInstance::to_json() const {
  json j{{"id", id}, {"candidates", candidates}};
  if (prompt) j["prompt"] = *prompt;
  if (!fields.empty()) j["fields"] = fields;
  if (gold) j["gold"] = *gold;
  return j;
}

void validate_instance(const TaskInstance& instance) {
  if (instance.candidates.size() < 2) {
    throw Error("instance '" + instance.id + "' needs at least 2 candidates");
  }
  std::set<std::string> unique(instance.candidates.begin(), instance.candidates.end());
  if (unique.size() != instance.candidates.size()) {
    throw Error("instance '" + instance.id + "' has duplicate candidates");
  }
  if (instance.gold && unique.count(*instance.gold) == 0) {
    throw Error("instance '" + instance.id + "': gold '" + *instance.gold + "' is not a candidate");
  }
  if (!instance.prompt && instance.fields.empty()) {
    throw Error("instance '" + instance.id + "' needs 'prompt' or 'fields'");
  }
}

Taskset parse_taskset(std::istream& in, const std::string& task_id) {
  Taskset task{task_id, {}};
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = task_id + " line " + std::to_string(line_no) + ": ";
    try {
      const auto j = json::parse(line);
      TaskInstance inst;
      inst.id = j.at("id").get<std::string>();
      if (j.contains("prompt")) inst.prompt = j["prompt"].get<std::string>();
      if (j.contains("fields")) inst.fields = j["fields"].get<std::map<std::string, std::string>>();
      inst.candidates = j.at("candidates").get<std::vector<std::string>>();
      if (j.contains("gold") && !j["gold"].is_null()) inst.gold = j["gold"].get<std::string>();
      validate_instance(inst);
      if (!ids.insert(inst.id).second) throw Error("duplicate instance id '" + inst.id + "'");
      task.instances.push_back(std::move(inst));
    } catch (const std::exception& e) {
      throw Error(where + e.what());
    }
  }
  return task;
}

Taskset load_taskset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open taskset " + path.string());
  return parse_taskset(in, path.stem().string());
}

TaskSuite load_task_suite(const std::filesystem::path& path, const std::filesystem::path& template_dir) {
  TaskSuite suite{load_taskset(path), std::nullopt};
  const auto tmpl_path = template_dir / "tasks" / (suite.taskset.task_id + ".json");
  if (std::filesystem::exists(tmpl_path)) suite.tmpl = TaskTemplate::from_json_file(tmpl_path);
  return suite;
}

void write_taskset(const std::filesystem::path& path, std::span<const TaskInstance> instances) {
  std::string out;
  for (const auto& inst : instances) out += inst.to_json().dump() + "\n";
  write_file(path, out);
}

std::string instance_prompt(const TaskInstance& instance, const TaskTemplate* tmpl) {
  if (instance.prompt) return *instance.prompt;
  if (tmpl == nullptr) throw Error("instance '" + instance.id + "' uses fields but no template was given");
  return render_task_prompt(*tmpl, instance.fields).text;
}

std::string instance_input_text(const TaskInstance& instance) {
  if (instance.fields.empty()) return instance.prompt.value_or("");
  std::string out;
  for (const auto& [name, value] : instance.fields) {
    const auto v = trim(value);
    if (v.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += v;
  }
  return out;
}

}  // namespace brd
