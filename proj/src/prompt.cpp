// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/prompt.hpp"

#include <algorithm>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <set>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;

std::string to_string(BehaviorKind kind) { return kind == BehaviorKind::kNer ? "NER" : "QRA"; }

BehaviorKind parse_behavior_kind(const std::string& name) {
  const auto lower = to_lower_ascii(name);
  if (lower == "ner") return BehaviorKind::kNer;
  if (lower == "qra") return BehaviorKind::kQra;
  throw Error("unknown behavior kind '" + name + "'");
}

namespace {

// Template files are stored with LF endings; strip CR so CRLF checkouts
// render the same bytes.
std::string lf_only(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), '\r'), s.end());
  return s;
}

std::string string_field(const json& j, const char* key, bool required = true) {
  if (!j.contains(key)) {
    if (required) throw Error(std::string("template missing field '") + key + "'");
    return {};
  }
  if (!j[key].is_string()) throw Error(std::string("template field '") + key + "' must be a string");
  return lf_only(j[key].get<std::string>());
}

bool is_slot_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

TeachingTemplate TeachingTemplate::from_json_text(const std::string& text) {
  const auto j = json::parse(text);
  TeachingTemplate t;
  t.kind = parse_behavior_kind(string_field(j, "kind"));
  t.instruction = string_field(j, "instruction");
  t.input_header = string_field(j, "input_header");
  t.output_header = string_field(j, "output_header", false);
  if (j.contains("max_sentence_chars")) t.max_sentence_chars = j["max_sentence_chars"].get<std::size_t>();
  for (const auto& shot : j.value("shots", json::array())) {
    t.shots.push_back(Shot{lf_only(shot.at("input").get<std::string>()),
                           lf_only(shot.at("output").get<std::string>())});
  }
  if (t.kind == BehaviorKind::kNer && t.shots.empty()) {
    throw Error("NER teaching template needs at least one shot");
  }
  return t;
}

TeachingTemplate TeachingTemplate::from_json_file(const std::filesystem::path& path) {
  try {
    return from_json_text(read_file(path));
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

TaskTemplate TaskTemplate::from_json_text(const std::string& text) {
  const auto j = json::parse(text);
  TaskTemplate t;
  t.task_id = string_field(j, "task_id");
  t.body = string_field(j, "body");
  t.slots = j.value("slots", std::vector<std::string>{});
  t.candidates = j.value("candidates", std::vector<std::string>{});
  t.defaults = j.value("defaults", std::map<std::string, std::string>{});
  t.validate();
  return t;
}

TaskTemplate TaskTemplate::from_json_file(const std::filesystem::path& path) {
  try {
    return from_json_text(read_file(path));
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void TaskTemplate::validate() const {
  for (const auto& name : placeholders(body)) {
    if (std::find(slots.begin(), slots.end(), name) == slots.end()) {
      throw Error("template '" + task_id + "': placeholder {" + name + "} is not a declared slot");
    }
  }
  std::set<std::string> unique(candidates.begin(), candidates.end());
  if (unique.size() != candidates.size()) {
    throw Error("template '" + task_id + "': duplicate candidate answers");
  }
}

std::vector<std::string> placeholders(const std::string& body) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < body.size() && is_slot_char(body[j])) ++j;
    if (j > i + 1 && j < body.size() && body[j] == '}') {
      auto name = body.substr(i + 1, j - i - 1);
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      i = j;
    }
  }
  return names;
}

RenderedPrompt make_prompt(std::string text, std::string template_id) {
  auto hash = sha256_hex(text);
  return RenderedPrompt{std::move(text), std::move(hash), std::move(template_id)};
}

RenderedPrompt render_teaching_prompt(const TeachingTemplate& tmpl, const Sentence& sentence) {
  if (sentence.text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error("cannot render a prompt for an empty sentence");
  }
  if (sentence.text.size() > tmpl.max_sentence_chars) {
    throw Error("sentence of " + std::to_string(sentence.text.size()) +
                " chars exceeds the prompt budget of " + std::to_string(tmpl.max_sentence_chars));
  }
  std::vector<std::string_view> lines;
  lines.push_back(tmpl.instruction);
  auto block = [&](std::string_view input, const std::string* output) {
    if (!tmpl.input_header.empty()) lines.push_back(tmpl.input_header);
    lines.push_back(input);
    if (!tmpl.output_header.empty()) lines.push_back(tmpl.output_header);
    if (output != nullptr) lines.push_back(*output);
  };
  for (const auto& shot : tmpl.shots) block(shot.input, &shot.output);
  block(sentence.text, nullptr);

  std::string text;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) text.push_back('\n');
    text += lines[i];
  }
  return make_prompt(std::move(text), to_string(tmpl.kind));
}

RenderedPrompt render_task_prompt(const TaskTemplate& tmpl,
                                  const std::map<std::string, std::string>& fields) {
  for (const auto& [name, value] : fields) {
    if (std::find(tmpl.slots.begin(), tmpl.slots.end(), name) == tmpl.slots.end()) {
      throw Error("template '" + tmpl.task_id + "' has no slot '" + name + "'");
    }
  }
  std::map<std::string, std::string> resolved;
  for (const auto& slot : tmpl.slots) {
    if (auto it = fields.find(slot); it != fields.end()) {
      resolved[slot] = it->second;
    } else if (auto d = tmpl.defaults.find(slot); d != tmpl.defaults.end()) {
      resolved[slot] = d->second;
    } else {
      throw Error("template '" + tmpl.task_id + "': missing value for slot '" + slot + "'");
    }
  }

  // Single left-to-right pass: substituted values are never re-scanned.
  std::string out;
  const auto& body = tmpl.body;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_slot_char(body[j])) ++j;
      if (j > i + 1 && j < body.size() && body[j] == '}') {
        out += resolved.at(body.substr(i + 1, j - i - 1));
        i = j;
        continue;
      }
    }
    out.push_back(body[i]);
  }
  return make_prompt(std::move(out), tmpl.task_id);
}

std::filesystem::path default_template_dir() {
  if (const char* env = std::getenv("BRD_DATA_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env) / "templates";
  }
  return std::filesystem::path(BRD_DEFAULT_DATA_DIR) / "templates";
}

}  // namespace brd
