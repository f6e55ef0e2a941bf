// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/teacher.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config

void TeacherConfig::validate() const {
  if (backend == TeacherBackend::kRemote) {
    if (endpoint.empty()) throw Error("remote teacher requires an endpoint");
    if (model.empty()) throw Error("remote teacher requires a model name");
  }
  if (temperature < 0.0) throw Error("teacher temperature must be >= 0");
  if (max_tokens <= 0) throw Error("teacher max_tokens must be positive");
  if (max_in_flight <= 0) throw Error("teacher max_in_flight must be positive");
  if (retry_limit < 0) throw Error("teacher retry_limit must be >= 0");
  if (backoff_base_ms < 0) throw Error("teacher backoff_base_ms must be >= 0");
  if (timeout_s <= 0.0) throw Error("teacher timeout must be positive");
}

std::string TeacherConfig::teacher_id() const {
  if (backend == TeacherBackend::kMock) return "mock-v1";
  return "remote:" + model + "@" + endpoint;
}

TeacherConfig TeacherConfig::from_json(const json& j) {
  TeacherConfig c;
  const auto backend = j.value("backend", std::string("mock"));
  if (backend == "mock") {
    c.backend = TeacherBackend::kMock;
  } else if (backend == "remote") {
    c.backend = TeacherBackend::kRemote;
  } else {
    throw Error("unknown teacher backend '" + backend + "'");
  }
  c.endpoint = j.value("endpoint", c.endpoint);
  c.path = j.value("path", c.path);
  c.model = j.value("model", c.model);
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.retry_limit = j.value("retry_limit", c.retry_limit);
  c.backoff_base_ms = j.value("backoff_base_ms", c.backoff_base_ms);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  return c;
}

json TeacherConfig::to_json() const {
  return json{{"backend", backend == TeacherBackend::kMock ? "mock" : "remote"},
              {"endpoint", endpoint},
              {"path", path},
              {"model", model},
              {"temperature", temperature},
              {"max_tokens", max_tokens},
              {"max_in_flight", max_in_flight},
              {"retry_limit", retry_limit},
              {"backoff_base_ms", backoff_base_ms},
              {"timeout_s", timeout_s}};
}

// ---------------------------------------------------------------------------
// records

json BehaviorRecord::to_json() const {
  return json{{"passage_id", passage_id}, {"sentence_index", sentence_index},
              {"kind", to_string(kind)},   {"sentence", sentence},
              {"response", response},      {"prompt_hash", prompt_hash},
              {"teacher_id", teacher_id},  {"status", status()}};
}

BehaviorRecord BehaviorRecord::from_json(const json& j) {
  BehaviorRecord r;
  r.passage_id = j.at("passage_id").get<std::string>();
  r.sentence_index = j.at("sentence_index").get<std::size_t>();
  r.kind = parse_behavior_kind(j.at("kind").get<std::string>());
  r.sentence = j.at("sentence").get<std::string>();
  r.response = j.at("response").get<std::string>();
  r.prompt_hash = j.value("prompt_hash", std::string());
  r.teacher_id = j.value("teacher_id", std::string());
  const auto status = j.at("status").get<std::string>();
  if (status == "accepted") {
    r.rejection.clear();
  } else if (status.rfind("rejected:", 0) == 0 && status.size() > 9) {
    r.rejection = status.substr(9);
  } else {
    throw Error("unknown record status '" + status + "'");
  }
  return r;
}

// ---------------------------------------------------------------------------
// mock

namespace {

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

bool is_numeric_core(std::string_view s) {
  if (s.empty() || !(s.front() >= '0' && s.front() <= '9')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return (c >= '0' && c <= '9') || c == ',' || c == '.'; });
}

const std::set<std::string>& initial_stopwords() {
  static const std::set<std::string> words = {
      "A",     "After", "All",   "Also",  "An",    "And",   "As",   "At",    "But",  "By",
      "Each",  "Every", "For",   "From",  "He",    "Her",   "Here", "His",   "However",
      "I",     "If",    "In",    "It",    "Its",   "Many",  "Most", "My",    "No",   "Not",
      "Of",    "On",    "Or",    "Our",   "She",   "So",    "Some", "That",  "The",  "Their",
      "Then",  "There", "These", "They",  "This",  "Those", "To",   "Today", "We",   "What",
      "When",  "Which", "While", "Who",   "With",  "Yet",   "You",  "Your"};
  return words;
}

struct WordView {
  std::string raw;
  std::string core;
  bool leading_punct = false;
  bool trailing_punct = false;
};

std::vector<WordView> words_of(const std::string& sentence) {
  std::vector<WordView> words;
  std::istringstream in(sentence);
  std::string raw;
  while (in >> raw) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && is_ascii_punct(raw[b])) ++b;
    while (e > b && is_ascii_punct(raw[e - 1])) --e;
    words.push_back(WordView{raw, raw.substr(b, e - b), b > 0, e < raw.size()});
  }
  return words;
}

}  // namespace

std::vector<std::string> mock_entity_spans(const std::string& sentence) {
  const auto words = words_of(sentence);
  std::vector<std::string> spans;
  std::string current;
  auto close = [&] {
    if (!current.empty() && std::find(spans.begin(), spans.end(), current) == spans.end()) {
      spans.push_back(current);
    }
    current.clear();
  };
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    const bool capitalized = !w.core.empty() && w.core.front() >= 'A' && w.core.front() <= 'Z';
    if (capitalized && !(i == 0 && initial_stopwords().count(w.core) > 0)) {
      if (w.leading_punct) close();
      if (!current.empty()) current.push_back(' ');
      current += w.core;
      if (w.trailing_punct) close();
    } else if (is_numeric_core(w.core)) {
      close();
      current = w.core;
      close();
    } else {
      close();
    }
  }
  close();
  return spans;
}

std::string mock_teacher(const std::string& sentence, BehaviorKind kind) {
  const auto spans = mock_entity_spans(sentence);
  if (kind == BehaviorKind::kNer) {
    if (spans.empty()) return "In this sentence, there are no named entities.";
    std::string out;
    for (const auto& span : spans) {
      if (!out.empty()) out.push_back(' ');
      out += "In this sentence, \"" + span + "\" is a named entity.";
    }
    return out;
  }
  std::string focus;
  if (!spans.empty()) {
    focus = spans.front();
  } else {
    const auto words = words_of(sentence);
    if (!words.empty()) focus = words.front().core.empty() ? words.front().raw : words.front().core;
  }
  return "Question:\nWhat is stated about \"" + focus + "\"?\nAnswer:\n" + sentence;
}

std::string mock_task_answer(const std::string& input_text, const std::vector<std::string>& candidates) {
  if (candidates.empty()) throw Error("mock task answer needs at least one candidate");
  std::size_t best = 0;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = count_whole_words(input_text, candidates[i]);
    if (c > best_count) {
      best = i;
      best_count = c;
    }
  }
  return candidates[best];
}

// ---------------------------------------------------------------------------
// teacher

Teacher::Teacher(TeacherConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
  if (config_.backend == TeacherBackend::kRemote && !transport_) {
    transport_ = std::make_shared<HttpTransport>(config_.endpoint, config_.timeout_s);
  }
}

Completion Teacher::complete(const std::string& prompt_text) const {
  if (config_.backend != TeacherBackend::kRemote) throw Error("complete() needs a remote teacher");
  const json request{{"model", config_.model},
                     {"messages", json::array({json{{"role", "user"}, {"content", prompt_text}}})},
                     {"temperature", config_.temperature},
                     {"max_tokens", config_.max_tokens}};
  const auto body = request.dump();

  Completion result;
  HttpReply reply;
  for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
    if (attempt > 0) {
      const auto delay = static_cast<long long>(config_.backoff_base_ms) << (attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    ++result.attempts;
    reply = transport_->post(config_.path, body);
    const bool retryable = reply.status == 0 || reply.status == 429 || reply.status >= 500;
    if (!retryable) break;
    spdlog::debug("teacher request failed (status {} {}), attempt {}", reply.status, reply.error,
                  result.attempts);
  }
  if (reply.status != 200) {
    result.failure = "transport";
    return result;
  }
  try {
    const auto parsed = json::parse(reply.body);
    result.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    result.failure = "protocol";
    return result;
  }
  if (trim(result.text).empty()) result.failure = "empty";
  return result;
}

BehaviorRecord Teacher::generate_behavior(const RenderedPrompt& prompt, const std::string& passage_id,
                                          const Sentence& sentence, BehaviorKind kind) const {
  BehaviorRecord record;
  record.passage_id = passage_id;
  record.sentence_index = sentence.index;
  record.kind = kind;
  record.sentence = sentence.text;
  record.prompt_hash = prompt.hash;
  record.teacher_id = id();
  if (config_.backend == TeacherBackend::kMock) {
    record.response = mock_teacher(sentence.text, kind);
  } else {
    auto completion = complete(prompt.text);
    record.response = std::move(completion.text);
    record.rejection = completion.failure;
  }
  if (record.accepted() && trim(record.response).empty()) record.rejection = "empty";
  return record;
}

std::optional<std::string> Teacher::answer_task(const RenderedPrompt& prompt, const std::string& input_text,
                                                const std::vector<std::string>& candidates,
                                                std::string* failure) const {
  if (config_.backend == TeacherBackend::kMock) return mock_task_answer(input_text, candidates);
  const auto completion = complete(prompt.text);
  if (!completion.failure.empty()) {
    if (failure != nullptr) *failure = completion.failure;
    return std::nullopt;
  }
  const auto reply = to_lower_ascii(trim(completion.text));
  for (const auto& c : candidates) {
    const auto lc = to_lower_ascii(c);
    if (reply.rfind(lc, 0) == 0 &&
        (reply.size() == lc.size() || !std::isalnum(static_cast<unsigned char>(reply[lc.size()])))) {
      return c;
    }
  }
  if (failure != nullptr) *failure = "unmatched";
  return std::nullopt;
}

BehaviorRecord generate_behavior(const TeacherConfig& config, const RenderedPrompt& prompt,
                                 const std::string& passage_id, const Sentence& sentence,
                                 BehaviorKind kind) {
  return Teacher(config).generate_behavior(prompt, passage_id, sentence, kind);
}

BehaviorRecord validate_response(BehaviorRecord record, const ValidationRules& rules) {
  if (!record.accepted()) return record;
  const auto trimmed = trim(record.response);
  if (trimmed.empty()) {
    record.rejection = "empty";
    return record;
  }
  std::istringstream in(record.response);
  std::size_t tokens = 0;
  std::string tok;
  while (in >> tok) ++tokens;
  if (tokens > rules.max_response_tokens) {
    record.rejection = "too_long";
  } else if (trimmed == trim(record.sentence)) {
    record.rejection = "echo";
  }
  return record;
}

// ---------------------------------------------------------------------------
// sinks

void MemoryRecordSink::append(const BehaviorRecord& record) {
  if (!keys_.insert(key_of(record)).second) throw Error("duplicate behavior record key");
  records_.push_back(record);
}

JsonlRecordSink::JsonlRecordSink(const std::filesystem::path& path) : path_(path) {
  if (std::filesystem::exists(path)) {
    for (const auto& r : load_behaviors(path)) {
      keys_.insert(key_of(r));
      ++existing_;
    }
  } else if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw Error("behavior sink not writable: " + path.string());
}

void JsonlRecordSink::append(const BehaviorRecord& record) {
  if (!keys_.insert(key_of(record)).second) throw Error("duplicate behavior record key");
  out_ << record.to_json().dump() << '\n';
  out_.flush();
  if (!out_) throw Error("write to behavior sink failed: " + path_.string());
}

std::vector<BehaviorRecord> load_behaviors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open behaviors " + path.string());
  std::vector<BehaviorRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(BehaviorRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

TeachingTemplates TeachingTemplates::load(const std::filesystem::path& template_dir) {
  return TeachingTemplates{TeachingTemplate::from_json_file(template_dir / "ner.json"),
                           TeachingTemplate::from_json_file(template_dir / "qra.json")};
}

// ---------------------------------------------------------------------------
// synthesis

std::size_t SynthesisSummary::total_accepted() const {
  std::size_t n = 0;
  for (const auto& [k, v] : accepted) n += v;
  return n;
}

std::size_t SynthesisSummary::total_rejected() const {
  std::size_t n = 0;
  for (const auto& [k, v] : rejected) n += v;
  return n;
}

SynthesisSummary synthesize(std::span<const Passage> passages, const std::vector<BehaviorKind>& kinds,
                            const Teacher& teacher, const TeachingTemplates& templates,
                            RecordSink& sink, const ValidationRules& rules) {
  if (kinds.empty()) throw Error("synthesize needs at least one behavior kind");
  // NER before QRA regardless of how the kinds were listed
  const bool want_ner = std::find(kinds.begin(), kinds.end(), BehaviorKind::kNer) != kinds.end();
  const bool want_qra = std::find(kinds.begin(), kinds.end(), BehaviorKind::kQra) != kinds.end();

  struct Job {
    const Passage* passage;
    const Sentence* sentence;
    BehaviorKind kind;
  };
  SynthesisSummary summary;
  std::vector<Job> jobs;
  for (const auto& passage : passages) {
    for (const auto& sentence : passage.sentences) {
      for (auto kind : {BehaviorKind::kNer, BehaviorKind::kQra}) {
        if ((kind == BehaviorKind::kNer && !want_ner) || (kind == BehaviorKind::kQra && !want_qra)) {
          continue;
        }
        if (sink.contains({passage.id, sentence.index, kind})) {
          ++summary.skipped;
          continue;
        }
        jobs.push_back(Job{&passage, &sentence, kind});
      }
    }
  }
  summary.requested = jobs.size();
  if (jobs.empty()) return summary;

  auto run_job = [&](const Job& job) {
    const auto prompt = render_teaching_prompt(templates.for_kind(job.kind), *job.sentence);
    return validate_response(
        teacher.generate_behavior(prompt, job.passage->id, *job.sentence, job.kind), rules);
  };
  auto commit = [&](const BehaviorRecord& record) {
    sink.append(record);
    if (record.accepted()) {
      ++summary.accepted[record.kind];
    } else {
      ++summary.rejected[record.kind];
      ++summary.rejected_by_reason[record.rejection];
    }
  };

  const auto workers = std::min<std::size_t>(
      teacher.config().backend == TeacherBackend::kMock ? 1 : static_cast<std::size_t>(teacher.config().max_in_flight),
      jobs.size());
  if (workers <= 1) {
    for (const auto& job : jobs) commit(run_job(job));
    return summary;
  }

  // Workers fill result slots in any order; this thread drains the slots in
  // canonical order, so the sink sees a canonical prefix even on abort.
  std::vector<std::optional<BehaviorRecord>> results(jobs.size());
  std::exception_ptr worker_error;
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next_job{0};
  std::atomic<bool> stop{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (!stop.load()) {
          const auto i = next_job.fetch_add(1);
          if (i >= jobs.size()) return;
          std::optional<BehaviorRecord> record;
          try {
            record = run_job(jobs[i]);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!worker_error) worker_error = std::current_exception();
            stop = true;
            ready.notify_all();
            return;
          }
          std::lock_guard lock(mu);
          results[i] = std::move(record);
          ready.notify_all();
        }
      });
    }

    std::exception_ptr drain_error;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return results[i].has_value() || worker_error != nullptr; });
      if (!results[i].has_value()) break;
      auto record = std::move(*results[i]);
      results[i].reset();
      lock.unlock();
      try {
        commit(record);
      } catch (...) {
        drain_error = std::current_exception();
        stop = true;
        break;
      }
    }
    stop = true;
    pool.clear();  // joins
    if (drain_error) std::rethrow_exception(drain_error);
  }
  if (worker_error) std::rethrow_exception(worker_error);
  return summary;
}

}  // namespace brd
