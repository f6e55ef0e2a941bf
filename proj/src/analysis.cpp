// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/analysis.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;

namespace {
std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}
}  // namespace

std::string to_string(SequenceAveraging averaging) {
  return averaging == SequenceAveraging::kGeometric ? "geometric" : "arithmetic";
}

SequenceAveraging parse_sequence_averaging(const std::string& name) {
  if (name == "geometric") return SequenceAveraging::kGeometric;
  if (name == "arithmetic") return SequenceAveraging::kArithmetic;
  throw Error("unknown averaging '" + name + "' (expected geometric or arithmetic)");
}

double sequence_prob(const ScorerBackend& backend, std::string_view text, SequenceAveraging averaging) {
  const auto scored = sequence_logprobs(backend, text);
  if (scored.empty()) throw Error("sequence_prob needs a non-empty text");
  double sum = 0.0;
  for (const auto& t : scored) sum += averaging == SequenceAveraging::kGeometric ? t.logprob : std::exp(t.logprob);
  const double mean = sum / static_cast<double>(scored.size());
  return averaging == SequenceAveraging::kGeometric ? std::exp(mean) : mean;
}

double cross_entropy(const ScorerBackend& teacher, const ScorerBackend& student, std::span<const std::string> texts,
                     SequenceAveraging averaging) {
  if (texts.empty()) throw Error("cross_entropy needs at least one text");
  double total = 0.0;
  for (const auto& text : texts) {
    total -= sequence_prob(teacher, text, averaging) * std::log(sequence_prob(student, text, averaging));
  }
  return total;
}

std::vector<double> ConsistencyReport::averages() const {
  std::vector<double> avg(students.size(), 0.0);
  if (values.empty()) return avg;
  for (const auto& row : values) {
    for (std::size_t s = 0; s < row.size(); ++s) avg[s] += row[s];
  }
  for (auto& v : avg) v /= static_cast<double>(values.size());
  return avg;
}

json ConsistencyReport::to_json() const {
  json per_task = json::array();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    json entry{{"task", tasks[t]}, {"sample_size", sample_sizes[t]}};
    for (std::size_t s = 0; s < students.size(); ++s) entry["cross_entropy"][students[s]] = values[t][s];
    per_task.push_back(std::move(entry));
  }
  json avg = json::object();
  const auto a = averages();
  for (std::size_t s = 0; s < students.size(); ++s) avg[students[s]] = a[s];
  return json{{"teacher", teacher_id}, {"students", students}, {"seed", seed},
              {"averaging", to_string(averaging)}, {"direction", "lower is closer to the teacher"},
              {"tasks", per_task}, {"average", avg}};
}

std::string ConsistencyReport::to_markdown() const {
  std::ostringstream md;
  md << "| model |";
  for (const auto& t : tasks) md << ' ' << t << " |";
  md << " Avg |\n|---|";
  for (std::size_t i = 0; i <= tasks.size(); ++i) md << "---|";
  md << '\n';
  const auto avg = averages();
  for (std::size_t s = 0; s < students.size(); ++s) {
    md << "| " << students[s] << " |";
    for (std::size_t t = 0; t < tasks.size(); ++t) md << ' ' << fixed(values[t][s], 4) << " |";
    md << ' ' << fixed(avg[s], 4) << " |\n";
  }
  md << "\nteacher: " << teacher_id << ", seed: " << seed << ", averaging: " << to_string(averaging)
     << ", samples:";
  for (std::size_t t = 0; t < tasks.size(); ++t) md << ' ' << tasks[t] << '=' << sample_sizes[t];
  md << '\n';
  return md.str();
}

std::string instance_text(const TaskInstance& instance, const TaskTemplate* tmpl) {
  auto text = instance_prompt(instance, tmpl);
  if (instance.gold) text += " " + *instance.gold;
  return text;
}

std::vector<std::string> sample_texts(const TaskSuite& suite, std::size_t n, std::uint64_t seed) {
  const auto& instances = suite.taskset.instances;
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(substream_seed(seed, "sample:" + suite.taskset.task_id));
  rng.shuffle(order);
  order.resize(std::min(n, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<std::string> texts;
  for (auto i : order) texts.push_back(instance_text(instances[i], suite.template_ptr()));
  return texts;
}

ConsistencyReport consistency_report(const NamedBackend& teacher, std::span<const NamedBackend> students,
                                     std::span<const TaskSuite> suites, std::size_t sample_n, std::uint64_t seed,
                                     SequenceAveraging averaging) {
  if (sample_n < 1) throw Error("sample size must be >= 1");
  ConsistencyReport report;
  report.teacher_id = teacher.name;
  report.seed = seed;
  report.averaging = averaging;
  for (const auto& s : students) report.students.push_back(s.name);
  for (const auto& suite : suites) {
    if (suite.taskset.instances.empty()) {
      spdlog::warn("task '{}' is empty, skipped", suite.taskset.task_id);
      continue;
    }
    const auto texts = sample_texts(suite, sample_n, seed);
    std::vector<double> row;
    for (const auto& s : students) row.push_back(cross_entropy(*teacher.backend, *s.backend, texts, averaging));
    report.tasks.push_back(suite.taskset.task_id);
    report.sample_sizes.push_back(texts.size());
    report.values.push_back(std::move(row));
  }
  return report;
}

std::string ScalingRun::to_csv() const {
  std::ostringstream csv;
  csv << "size";
  for (const auto& t : tasks) csv << ',' << t;
  csv << '\n';
  for (const auto& row : rows) {
    csv << row.size;
    for (const auto& t : tasks) csv << ',' << fixed(row.accuracy.at(t), 6);
    csv << '\n';
  }
  return csv.str();
}

json ScalingRun::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) rows_json.push_back(json{{"size", r.size}, {"accuracy", r.accuracy}, {"train_nll", r.train_nll}});
  return json{{"tasks", tasks}, {"rows", rows_json}, {"config_digest", config_digest}};
}

ScalingRun scaling_curve(std::span<const std::size_t> sizes, std::span<const TrainingDoc> dataset,
                         const NGramConfig& lm_config, std::span<const TaskSuite> suites, std::uint64_t seed) {
  if (sizes.empty()) throw Error("scaling curve needs at least one size");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw Error("scaling sizes must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw Error("scaling sizes must be strictly increasing");
    if (sizes[i] > dataset.size()) {
      throw Error("scaling size " + std::to_string(sizes[i]) + " exceeds the " + std::to_string(dataset.size()) +
                  " available documents");
    }
  }
  std::vector<TrainingDoc> docs(dataset.begin(), dataset.end());
  Rng rng(substream_seed(seed, "scaling"));
  rng.shuffle(docs);

  ScalingRun run;
  for (const auto& s : suites) run.tasks.push_back(s.taskset.task_id);
  json digest_input{{"sizes", std::vector<std::size_t>(sizes.begin(), sizes.end())},
                    {"order", lm_config.order},
                    {"k", lm_config.k},
                    {"weights", lm_config.weights},
                    {"lowercase", lm_config.lowercase},
                    {"seed", seed},
                    {"documents", dataset.size()},
                    {"tasks", run.tasks}};
  run.config_digest = sha256_hex(digest_input.dump());

  for (auto size : sizes) {
    const std::span<const TrainingDoc> prefix(docs.data(), size);
    NGramBackend backend(NGramModel::train(prefix, lm_config));
    ScalingRow row;
    row.size = size;
    row.train_nll = nll(backend, prefix);
    for (const auto& suite : suites) {
      const auto report = evaluate(suite.taskset, backend, EvalMode::kBlind, suite.template_ptr());
      row.accuracy[suite.taskset.task_id] = report.accuracy.value_or(std::nan(""));
    }
    run.rows.push_back(std::move(row));
  }
  return run;
}

}  // namespace brd
