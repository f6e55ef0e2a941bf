// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0
//
// brd: command-line driver for the reading-distillation pipeline.
//
//   brd synthesize   teacher responses per sentence -> behaviors JSONL
//   brd compose      behaviors + corpus -> training set JSONL + manifest.json
//   brd train        training set -> n-gram model JSON
//   brd eval         multiple-choice evaluation, blind or relaxed
//   brd analyze      teacher/student cross entropy, data-size scaling
//   brd demo         all of the above on the bundled fixtures
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "brd/pipeline.hpp"
#include "brd/util.hpp"

namespace fs = std::filesystem;
using namespace brd;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config_path;
  std::string corpus, format, behaviors, dataset, model, reports, templates, abbreviations;
  std::vector<std::string> tasks;
  std::optional<std::uint64_t> seed;

  // teacher
  std::string backend;
  std::string endpoint, teacher_path, teacher_model;
  std::optional<double> temperature, timeout;
  std::optional<int> max_tokens, max_in_flight, retries, backoff_ms;
  std::vector<std::string> kinds;

  // compose
  bool sentence_level = false, drop_ner = false, drop_qra = false, drop_sentiment = false;
  std::string ratios, delimiter;
  std::vector<std::string> task_gold, task_pseudo, brd2;

  // train
  std::optional<int> order;
  std::optional<double> k;
  std::vector<double> weights;

  // eval
  std::string mode = "blind";
  std::string scorer = "builtin";
  std::string scorer_endpoint, scorer_path = "/v1/logprobs";
  std::string train_split;
  std::string split_input, split_dir;
  std::vector<double> split_fractions{0.8, 0.1, 0.1};

  // analyze
  bool consistency = false;
  std::vector<std::size_t> scaling_sizes;
  std::string teacher_model_path;
  std::vector<std::string> students;
  std::size_t sample_n = 1000;
  std::string averaging = "geometric";

  // demo
  std::string demo_out;
  std::string demo_data;
};

PipelineConfig build_config(const Options& o) {
  PipelineConfig c = o.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(o.config_path);
  if (!o.corpus.empty()) c.paths.corpus = o.corpus;
  if (!o.format.empty()) c.paths.corpus_format = o.format;
  if (!o.behaviors.empty()) c.paths.behaviors = o.behaviors;
  if (!o.dataset.empty()) c.paths.dataset = o.dataset;
  if (!o.model.empty()) c.paths.model = o.model;
  if (!o.reports.empty()) c.paths.reports = o.reports;
  if (!o.templates.empty()) c.paths.templates = o.templates;
  if (!o.abbreviations.empty()) c.paths.abbreviations = o.abbreviations;
  if (!o.tasks.empty()) c.paths.tasks.assign(o.tasks.begin(), o.tasks.end());
  if (o.seed) c.seed = *o.seed;

  if (o.backend == "mock") c.teacher.backend = TeacherBackend::kMock;
  if (o.backend == "remote") c.teacher.backend = TeacherBackend::kRemote;
  if (!o.endpoint.empty()) c.teacher.endpoint = o.endpoint;
  if (!o.teacher_path.empty()) c.teacher.path = o.teacher_path;
  if (!o.teacher_model.empty()) c.teacher.model = o.teacher_model;
  if (o.temperature) c.teacher.temperature = *o.temperature;
  if (o.timeout) c.teacher.timeout_s = *o.timeout;
  if (o.max_tokens) c.teacher.max_tokens = *o.max_tokens;
  if (o.max_in_flight) c.teacher.max_in_flight = *o.max_in_flight;
  if (o.retries) c.teacher.retry_limit = *o.retries;
  if (o.backoff_ms) c.teacher.backoff_base_ms = *o.backoff_ms;
  if (!o.kinds.empty()) {
    c.kinds.clear();
    for (const auto& k : o.kinds) c.kinds.push_back(parse_behavior_kind(k));
  }

  if (o.sentence_level) c.mix.level = CompositionLevel::kSentence;
  c.filters.drop_ner = c.filters.drop_ner || o.drop_ner;
  c.filters.drop_qra = c.filters.drop_qra || o.drop_qra;
  c.filters.drop_sentiment = c.filters.drop_sentiment || o.drop_sentiment;
  if (!o.ratios.empty()) c.mix.ratios = parse_ratios(o.ratios);
  if (!o.delimiter.empty()) c.mix.delimiter = o.delimiter;

  if (o.order) c.lm.order = *o.order;
  if (o.k) c.lm.k = *o.k;
  if (!o.weights.empty()) c.lm.weights = o.weights;

  c.mix.seed = c.seed;
  return c;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--templates", o.templates, "Template directory (ner.json, qra.json, tasks/)");
  cmd->add_option("--seed", o.seed, "Master seed (default 42)");
}

void add_corpus(CLI::App* cmd, Options& o) {
  cmd->add_option("--corpus", o.corpus, "Corpus file (JSONL or plaintext)");
  cmd->add_option("--format", o.format, "Corpus format: auto, jsonl or plaintext");
  cmd->add_option("--abbreviations", o.abbreviations, "Abbreviation list for the sentence splitter");
}

void add_teacher(CLI::App* cmd, Options& o) {
  cmd->add_option("--backend", o.backend, "Teacher backend")->check(CLI::IsMember({"mock", "remote"}));
  cmd->add_option("--endpoint", o.endpoint, "Teacher base URL, e.g. http://127.0.0.1:8000");
  cmd->add_option("--path", o.teacher_path, "Chat completions path (default /v1/chat/completions)");
  cmd->add_option("--model", o.teacher_model, "Teacher model name");
  cmd->add_option("--temperature", o.temperature, "Sampling temperature (default 0)");
  cmd->add_option("--max-tokens", o.max_tokens, "Max output tokens per response");
  cmd->add_option("--max-in-flight", o.max_in_flight, "Concurrent requests (default 4)");
  cmd->add_option("--retries", o.retries, "Retries per request (default 3)");
  cmd->add_option("--backoff-ms", o.backoff_ms, "Exponential backoff base in ms (default 500)");
  cmd->add_option("--timeout", o.timeout, "Request timeout in seconds");
}

int cmd_synthesize(const Options& o) {
  const auto config = build_config(o);
  const auto summary = run_synthesize(config);
  std::cout << "requested: " << summary.requested << "\n"
            << "skipped (already present): " << summary.skipped << "\n";
  for (auto kind : config.kinds) {
    const auto get = [kind](const auto& m) { return m.count(kind) ? m.at(kind) : std::size_t{0}; };
    std::cout << to_string(kind) << ": accepted " << get(summary.accepted) << " rejected " << get(summary.rejected)
              << "\n";
  }
  for (const auto& [reason, n] : summary.rejected_by_reason) std::cout << "rejected:" << reason << " " << n << "\n";
  if (summary.requested == 0) std::cout << "skipped: all present\n";
  return summary.rejected_by_reason.count("transport") > 0 ? kExitRuntime : 0;
}

int cmd_compose(const Options& o) {
  const auto config = build_config(o);
  TaskDocSources sources;
  sources.gold.assign(o.task_gold.begin(), o.task_gold.end());
  sources.pseudo.assign(o.task_pseudo.begin(), o.task_pseudo.end());
  sources.brd2.assign(o.brd2.begin(), o.brd2.end());
  const auto result = run_compose(config, sources);
  std::cout << "wrote " << result.docs.size() << " documents to " << config.paths.dataset.string() << "\n"
            << result.manifest["counts"].dump() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const auto config = build_config(o);
  const auto result = run_train(config);
  std::cout << "trained on " << result.documents << " documents, vocab " << result.model.vocab().size() << "\n"
            << "train nll: " << result.train_nll << "\n"
            << "model: " << config.paths.model.string() << " sha256 " << result.model.digest() << "\n";
  return 0;
}

std::unique_ptr<ScorerBackend> make_scorer(const Options& o, const PipelineConfig& config) {
  if (o.scorer == "remote") return std::make_unique<RemoteScorer>(o.scorer_endpoint, o.scorer_path);
  return std::make_unique<NGramBackend>(NGramModel::load(config.paths.model));
}

int cmd_eval(const Options& o) {
  const auto config = build_config(o);
  if (!o.split_input.empty()) {
    if (o.split_fractions.size() != 3) throw Error("--fractions takes three values");
    const auto task = load_taskset(o.split_input);
    auto split = split_taskset(task.instances, o.split_fractions[0], o.split_fractions[1], o.split_fractions[2],
                               substream_seed(config.seed, "split"));
    const fs::path dir = o.split_dir.empty() ? fs::path(o.split_input).parent_path() : fs::path(o.split_dir);
    write_taskset(dir / "train" / (task.task_id + ".jsonl"), split.train);
    write_taskset(dir / "tune" / (task.task_id + ".jsonl"), split.tune);
    write_taskset(dir / "test" / (task.task_id + ".jsonl"), split.test);
    std::cout << "split " << task.task_id << ": " << split.train.size() << "/" << split.tune.size() << "/"
              << split.test.size() << " under " << dir.string() << "\n";
    return 0;
  }
  const auto mode = parse_eval_mode(o.mode);
  const auto backend = make_scorer(o, config);
  std::optional<fs::path> train_split;
  if (!o.train_split.empty()) train_split = o.train_split;
  const auto reports = run_eval(config, mode, *backend, train_split);
  std::cout << reports_markdown(reports);
  return 0;
}

int cmd_analyze(const Options& o) {
  const auto config = build_config(o);
  if (o.consistency == !o.scaling_sizes.empty()) throw CLI::ValidationError("choose exactly one of --consistency or --scaling");
  const auto suites = load_suites(config);
  if (suites.empty()) throw Error("no task files given (--tasks)");
  if (o.consistency) {
    if (o.teacher_model_path.empty() || o.students.empty()) {
      throw CLI::ValidationError("--consistency needs --teacher-model and at least one --student NAME=MODEL");
    }
    const NGramBackend teacher(NGramModel::load(o.teacher_model_path));
    std::vector<std::unique_ptr<NGramBackend>> owned;
    std::vector<NamedBackend> students;
    for (const auto& spec : o.students) {
      const auto eq = spec.find('=');
      const auto name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
      const auto path = eq == std::string::npos ? spec : spec.substr(eq + 1);
      owned.push_back(std::make_unique<NGramBackend>(NGramModel::load(path)));
      students.push_back({name, owned.back().get()});
    }
    const auto report = consistency_report({"teacher", &teacher}, students, suites, o.sample_n, config.seed,
                                           parse_sequence_averaging(o.averaging));
    write_file(config.paths.reports / "consistency.json", report.to_json().dump(2) + "\n");
    write_file(config.paths.reports / "consistency.md", report.to_markdown());
    std::cout << report.to_markdown();
  } else {
    const auto docs = load_dataset(config.paths.dataset);
    const auto run = scaling_curve(o.scaling_sizes, docs, config.lm, suites, config.seed);
    write_file(config.paths.reports / "scaling.csv", run.to_csv());
    write_file(config.paths.reports / "scaling.json", run.to_json().dump(2) + "\n");
    std::cout << run.to_csv() << "seed: " << config.seed << "\n";
  }
  return 0;
}

int cmd_demo(const Options& o) {
  fs::path out = o.demo_out;
  if (out.empty()) {
    out = fs::temp_directory_path() / "brd-demo";
  }
  const fs::path data = o.demo_data.empty() ? default_data_dir() : fs::path(o.demo_data);
  const auto result = run_demo(out, data);
  std::cout << "demo outputs under " << out.string() << "\n";
  for (const auto& c : result.claims) std::cout << (c.holds ? "[verified] " : "[not verified] ") << c.description << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  CLI::App app{"Basic reading distillation pipeline"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  Options o;

  auto* synth = app.add_subcommand("synthesize", "Collect teacher reading behaviors per sentence");
  add_common(synth, o);
  add_corpus(synth, o);
  add_teacher(synth, o);
  synth->add_option("--out,--behaviors", o.behaviors, "Behavior JSONL sink (appended, resumable)");
  synth->add_option("--kinds", o.kinds, "Behavior kinds: ner qra")->delimiter(',');

  auto* compose = app.add_subcommand("compose", "Build the training mixture");
  add_common(compose, o);
  add_corpus(compose, o);
  add_teacher(compose, o);
  compose->add_option("--behaviors", o.behaviors, "Behavior JSONL");
  compose->add_option("--out,--dataset", o.dataset, "Training-set JSONL (manifest.json written alongside)");
  compose->add_flag("--sentence-level", o.sentence_level, "One document per sentence instead of per passage");
  compose->add_flag("--drop-ner", o.drop_ner, "Remove NER behaviors");
  compose->add_flag("--drop-qra", o.drop_qra, "Remove QRA behaviors");
  compose->add_flag("--drop-sentiment", o.drop_sentiment, "Remove attitude questions and sentiment answers");
  compose->add_option("--ratios", o.ratios, "Document ratios, e.g. ORI=1,NER=1,QRA=1");
  compose->add_option("--delimiter", o.delimiter, "Segment delimiter (default <sep>)");
  compose->add_option("--kinds", o.kinds, "Behavior kinds for --brd2")->delimiter(',');
  compose->add_option("--task-gold", o.task_gold, "Taskset whose gold answers become TASK_GOLD docs");
  compose->add_option("--task-pseudo", o.task_pseudo, "Taskset the teacher labels into TASK_PSEUDO docs");
  compose->add_option("--brd2", o.brd2, "Taskset whose inputs are read again into TASK_BRD docs");

  auto* train = app.add_subcommand("train", "Train the n-gram student");
  add_common(train, o);
  train->add_option("--dataset", o.dataset, "Training-set JSONL");
  train->add_option("--out,--model", o.model, "Model JSON to write");
  train->add_option("--order", o.order, "n-gram order (default 3)")->check(CLI::PositiveNumber);
  train->add_option("--k", o.k, "Add-k smoothing constant (default 0.1)")->check(CLI::PositiveNumber);
  train->add_option("--weights", o.weights, "Interpolation weights, unigram first")->delimiter(',');

  auto* eval = app.add_subcommand("eval", "Multiple-choice evaluation");
  add_common(eval, o);
  eval->add_option("--model", o.model, "Model JSON for the builtin scorer");
  eval->add_option("--tasks", o.tasks, "Task JSONL files");
  eval->add_option("--mode", o.mode, "blind or relaxed")->check(CLI::IsMember({"blind", "relaxed"}));
  eval->add_option("--backend", o.scorer, "builtin or remote")->check(CLI::IsMember({"builtin", "remote"}));
  eval->add_option("--scorer-endpoint", o.scorer_endpoint, "Remote scorer base URL");
  eval->add_option("--scorer-path", o.scorer_path, "Remote scorer path (default /v1/logprobs)");
  eval->add_option("--train-split", o.train_split, "Train split used upstream (required for relaxed)");
  eval->add_option("--out,--reports", o.reports, "Report directory");
  eval->add_option("--split", o.split_input, "Split this taskset into train/tune/test and exit");
  eval->add_option("--split-dir", o.split_dir, "Where --split writes train/, tune/, test/");
  eval->add_option("--fractions", o.split_fractions, "train,tune,test fractions (default 0.8,0.1,0.1)")
      ->delimiter(',')
      ->expected(3);

  auto* analyze = app.add_subcommand("analyze", "Teacher/student consistency or data-size scaling");
  add_common(analyze, o);
  analyze->add_flag("--consistency", o.consistency, "Cross entropy of students against the teacher");
  analyze->add_option("--scaling", o.scaling_sizes, "Training sizes (documents), strictly increasing")->delimiter(',');
  analyze->add_option("--teacher-model", o.teacher_model_path, "Teacher n-gram model");
  analyze->add_option("--student", o.students, "Student model as NAME=PATH (repeatable)");
  analyze->add_option("--tasks", o.tasks, "Task JSONL files");
  analyze->add_option("--dataset", o.dataset, "Training set for --scaling");
  analyze->add_option("--sample-n", o.sample_n, "Instances sampled per task (default 1000)");
  analyze->add_option("--averaging", o.averaging, "geometric or arithmetic")
      ->check(CLI::IsMember({"geometric", "arithmetic"}));
  analyze->add_option("--order", o.order, "n-gram order for --scaling")->check(CLI::PositiveNumber);
  analyze->add_option("--k", o.k, "Add-k constant for --scaling")->check(CLI::PositiveNumber);
  analyze->add_option("--out,--reports", o.reports, "Report directory");

  auto* demo = app.add_subcommand("demo", "Run the whole pipeline on the bundled fixtures");
  demo->add_option("--out", o.demo_out, "Output directory (default: <tmp>/brd-demo)");
  demo->add_option("--data", o.demo_data, "Root holding templates/ and data/fixtures/")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*synth) return cmd_synthesize(o);
    if (*compose) return cmd_compose(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*analyze) return cmd_analyze(o);
    if (*demo) return cmd_demo(o);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
