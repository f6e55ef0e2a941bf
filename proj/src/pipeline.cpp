// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path default_data_dir() {
  if (const char* env = std::getenv("BRD_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return BRD_DEFAULT_DATA_DIR;
}

// ---------------------------------------------------------------------------
// config

json interpolate_env(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
        const auto close = s.find('}', i + 2);
        if (close == std::string::npos) throw Error("unterminated ${ in config value '" + s + "'");
        const auto name = s.substr(i + 2, close - i - 2);
        const char* value = std::getenv(name.c_str());
        if (value == nullptr) throw Error("config references unset environment variable " + name);
        out += value;
        i = close;
      } else {
        out.push_back(s[i]);
      }
    }
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = interpolate_env(v);
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(interpolate_env(v));
    return out;
  }
  return j;
}

std::map<DocKind, double> parse_ratios(const std::string& text) {
  std::map<DocKind, double> ratios;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find_first_of("=:");
    if (eq == std::string::npos) throw Error("ratio entry '" + item + "' must look like KIND=VALUE");
    const auto kind = parse_doc_kind(trim(item.substr(0, eq)));
    const auto value_text = trim(item.substr(eq + 1));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(value_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value_text.size() || value_text.empty()) throw Error("bad ratio value '" + value_text + "'");
    ratios[kind] = value;
  }
  if (ratios.empty()) throw Error("no ratios given");
  return ratios;
}

PipelineConfig PipelineConfig::from_json(const json& raw, const fs::path& base_dir) {
  const auto j = interpolate_env(raw);
  PipelineConfig c;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    if (p.contains("corpus")) c.paths.corpus = resolve(p["corpus"].get<std::string>());
    c.paths.corpus_format = p.value("corpus_format", c.paths.corpus_format);
    if (p.contains("behaviors")) c.paths.behaviors = resolve(p["behaviors"].get<std::string>());
    if (p.contains("dataset")) c.paths.dataset = resolve(p["dataset"].get<std::string>());
    if (p.contains("model")) c.paths.model = resolve(p["model"].get<std::string>());
    if (p.contains("reports")) c.paths.reports = resolve(p["reports"].get<std::string>());
    if (p.contains("templates")) c.paths.templates = resolve(p["templates"].get<std::string>());
    if (p.contains("abbreviations")) c.paths.abbreviations = resolve(p["abbreviations"].get<std::string>());
    for (const auto& t : p.value("tasks", std::vector<std::string>{})) c.paths.tasks.push_back(resolve(t));
  }
  if (j.contains("teacher")) c.teacher = TeacherConfig::from_json(j["teacher"]);
  if (j.contains("kinds")) {
    c.kinds.clear();
    for (const auto& k : j["kinds"]) c.kinds.push_back(parse_behavior_kind(k.get<std::string>()));
  }
  if (j.contains("validation")) {
    c.validation.max_response_tokens = j["validation"].value("max_response_tokens", c.validation.max_response_tokens);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("mix")) {
    const auto& m = j["mix"];
    if (m.contains("ratios")) {
      c.mix.ratios.clear();
      for (const auto& [k, v] : m["ratios"].items()) c.mix.ratios[parse_doc_kind(k)] = v.get<double>();
    }
    c.mix.delimiter = m.value("delimiter", c.mix.delimiter);
    const auto level = m.value("level", std::string("passage"));
    if (level == "passage") {
      c.mix.level = CompositionLevel::kPassage;
    } else if (level == "sentence") {
      c.mix.level = CompositionLevel::kSentence;
    } else {
      throw Error("mix.level must be passage or sentence");
    }
  }
  if (j.contains("filters")) {
    const auto& f = j["filters"];
    c.filters.drop_ner = f.value("drop_ner", false);
    c.filters.drop_qra = f.value("drop_qra", false);
    c.filters.drop_sentiment = f.value("drop_sentiment", false);
    c.filters.sentiment_words = f.value("sentiment_words", c.filters.sentiment_words);
  }
  if (j.contains("lm")) {
    const auto& l = j["lm"];
    c.lm.order = l.value("order", c.lm.order);
    c.lm.k = l.value("k", c.lm.k);
    c.lm.weights = l.value("weights", c.lm.weights);
    c.lm.lowercase = l.value("lowercase", c.lm.lowercase);
  }
  c.mix.seed = c.seed;
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  try {
    return from_json(json::parse(read_file(path)), path.parent_path());
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void PipelineConfig::validate() const {
  for (const char* name : {"ner.json", "qra.json"}) {
    if (!fs::exists(paths.templates / name)) {
      throw Error("template file missing: " + (paths.templates / name).string());
    }
  }
  for (const auto& t : paths.tasks) {
    if (!fs::exists(t)) throw Error("task file missing: " + t.string());
  }
  if (!paths.abbreviations.empty() && !fs::exists(paths.abbreviations)) {
    throw Error("abbreviation file missing: " + paths.abbreviations.string());
  }
  teacher.validate();
  mix.validate();
}

SegmenterConfig segmenter_for(const PipelineConfig& config) {
  return config.paths.abbreviations.empty() ? SegmenterConfig{} : SegmenterConfig::from_file(config.paths.abbreviations);
}

std::vector<Passage> load_passages(const PipelineConfig& config) {
  if (config.paths.corpus.empty()) throw Error("no corpus path configured");
  const auto format = config.paths.corpus_format == "auto" ? corpus_format_for(config.paths.corpus)
                                                           : parse_corpus_format(config.paths.corpus_format);
  const auto segmenter = segmenter_for(config);
  CorpusReader reader(config.paths.corpus, format);
  std::vector<Passage> passages;
  while (auto doc = reader.next()) passages.push_back(segment(*doc, segmenter));
  return passages;
}

std::vector<TaskSuite> load_suites(const PipelineConfig& config) {
  std::vector<TaskSuite> suites;
  for (const auto& t : config.paths.tasks) suites.push_back(load_task_suite(t, config.paths.templates));
  return suites;
}

// ---------------------------------------------------------------------------
// stages

SynthesisSummary run_synthesize(const PipelineConfig& config, std::shared_ptr<Transport> transport) {
  config.validate();
  const auto passages = load_passages(config);
  const auto templates = TeachingTemplates::load(config.paths.templates);
  const Teacher teacher(config.teacher, std::move(transport));
  JsonlRecordSink sink(config.paths.behaviors);
  return synthesize(passages, config.kinds, teacher, templates, sink, config.validation);
}

MixResult run_compose(const PipelineConfig& config, const TaskDocSources& task_sources) {
  config.validate();
  const auto passages = load_passages(config);
  auto records = load_behaviors(config.paths.behaviors);

  std::map<DocKind, std::vector<TrainingDoc>> extra;
  auto add = [&](DocKind kind, std::vector<TrainingDoc> docs) {
    auto& stream = extra[kind];
    stream.insert(stream.end(), std::make_move_iterator(docs.begin()), std::make_move_iterator(docs.end()));
  };
  if (!task_sources.gold.empty() || !task_sources.pseudo.empty() || !task_sources.brd2.empty()) {
    const Teacher teacher(config.teacher);
    for (const auto& p : task_sources.gold) {
      const auto suite = load_task_suite(p, config.paths.templates);
      add(DocKind::kTaskGold, compose_task_gold(suite.taskset.instances, suite.template_ptr()));
    }
    for (const auto& p : task_sources.pseudo) {
      const auto suite = load_task_suite(p, config.paths.templates);
      TaskComposeSummary summary;
      add(DocKind::kTaskPseudo,
          compose_task_pseudo(suite.taskset.instances, teacher, suite.template_ptr(), &summary));
      spdlog::info("{}: {} pseudo-labelled, {} skipped", suite.taskset.task_id, summary.composed, summary.skipped);
    }
    if (!task_sources.brd2.empty()) {
      const auto templates = TeachingTemplates::load(config.paths.templates);
      for (const auto& p : task_sources.brd2) {
        const auto suite = load_task_suite(p, config.paths.templates);
        add(DocKind::kTaskBrd, compose_brd2(suite.taskset.instances, teacher, templates, config.kinds,
                                            config.mix.delimiter, segmenter_for(config)));
      }
    }
  }
  auto result = build_dataset(passages, std::move(records), config.mix, config.filters, extra);
  write_dataset(config.paths.dataset, result);
  return result;
}

TrainResult run_train(const PipelineConfig& config) {
  const auto docs = load_dataset(config.paths.dataset);
  if (docs.empty()) throw Error("dataset " + config.paths.dataset.string() + " is empty");
  auto model = NGramModel::train(docs, config.lm);
  model.save(config.paths.model);
  const NGramBackend backend(std::make_shared<const NGramModel>(model));
  return TrainResult{std::move(model), nll(backend, docs), docs.size()};
}

std::vector<EvalReport> run_eval(const PipelineConfig& config, EvalMode mode, const ScorerBackend& backend,
                                 const std::optional<fs::path>& train_split) {
  const auto suites = load_suites(config);
  if (suites.empty()) throw Error("no task files configured");
  if (mode == EvalMode::kRelaxed) {
    if (!train_split) throw Error("relaxed mode needs a train split (--train-split)");
    const auto train = load_taskset(*train_split);
    if (train.instances.empty()) throw Error("relaxed mode train split is empty");
    std::set<std::string> train_ids;
    for (const auto& i : train.instances) train_ids.insert(i.id);
    for (const auto& s : suites) {
      for (const auto& i : s.taskset.instances) {
        if (train_ids.count(i.id) > 0) throw Error("instance '" + i.id + "' is in both the train split and the test set");
      }
    }
  }
  std::vector<EvalReport> reports;
  for (const auto& s : suites) {
    reports.push_back(evaluate(s.taskset, backend, mode, s.template_ptr()));
    write_file(config.paths.reports / ("eval_" + s.taskset.task_id + ".json"), reports.back().to_json().dump(2) + "\n");
  }
  write_file(config.paths.reports / "eval.md", reports_markdown(reports));
  return reports;
}

// ---------------------------------------------------------------------------
// demo

DemoResult run_demo(const fs::path& out_dir, const fs::path& data_dir) {
  const auto fixtures = data_dir / "data" / "fixtures";
  PipelineConfig config;
  config.paths.corpus = fixtures / "corpus.jsonl";
  config.paths.templates = data_dir / "templates";
  config.paths.behaviors = out_dir / "behaviors.jsonl";
  config.paths.dataset = out_dir / "dataset" / "train.jsonl";
  config.paths.model = out_dir / "models" / "student_brd.json";
  config.paths.reports = out_dir / "reports";
  for (const auto& entry : fs::directory_iterator(fixtures / "tasks")) {
    if (entry.path().extension() == ".jsonl") config.paths.tasks.push_back(entry.path());
  }
  std::sort(config.paths.tasks.begin(), config.paths.tasks.end());
  config.mix.seed = config.seed;

  // a demo run always starts from an empty behavior sink
  fs::remove(config.paths.behaviors);

  DemoResult result;
  const auto synth = run_synthesize(config);
  spdlog::info("synthesize: {} accepted, {} rejected", synth.total_accepted(), synth.total_rejected());
  result.claims.push_back({"mock teacher accepted every requested behavior",
                           synth.total_rejected() == 0 && synth.total_accepted() == synth.requested});

  const auto mixed = run_compose(config);
  spdlog::info("compose: {} documents", mixed.docs.size());

  // teacher surrogate sees the domain corpus; students start from general text
  std::vector<std::string> domain_texts;
  for (const auto& doc : load_corpus(config.paths.corpus, CorpusFormat::kJsonl)) domain_texts.push_back(doc.text);
  std::vector<std::string> general_texts;
  for (const auto& doc : load_corpus(fixtures / "general.jsonl", CorpusFormat::kJsonl)) general_texts.push_back(doc.text);
  std::vector<std::string> brd_texts = general_texts;
  for (const auto& d : mixed.docs) brd_texts.push_back(d.text);

  auto teacher_model = NGramModel::train_texts(domain_texts, config.lm);
  auto base_model = NGramModel::train_texts(general_texts, config.lm);
  auto brd_model = NGramModel::train_texts(brd_texts, config.lm);
  teacher_model.save(out_dir / "models" / "teacher.json");
  base_model.save(out_dir / "models" / "student_base.json");
  brd_model.save(config.paths.model);
  const NGramBackend teacher(std::move(teacher_model));
  const NGramBackend base(std::move(base_model));
  const NGramBackend brd(std::move(brd_model));

  auto base_config = config;
  base_config.paths.reports = config.paths.reports / "student_base";
  auto brd_config = config;
  brd_config.paths.reports = config.paths.reports / "student_brd";
  const auto base_reports = run_eval(base_config, EvalMode::kBlind, base);
  const auto brd_reports = run_eval(brd_config, EvalMode::kBlind, brd);
  for (std::size_t i = 0; i < base_reports.size(); ++i) {
    if (base_reports[i].task_id != "entity") continue;
    const double a0 = base_reports[i].accuracy.value_or(0.0);
    const double a1 = brd_reports[i].accuracy.value_or(0.0);
    result.claims.push_back({"entity task: BRD student accuracy exceeds base student by >= 0.05 (" +
                                 std::to_string(a1) + " vs " + std::to_string(a0) + ")",
                             a1 >= a0 + 0.05});
  }

  const auto suites = load_suites(config);
  const std::vector<NamedBackend> students{{"student-base", &base}, {"student-brd", &brd}};
  const auto consistency = consistency_report({"teacher", &teacher}, students, suites, 1000, config.seed);
  write_file(config.paths.reports / "consistency.json", consistency.to_json().dump(2) + "\n");
  write_file(config.paths.reports / "consistency.md", consistency.to_markdown());
  const auto avg = consistency.averages();
  result.claims.push_back({"average cross entropy to the teacher is lower for the BRD student", avg[1] < avg[0]});

  const std::size_t n = mixed.docs.size();
  std::vector<std::size_t> sizes;
  for (std::size_t s : {n / 8, n / 4, n / 2, n}) {
    if (s > 0 && (sizes.empty() || s > sizes.back())) sizes.push_back(s);
  }
  const auto scaling = scaling_curve(sizes, mixed.docs, config.lm, suites, config.seed);
  write_file(config.paths.reports / "scaling.csv", scaling.to_csv());
  write_file(config.paths.reports / "scaling.json", scaling.to_json().dump(2) + "\n");
  {
    std::vector<std::string> mix_texts;
    for (const auto& d : mixed.docs) mix_texts.push_back(d.text);
    const NGramBackend direct(NGramModel::train_texts(mix_texts, config.lm));
    bool same = scaling.rows.back().size == n;
    for (const auto& s : suites) {
      const auto report = evaluate(s.taskset, direct, EvalMode::kBlind, s.template_ptr());
      const auto& row = scaling.rows.back().accuracy;
      same = same && row.count(s.taskset.task_id) > 0 && report.accuracy &&
             std::abs(row.at(s.taskset.task_id) - *report.accuracy) < 1e-12;
    }
    result.claims.push_back({"full-size scaling row matches a model trained directly on the mixture", same});
  }

  std::ostringstream md;
  md << "# Demo summary\n\n## Claims\n\n";
  for (const auto& c : result.claims) md << "- [" << (c.holds ? "x" : " ") << "] " << c.description << '\n';
  md << "\n## Base student\n\n" << reports_markdown(base_reports) << "\n## BRD student\n\n"
     << reports_markdown(brd_reports) << "\n## Consistency\n\n" << consistency.to_markdown()
     << "\n## Scaling\n\n```\n" << scaling.to_csv() << "```\n";
  write_file(config.paths.reports / "demo.md", md.str());

  for (const auto& entry : fs::recursive_directory_iterator(config.paths.reports)) {
    if (entry.is_regular_file()) result.reports.push_back(entry.path());
  }
  std::sort(result.reports.begin(), result.reports.end());
  return result;
}

}  // namespace brd
