// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/compose.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;

namespace {

constexpr std::pair<DocKind, const char*> kDocKindNames[] = {
    {DocKind::kOri, "ORI"},
    {DocKind::kNer, "NER"},
    {DocKind::kQra, "QRA"},
    {DocKind::kSentNer, "SENT_NER"},
    {DocKind::kSentQra, "SENT_QRA"},
    {DocKind::kTaskPseudo, "TASK_PSEUDO"},
    {DocKind::kTaskGold, "TASK_GOLD"},
    {DocKind::kTaskBrd, "TASK_BRD"},
};

DocKind passage_kind(BehaviorKind kind) { return kind == BehaviorKind::kNer ? DocKind::kNer : DocKind::kQra; }
DocKind sentence_kind(BehaviorKind kind) {
  return kind == BehaviorKind::kNer ? DocKind::kSentNer : DocKind::kSentQra;
}

void reject_delimiter(const std::string& content, const std::string& delimiter, const std::string& where) {
  if (content.find(delimiter) != std::string::npos) {
    throw Error(where + " contains the delimiter '" + delimiter + "'");
  }
}

// Accepted record of `kind` for each sentence index, or an error naming the
// first sentence that has none.
std::vector<const BehaviorRecord*> records_by_sentence(const Passage& passage,
                                                       std::span<const BehaviorRecord> records,
                                                       BehaviorKind kind) {
  std::vector<const BehaviorRecord*> found(passage.sentences.size(), nullptr);
  std::vector<bool> rejected(passage.sentences.size(), false);
  for (const auto& r : records) {
    if (r.passage_id != passage.id || r.kind != kind || r.sentence_index >= found.size()) continue;
    if (r.accepted()) {
      found[r.sentence_index] = &r;
    } else {
      rejected[r.sentence_index] = true;
    }
  }
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (found[i] == nullptr) {
      throw Error("passage '" + passage.id + "' sentence " + std::to_string(i) + ": " +
                  (rejected[i] ? "record rejected" : "no record") + " for " + to_string(kind));
    }
  }
  return found;
}

}  // namespace

std::string to_string(DocKind kind) {
  for (const auto& [k, name] : kDocKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

DocKind parse_doc_kind(const std::string& name) {
  for (const auto& [k, n] : kDocKindNames) {
    if (name == n) return k;
  }
  throw Error("unknown document kind '" + name + "'");
}

json TrainingDoc::to_json() const {
  return json{{"kind", to_string(kind)}, {"source_id", source_id}, {"text", text}};
}

TrainingDoc TrainingDoc::from_json(const json& j) {
  TrainingDoc d{parse_doc_kind(j.at("kind").get<std::string>()), j.at("source_id").get<std::string>(),
                j.at("text").get<std::string>()};
  if (d.text.empty()) throw Error("training doc '" + d.source_id + "' has empty text");
  return d;
}

void MixSpec::validate() const {
  bool any_positive = false;
  for (const auto& [kind, ratio] : ratios) {
    if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
      throw Error("mix ratio for " + to_string(kind) + " must be a nonnegative number");
    }
    any_positive = any_positive || ratio > 0.0;
  }
  if (!any_positive) throw Error("at least one mix ratio must be positive");
  if (delimiter.empty()) throw Error("delimiter must not be empty");
}

std::string padded(const std::string& delimiter) { return " " + delimiter + " "; }

TrainingDoc compose_behavior_passage(const Passage& passage, std::span<const BehaviorRecord> records,
                                     BehaviorKind kind, const std::string& delimiter) {
  if (passage.sentences.empty()) throw Error("passage '" + passage.id + "' has no sentences");
  const auto found = records_by_sentence(passage, records, kind);
  const auto sep = padded(delimiter);
  std::string text;
  for (std::size_t i = 0; i < passage.sentences.size(); ++i) {
    const auto where = "passage '" + passage.id + "' sentence " + std::to_string(i);
    reject_delimiter(passage.sentences[i].text, delimiter, where);
    reject_delimiter(found[i]->response, delimiter, where + " response");
    if (i > 0) text += sep;
    text += passage.sentences[i].text;
    text += sep;
    text += found[i]->response;
  }
  return TrainingDoc{passage_kind(kind), passage.id, std::move(text)};
}

TrainingDoc compose_original(const Passage& passage, const std::string& delimiter) {
  if (passage.sentences.empty()) throw Error("passage '" + passage.id + "' has no sentences");
  const auto sep = padded(delimiter);
  std::string text;
  for (const auto& s : passage.sentences) {
    reject_delimiter(s.text, delimiter, "passage '" + passage.id + "'");
    if (!text.empty()) text += sep;
    text += s.text;
  }
  return TrainingDoc{DocKind::kOri, passage.id, std::move(text)};
}

std::vector<TrainingDoc> sentence_level_variant(std::span<const Passage> passages,
                                                std::span<const BehaviorRecord> records,
                                                BehaviorKind kind, const std::string& delimiter,
                                                std::uint64_t seed) {
  const auto sep = padded(delimiter);
  std::vector<TrainingDoc> docs;
  for (const auto& passage : passages) {
    const auto found = records_by_sentence(passage, records, kind);
    for (std::size_t i = 0; i < passage.sentences.size(); ++i) {
      const auto where = "passage '" + passage.id + "' sentence " + std::to_string(i);
      reject_delimiter(passage.sentences[i].text, delimiter, where);
      reject_delimiter(found[i]->response, delimiter, where + " response");
      docs.push_back(TrainingDoc{sentence_kind(kind), passage.id + "#" + std::to_string(i),
                                 passage.sentences[i].text + sep + found[i]->response});
    }
  }
  Rng rng(substream_seed(seed, "sentence-level"));
  rng.shuffle(docs);
  return docs;
}

QraParts split_qra(const std::string& response) {
  const auto marker = response.find("Answer:");
  if (marker == std::string::npos) return QraParts{response, response};
  auto question = response.substr(0, marker);
  if (auto q = question.find("Question:"); q != std::string::npos) question = question.substr(q + 9);
  return QraParts{trim(question), trim(response.substr(marker + 7))};
}

bool is_sentiment_record(const BehaviorRecord& record, const std::vector<std::string>& words) {
  if (record.kind != BehaviorKind::kQra) return false;
  const auto parts = split_qra(record.response);
  if (count_whole_words(parts.question, "attitude") > 0) return true;
  return std::any_of(words.begin(), words.end(),
                     [&](const std::string& w) { return count_whole_words(parts.answer, w) > 0; });
}

std::vector<BehaviorRecord> apply_filters(std::vector<BehaviorRecord> records, const FilterSpec& spec) {
  if (spec.drop_ner && spec.drop_qra) {
    throw Error("dropping both NER and QRA leaves no behavior data; use ORI-only ratios instead");
  }
  std::erase_if(records, [&](const BehaviorRecord& r) {
    if (spec.drop_ner && r.kind == BehaviorKind::kNer) return true;
    if (spec.drop_qra && r.kind == BehaviorKind::kQra) return true;
    return spec.drop_sentiment && is_sentiment_record(r, spec.sentiment_words);
  });
  return records;
}

json training_metadata() {
  return json{{"max_input_length", 2048}, {"learning_rate", 0.0003}, {"batch_size", 8}, {"max_steps", 40000}};
}

MixResult mix(const std::map<DocKind, std::vector<TrainingDoc>>& streams, const MixSpec& spec) {
  spec.validate();
  double unit = std::numeric_limits<double>::infinity();
  for (const auto& [kind, ratio] : spec.ratios) {
    if (ratio <= 0.0) continue;
    auto it = streams.find(kind);
    if (it == streams.end()) throw Error("mix ratio given for absent kind " + to_string(kind));
    unit = std::min(unit, static_cast<double>(it->second.size()) / ratio);
  }

  MixResult result;
  json available = json::object();
  json counts = json::object();
  json ratios = json::object();
  for (const auto& [kind, docs] : streams) {
    available[to_string(kind)] = docs.size();
    const auto rit = spec.ratios.find(kind);
    const double ratio = rit == spec.ratios.end() ? 0.0 : rit->second;
    ratios[to_string(kind)] = ratio;
    // the epsilon absorbs representation error in products like 100/3*3
    const auto take = ratio > 0.0 ? std::min<std::size_t>(docs.size(), static_cast<std::size_t>(
                                                                           std::floor(unit * ratio + 1e-9)))
                                  : std::size_t{0};
    counts[to_string(kind)] = take;
    result.docs.insert(result.docs.end(), docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(take));
  }
  if (result.docs.empty()) throw Error("mix selected no documents");

  Rng rng(substream_seed(spec.seed, "mix"));
  rng.shuffle(result.docs);

  result.manifest = json{{"available", available},
                         {"counts", counts},
                         {"total", result.docs.size()},
                         {"seed", spec.seed},
                         {"ratios", ratios},
                         {"delimiter", spec.delimiter},
                         {"level", spec.level == CompositionLevel::kPassage ? "passage" : "sentence"},
                         {"metadata", training_metadata()}};
  return result;
}

DatasetStreams build_streams(std::span<const Passage> passages, std::span<const BehaviorRecord> records,
                             const MixSpec& spec) {
  DatasetStreams out;
  auto& ori = out.streams[DocKind::kOri];
  for (const auto& p : passages) ori.push_back(compose_original(p, spec.delimiter));

  for (auto kind : {BehaviorKind::kNer, BehaviorKind::kQra}) {
    const bool present = std::any_of(records.begin(), records.end(),
                                     [&](const BehaviorRecord& r) { return r.kind == kind; });
    if (!present) continue;
    // passages lacking a complete record set are skipped rather than fatal
    std::vector<Passage> complete;
    std::size_t incomplete = 0;
    for (const auto& p : passages) {
      try {
        records_by_sentence(p, records, kind);
        complete.push_back(p);
      } catch (const Error&) {
        ++incomplete;
      }
    }
    if (spec.level == CompositionLevel::kPassage) {
      auto& stream = out.streams[passage_kind(kind)];
      for (const auto& p : complete) stream.push_back(compose_behavior_passage(p, records, kind, spec.delimiter));
      out.incomplete_passages[passage_kind(kind)] = incomplete;
    } else {
      out.streams[sentence_kind(kind)] =
          sentence_level_variant(complete, records, kind, spec.delimiter, spec.seed);
      out.incomplete_passages[sentence_kind(kind)] = incomplete;
    }
    if (incomplete > 0) {
      spdlog::warn("{}: {} passage(s) lack a complete set of accepted records", to_string(kind), incomplete);
    }
  }
  return out;
}

MixResult build_dataset(std::span<const Passage> passages, std::vector<BehaviorRecord> records, MixSpec spec,
                        const FilterSpec& filters, const std::map<DocKind, std::vector<TrainingDoc>>& extra) {
  records = apply_filters(std::move(records), filters);
  if (filters.drop_ner) {
    spec.ratios.erase(DocKind::kNer);
    spec.ratios.erase(DocKind::kSentNer);
  }
  if (filters.drop_qra) {
    spec.ratios.erase(DocKind::kQra);
    spec.ratios.erase(DocKind::kSentQra);
  }
  if (spec.level == CompositionLevel::kSentence) {
    // NER/QRA ratios apply to the sentence-level kinds
    for (auto [from, to] : {std::pair{DocKind::kNer, DocKind::kSentNer}, std::pair{DocKind::kQra, DocKind::kSentQra}}) {
      if (auto it = spec.ratios.find(from); it != spec.ratios.end()) {
        spec.ratios.emplace(to, it->second);
        spec.ratios.erase(it);
      }
    }
  }
  auto built = build_streams(passages, records, spec);
  for (const auto& [kind, docs] : extra) {
    auto& stream = built.streams[kind];
    stream.insert(stream.end(), docs.begin(), docs.end());
  }
  auto result = mix(built.streams, spec);
  json incomplete = json::object();
  for (const auto& [kind, n] : built.incomplete_passages) incomplete[to_string(kind)] = n;
  result.manifest["incomplete_passages"] = incomplete;
  result.manifest["filters"] = json{{"drop_ner", filters.drop_ner},
                                    {"drop_qra", filters.drop_qra},
                                    {"drop_sentiment", filters.drop_sentiment},
                                    {"sentiment_words", filters.sentiment_words}};
  return result;
}

void write_dataset(const std::filesystem::path& path, const MixResult& result) {
  std::string out;
  for (const auto& d : result.docs) out += d.to_json().dump() + "\n";
  write_file(path, out);
  write_file(path.parent_path() / "manifest.json", result.manifest.dump(2) + "\n");
}

std::vector<TrainingDoc> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::vector<TrainingDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      docs.push_back(TrainingDoc::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<TrainingDoc> compose_task_pseudo(std::span<const TaskInstance> instances, const Teacher& teacher,
                                             const TaskTemplate* tmpl, TaskComposeSummary* summary) {
  std::vector<TrainingDoc> docs;
  TaskComposeSummary local;
  for (const auto& inst : instances) {
    const auto prompt = make_prompt(instance_prompt(inst, tmpl), tmpl ? tmpl->task_id : "task");
    std::string failure;
    const auto answer = teacher.answer_task(prompt, instance_input_text(inst), inst.candidates, &failure);
    if (!answer) {
      spdlog::warn("instance '{}' skipped: teacher reply {}", inst.id, failure);
      ++local.skipped;
      continue;
    }
    docs.push_back(TrainingDoc{DocKind::kTaskPseudo, inst.id, prompt.text + " " + *answer});
    ++local.composed;
  }
  if (summary != nullptr) *summary = local;
  return docs;
}

std::vector<TrainingDoc> compose_task_gold(std::span<const TaskInstance> instances, const TaskTemplate* tmpl) {
  std::vector<TrainingDoc> docs;
  for (const auto& inst : instances) {
    if (!inst.gold) throw Error("instance '" + inst.id + "' has no gold answer");
    if (std::find(inst.candidates.begin(), inst.candidates.end(), *inst.gold) == inst.candidates.end()) {
      throw Error("instance '" + inst.id + "': gold '" + *inst.gold + "' is not a candidate");
    }
    docs.push_back(TrainingDoc{DocKind::kTaskGold, inst.id, instance_prompt(inst, tmpl) + " " + *inst.gold});
  }
  return docs;
}

std::vector<TrainingDoc> compose_brd2(std::span<const TaskInstance> instances, const Teacher& teacher,
                                      const TeachingTemplates& templates, const std::vector<BehaviorKind>& kinds,
                                      const std::string& delimiter, const SegmenterConfig& segmenter,
                                      TaskComposeSummary* summary) {
  if (kinds.empty()) throw Error("compose_brd2 needs at least one behavior kind");
  TaskComposeSummary local;
  std::vector<Passage> passages;
  for (const auto& inst : instances) {
    const auto input = instance_input_text(inst);
    if (trim(input).empty()) {
      spdlog::warn("instance '{}' has empty input text, skipped", inst.id);
      ++local.skipped;
      continue;
    }
    passages.push_back(segment(RawDocument{inst.id, input}, segmenter));
  }
  MemoryRecordSink sink;
  synthesize(passages, kinds, teacher, templates, sink);

  std::vector<TrainingDoc> docs;
  for (const auto& p : passages) {
    for (auto kind : {BehaviorKind::kNer, BehaviorKind::kQra}) {
      if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) continue;
      try {
        auto doc = compose_behavior_passage(p, sink.records(), kind, delimiter);
        doc.kind = DocKind::kTaskBrd;
        docs.push_back(std::move(doc));
        ++local.composed;
      } catch (const Error& e) {
        spdlog::warn("{}", e.what());
        ++local.skipped;
      }
    }
  }
  if (summary != nullptr) *summary = local;
  return docs;
}

}  // namespace brd
