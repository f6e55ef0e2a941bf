// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "brd/compose.hpp"
#include "support.hpp"

using namespace brd;
using brd::test::TempDir;

namespace {

const std::string kBelmont =
    "Belmont Estate is on the market for $63 million and boasts roughly 22,000 square feet of luxurious "
    "finishes and elaborate architecture on 1.28 acres.";

Passage three() { return Passage{"p3", {{0, "One here."}, {1, "Two there."}, {2, "Three everywhere."}}}; }

BehaviorRecord rec(const std::string& pid, std::size_t i, BehaviorKind kind, std::string response,
                   std::string sentence = "s") {
  BehaviorRecord r;
  r.passage_id = pid;
  r.sentence_index = i;
  r.kind = kind;
  r.sentence = std::move(sentence);
  r.response = std::move(response);
  return r;
}

std::vector<std::string> split_on(const std::string& text, const std::string& delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(delim, start);
    if (pos == std::string::npos) break;
    out.push_back(text.substr(start, pos - start));
    start = pos + delim.size();
  }
  out.push_back(text.substr(start));
  return out;
}

std::map<DocKind, std::vector<TrainingDoc>> streams_of(const std::map<DocKind, std::size_t>& sizes) {
  std::map<DocKind, std::vector<TrainingDoc>> out;
  for (const auto& [kind, n] : sizes) {
    for (std::size_t i = 0; i < n; ++i) {
      out[kind].push_back({kind, to_string(kind) + std::to_string(i), "text " + std::to_string(i)});
    }
  }
  return out;
}

TaskTemplate sst2() {
  return TaskTemplate::from_json_file(brd::test::source_dir() / "templates" / "tasks" / "sst2.json");
}

}  // namespace

TEST_CASE("behavior passage layout") {
  const auto p = three();
  std::vector<BehaviorRecord> records;
  for (std::size_t i = 0; i < 3; ++i) records.push_back(rec("p3", i, BehaviorKind::kNer, "NER" + std::to_string(i + 1)));
  const auto doc = compose_behavior_passage(p, records, BehaviorKind::kNer);
  CHECK(doc.kind == DocKind::kNer);
  CHECK(doc.source_id == "p3");
  CHECK(doc.text == "One here. <sep> NER1 <sep> Two there. <sep> NER2 <sep> Three everywhere. <sep> NER3");
}

TEST_CASE("behavior passage with the table 1 response") {
  const std::string response =
      "In this sentence, \"Belmont Estate\" is a geographic entity, \"63 million\" is a numerical entity "
      "representing the price of the estate, and \"1.28 acres\" is a geographic entity representing the size of "
      "the estate.";
  const Passage p{"b", {{0, kBelmont}}};
  const auto doc =
      compose_behavior_passage(p, std::vector<BehaviorRecord>{rec("b", 0, BehaviorKind::kNer, response)},
                               BehaviorKind::kNer);
  CHECK(doc.text == kBelmont + " <sep> " + response);
}

TEST_CASE("missing or rejected records name the sentence") {
  const auto p = three();
  std::vector<BehaviorRecord> records;
  for (std::size_t i = 0; i < 3; ++i) records.push_back(rec("p3", i, BehaviorKind::kQra, "R"));
  records[1].rejection = "empty";
  CHECK_THROWS_WITH_AS(compose_behavior_passage(p, records, BehaviorKind::kQra),
                       doctest::Contains("sentence 1"), Error);
  records.erase(records.begin() + 1);
  CHECK_THROWS_WITH_AS(compose_behavior_passage(p, records, BehaviorKind::kQra),
                       doctest::Contains("sentence 1"), Error);
  // records of another kind do not count
  std::vector<BehaviorRecord> ner;
  for (std::size_t i = 0; i < 3; ++i) ner.push_back(rec("p3", i, BehaviorKind::kNer, "R"));
  CHECK_THROWS_AS(compose_behavior_passage(p, ner, BehaviorKind::kQra), Error);
}

TEST_CASE("content holding the delimiter is refused") {
  const Passage p{"d", {{0, "A <sep> B."}}};
  CHECK_THROWS_AS(
      compose_behavior_passage(p, std::vector<BehaviorRecord>{rec("d", 0, BehaviorKind::kNer, "x")}, BehaviorKind::kNer),
      Error);
  const Passage q{"d", {{0, "Fine."}}};
  CHECK_THROWS_AS(compose_behavior_passage(q, std::vector<BehaviorRecord>{rec("d", 0, BehaviorKind::kNer, "a <sep> b")},
                                           BehaviorKind::kNer),
                  Error);
}

TEST_CASE("original passage layout") {
  CHECK(compose_original(three()).text == "One here. <sep> Two there. <sep> Three everywhere.");
  CHECK(compose_original(three()).kind == DocKind::kOri);
  CHECK(compose_original(Passage{"one", {{0, "Alone."}}}).text == "Alone.");
  CHECK_THROWS_AS(compose_original(Passage{"none", {}}), Error);
  CHECK(compose_original(three(), "||").text == "One here. || Two there. || Three everywhere.");
}

TEST_CASE("property: composed docs split back into sentences and responses") {
  Rng rng(17);
  const auto passages = brd::test::random_passages(rng, 200, 8);
  const auto records = brd::test::mock_records(passages);
  for (const auto& p : passages) {
    for (auto kind : {BehaviorKind::kNer, BehaviorKind::kQra}) {
      const auto doc = compose_behavior_passage(p, records, kind);
      const auto parts = split_on(doc.text, " <sep> ");
      REQUIRE(parts.size() == 2 * p.sentences.size());
      for (std::size_t i = 0; i < p.sentences.size(); ++i) {
        CHECK(parts[2 * i] == p.sentences[i].text);
        CHECK(parts[2 * i + 1] == mock_teacher(p.sentences[i].text, kind));
      }
    }
  }
}

TEST_CASE("sentence-level variant") {
  const std::vector<Passage> passages{three()};
  std::vector<BehaviorRecord> records;
  for (std::size_t i = 0; i < 3; ++i) records.push_back(rec("p3", i, BehaviorKind::kNer, "N" + std::to_string(i)));
  const auto a = sentence_level_variant(passages, records, BehaviorKind::kNer, "<sep>", 1);
  REQUIRE(a.size() == 3);
  for (const auto& d : a) CHECK(d.kind == DocKind::kSentNer);
  CHECK(a == sentence_level_variant(passages, records, BehaviorKind::kNer, "<sep>", 1));

  Rng rng(23);
  const auto many = brd::test::random_passages(rng, 40, 6);
  const auto mrec = brd::test::mock_records(many);
  auto x = sentence_level_variant(many, mrec, BehaviorKind::kQra, "<sep>", 1);
  auto y = sentence_level_variant(many, mrec, BehaviorKind::kQra, "<sep>", 2);
  CHECK(x != y);
  auto key = [](const TrainingDoc& d) { return d.source_id + "\n" + d.text; };
  std::vector<std::string> kx, ky;
  for (const auto& d : x) kx.push_back(key(d));
  for (const auto& d : y) ky.push_back(key(d));
  std::sort(kx.begin(), kx.end());
  std::sort(ky.begin(), ky.end());
  CHECK(kx == ky);
  for (const auto& d : x) CHECK(split_on(d.text, " <sep> ").size() == 2);
}

TEST_CASE("sentiment filter matches whole words only") {
  std::vector<BehaviorRecord> records{
      rec("a", 0, BehaviorKind::kQra, "Question:\nHow does it feel?\nAnswer:\nThe sentiment is positive."),
      rec("a", 1, BehaviorKind::kQra, "Question:\nWhat did he do?\nAnswer:\nHe composited the image."),
      rec("a", 2, BehaviorKind::kQra, "Question:\nWhat is the ATTITUDE of the author?\nAnswer:\nCalm."),
      rec("a", 3, BehaviorKind::kQra, "Question:\nWhat is the mood?\nAnswer:\nNEUTRAL, mostly."),
      rec("a", 4, BehaviorKind::kQra, "Question:\nWhat is attitudes?\nAnswer:\nNonnegative numbers."),
      rec("a", 0, BehaviorKind::kNer, "In this sentence, \"Positive\" is a named entity."),
  };
  FilterSpec spec;
  spec.drop_sentiment = true;
  const auto kept = apply_filters(records, spec);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].sentence_index == 1);
  CHECK(kept[1].sentence_index == 4);
  CHECK(kept[2].kind == BehaviorKind::kNer);
}

TEST_CASE("qra splitting") {
  const auto parts = split_qra("Question:\nWho?\nAnswer:\nMe.");
  CHECK(parts.question.find("Who?") != std::string::npos);
  CHECK(parts.answer.find("Me.") != std::string::npos);
  CHECK(parts.answer.find("Who?") == std::string::npos);
}

TEST_CASE("kind filters") {
  Rng rng(29);
  const auto passages = brd::test::random_passages(rng, 20, 4);
  const auto records = brd::test::mock_records(passages);
  const auto qra_count = std::count_if(records.begin(), records.end(),
                                       [](const auto& r) { return r.kind == BehaviorKind::kQra; });
  FilterSpec no_ner;
  no_ner.drop_ner = true;
  const auto kept = apply_filters(records, no_ner);
  CHECK(std::none_of(kept.begin(), kept.end(), [](const auto& r) { return r.kind == BehaviorKind::kNer; }));
  CHECK(static_cast<long>(kept.size()) == qra_count);

  FilterSpec both;
  both.drop_ner = both.drop_qra = true;
  CHECK_THROWS_AS(apply_filters(records, both), Error);
}

TEST_CASE("property: filters compose like a single predicate pass") {
  Rng rng(31);
  const auto passages = brd::test::random_passages(rng, 30, 5);
  auto records = brd::test::mock_records(passages);
  // sprinkle sentiment answers
  for (std::size_t i = 1; i < records.size(); i += 5) records[i].response += " It is positive.";
  FilterSpec sentiment;
  sentiment.drop_sentiment = true;
  FilterSpec ner;
  ner.drop_ner = true;
  FilterSpec both = sentiment;
  both.drop_ner = true;
  const auto ab = apply_filters(apply_filters(records, sentiment), ner);
  const auto ba = apply_filters(apply_filters(records, ner), sentiment);
  const auto once = apply_filters(records, both);
  std::vector<BehaviorRecord> oracle;
  for (const auto& r : records) {
    if (r.kind == BehaviorKind::kNer) continue;
    const auto q = r.response.substr(0, r.response.find("Answer:"));
    const auto a = r.response.substr(r.response.find("Answer:"));
    if (count_whole_words(q, "attitude") > 0) continue;
    if (count_whole_words(a, "positive") + count_whole_words(a, "negative") + count_whole_words(a, "neutral") > 0) {
      continue;
    }
    oracle.push_back(r);
  }
  auto keys = [](const std::vector<BehaviorRecord>& v) {
    std::vector<RecordKey> out;
    for (const auto& r : v) out.push_back(key_of(r));
    return out;
  };
  CHECK(keys(ab) == keys(oracle));
  CHECK(keys(ba) == keys(oracle));
  CHECK(keys(once) == keys(oracle));
}

TEST_CASE("mix counts follow floor(u * ratio)") {
  const auto streams = streams_of({{DocKind::kOri, 100}, {DocKind::kNer, 100}, {DocKind::kQra, 100}});
  MixSpec spec;
  auto r = mix(streams, spec);
  CHECK(r.docs.size() == 300);
  CHECK(r.manifest["counts"]["NER"] == 100);

  spec.ratios = {{DocKind::kOri, 2}, {DocKind::kNer, 1}, {DocKind::kQra, 1}};
  r = mix(streams, spec);
  CHECK(r.manifest["counts"]["ORI"] == 100);
  CHECK(r.manifest["counts"]["NER"] == 50);
  CHECK(r.manifest["counts"]["QRA"] == 50);

  spec.ratios = {{DocKind::kOri, 1}, {DocKind::kNer, 0}, {DocKind::kQra, 0}};
  r = mix(streams, spec);
  CHECK(r.docs.size() == 100);
  CHECK(std::all_of(r.docs.begin(), r.docs.end(), [](const auto& d) { return d.kind == DocKind::kOri; }));

  spec.ratios = {{DocKind::kOri, 0}};
  CHECK_THROWS_AS(mix(streams, spec), Error);
  spec.ratios = {{DocKind::kTaskGold, 1}};
  CHECK_THROWS_AS(mix(streams, spec), Error);
}

TEST_CASE("property: mix counts match the arithmetic oracle") {
  Rng rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<DocKind, std::size_t> sizes{{DocKind::kOri, 1 + rng.below(60)},
                                         {DocKind::kNer, 1 + rng.below(60)},
                                         {DocKind::kQra, 1 + rng.below(60)}};
    MixSpec spec;
    spec.seed = rng.next();
    spec.ratios.clear();
    for (const auto& [kind, n] : sizes) spec.ratios[kind] = static_cast<double>(rng.below(4));
    if (std::all_of(spec.ratios.begin(), spec.ratios.end(), [](const auto& kv) { return kv.second == 0; })) {
      spec.ratios[DocKind::kOri] = 1;
    }
    double u = 1e300;
    for (const auto& [kind, ratio] : spec.ratios) {
      if (ratio > 0) u = std::min(u, static_cast<double>(sizes[kind]) / ratio);
    }
    const auto r = mix(streams_of(sizes), spec);
    std::map<DocKind, std::size_t> counted;
    for (const auto& d : r.docs) ++counted[d.kind];
    for (const auto& [kind, ratio] : spec.ratios) {
      const auto want = static_cast<std::size_t>(std::floor(u * ratio + 1e-9));
      CHECK(counted[kind] == want);
      CHECK(r.manifest["counts"].value(to_string(kind), std::size_t{0}) == want);
    }
    CHECK(r.docs == mix(streams_of(sizes), spec).docs);
  }
}

TEST_CASE("mix manifest carries the run description") {
  const auto r = mix(streams_of({{DocKind::kOri, 3}, {DocKind::kNer, 3}, {DocKind::kQra, 3}}), MixSpec{});
  CHECK(r.manifest["seed"] == 42);
  CHECK(r.manifest["delimiter"] == "<sep>");
  CHECK(r.manifest["ratios"]["ORI"] == 1.0);
  CHECK(r.manifest["metadata"]["max_input_length"] == 2048);
  CHECK(r.manifest["total"] == 9);
}

TEST_CASE("datasets write byte-identically and load back") {
  Rng rng(41);
  const auto passages = brd::test::random_passages(rng, 25, 4);
  const auto records = brd::test::mock_records(passages);
  TempDir dir;
  const auto a = build_dataset(passages, records, MixSpec{}, FilterSpec{});
  write_dataset(dir / "a" / "train.jsonl", a);
  write_dataset(dir / "b" / "train.jsonl", build_dataset(passages, records, MixSpec{}, FilterSpec{}));
  CHECK(read_file(dir / "a" / "train.jsonl") == read_file(dir / "b" / "train.jsonl"));
  CHECK(read_file(dir / "a" / "manifest.json") == read_file(dir / "b" / "manifest.json"));
  CHECK(load_dataset(dir / "a" / "train.jsonl") == a.docs);
  const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  CHECK(manifest["counts"] == a.manifest["counts"]);
}

TEST_CASE("build_dataset variants") {
  Rng rng(43);
  const auto passages = brd::test::random_passages(rng, 30, 5);
  const auto records = brd::test::mock_records(passages);
  std::size_t sentences = 0;
  for (const auto& p : passages) sentences += p.sentences.size();

  MixSpec sent;
  sent.level = CompositionLevel::kSentence;
  sent.ratios = {{DocKind::kSentNer, 1}, {DocKind::kSentQra, 1}};
  const auto s = build_dataset(passages, records, sent, FilterSpec{});
  CHECK(s.manifest["counts"]["SENT_NER"] == sentences);
  CHECK(s.manifest["counts"]["SENT_QRA"] == sentences);

  // default ratios at sentence level map onto the sentence kinds
  MixSpec sent_default;
  sent_default.level = CompositionLevel::kSentence;
  sent_default.ratios = {{DocKind::kNer, 1}, {DocKind::kQra, 1}};
  const auto sd = build_dataset(passages, records, sent_default, FilterSpec{});
  CHECK(sd.manifest["counts"].contains("SENT_NER"));
  CHECK_FALSE(sd.manifest["counts"].contains("NER"));

  FilterSpec drop_qra;
  drop_qra.drop_qra = true;
  const auto d = build_dataset(passages, records, MixSpec{}, drop_qra);
  CHECK_FALSE(d.manifest["counts"].contains("QRA"));
  CHECK(d.manifest["counts"]["NER"] == passages.size());
  CHECK(d.manifest["filters"]["drop_qra"] == true);

  // a passage missing one record drops out of that kind only
  auto partial = records;
  partial.erase(std::find_if(partial.begin(), partial.end(),
                             [](const auto& r) { return r.kind == BehaviorKind::kNer; }));
  const auto streams = build_streams(passages, partial, MixSpec{});
  CHECK(streams.streams.at(DocKind::kNer).size() == passages.size() - 1);
  CHECK(streams.streams.at(DocKind::kQra).size() == passages.size());
  CHECK(streams.incomplete_passages.at(DocKind::kNer) == 1);
}

TEST_CASE("task pseudo-label documents") {
  const auto tmpl = sst2();
  std::vector<TaskInstance> instances;
  for (int i = 0; i < 10; ++i) {
    TaskInstance inst;
    inst.id = "s" + std::to_string(i);
    inst.fields = {{"sentence", i % 2 ? "a negative take" : "a positive take"}};
    inst.candidates = {"positive", "negative"};
    inst.gold = "positive";
    instances.push_back(inst);
  }
  const Teacher mock(TeacherConfig{});
  TaskComposeSummary summary;
  const auto docs = compose_task_pseudo(instances, mock, &tmpl, &summary);
  REQUIRE(docs.size() == 10);
  CHECK(docs[1].kind == DocKind::kTaskPseudo);
  CHECK(docs[1].text == render_task_prompt(tmpl, instances[1].fields).text + " negative");
  CHECK(summary.composed == 10);
  CHECK(compose_task_pseudo({}, mock, &tmpl).empty());

  // two rejected answers are skipped and counted
  TeacherConfig cfg;
  cfg.backend = TeacherBackend::kRemote;
  cfg.endpoint = "http://unused";
  cfg.model = "m";
  cfg.retry_limit = 0;
  std::atomic<int> served{0};
  auto flaky = std::make_shared<brd::test::ScriptedTransport>([&](const std::string&, const std::string&, int call) {
    ++served;
    if (call == 3 || call == 7) return HttpReply{500, "", ""};
    return HttpReply{200, brd::test::chat_reply("negative"), ""};
  });
  TaskComposeSummary s2;
  const auto partial = compose_task_pseudo(instances, Teacher(cfg, flaky), &tmpl, &s2);
  CHECK(partial.size() == 8);
  CHECK(s2.skipped == 2);
  CHECK(served == 10);
}

TEST_CASE("task gold documents") {
  const auto xnli = TaskTemplate::from_json_file(brd::test::source_dir() / "templates" / "tasks" / "xnli.json");
  TaskInstance inst;
  inst.id = "x";
  inst.fields = {{"premise", "P"}, {"hypothesis", "H"}};
  inst.candidates = {"Yes", "No", "Maybe"};
  inst.gold = "Yes";
  const auto docs = compose_task_gold(std::vector<TaskInstance>{inst}, &xnli);
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].text == "P\nQuestion: Does this imply that \"H\"? Yes, no or maybe?\nAnswer: Yes");
  CHECK(docs[0].kind == DocKind::kTaskGold);
  inst.gold = "Perhaps";
  CHECK_THROWS_AS(compose_task_gold(std::vector<TaskInstance>{inst}, &xnli), Error);
  inst.gold.reset();
  CHECK_THROWS_AS(compose_task_gold(std::vector<TaskInstance>{inst}, &xnli), Error);
  CHECK(compose_task_gold({}, &xnli).empty());
}

TEST_CASE("second-pass reading over task inputs") {
  const auto templates = TeachingTemplates::load(brd::test::source_dir() / "templates");
  std::vector<TaskInstance> instances;
  for (int i = 0; i < 3; ++i) {
    TaskInstance inst;
    inst.id = "b" + std::to_string(i);
    inst.fields = {{"passage", "Oslo is cold. Lima is warm."}, {"question", "is Oslo cold?"}};
    inst.candidates = {"Yes", "No"};
    instances.push_back(inst);
  }
  TaskInstance empty;
  empty.id = "empty";
  empty.prompt = "   ";
  empty.candidates = {"Yes", "No"};
  instances.push_back(empty);
  const Teacher mock(TeacherConfig{});
  TaskComposeSummary summary;
  const auto docs = compose_brd2(instances, mock, templates, {BehaviorKind::kNer}, "<sep>", {}, &summary);
  REQUIRE(docs.size() == 3);
  for (const auto& d : docs) {
    CHECK(d.kind == DocKind::kTaskBrd);
    CHECK(d.text.find(" <sep> In this sentence, \"Oslo\" is a named entity.") != std::string::npos);
  }
  CHECK(summary.skipped == 1);
  CHECK_THROWS_AS(compose_brd2(instances, mock, templates, {}), Error);
}

TEST_CASE("doc kind names") {
  for (auto k : {DocKind::kOri, DocKind::kNer, DocKind::kQra, DocKind::kSentNer, DocKind::kSentQra,
                 DocKind::kTaskPseudo, DocKind::kTaskGold, DocKind::kTaskBrd}) {
    CHECK(parse_doc_kind(to_string(k)) == k);
  }
  CHECK(to_string(DocKind::kSentQra) == "SENT_QRA");
  CHECK_THROWS_AS(parse_doc_kind("XYZ"), Error);
}
