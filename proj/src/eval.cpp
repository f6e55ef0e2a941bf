// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/eval.hpp"

#include <cmath>
#include <sstream>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;

json Prediction::to_json() const {
  json j{{"id", id}, {"scores", scores}, {"chosen", chosen}};
  if (correct) j["correct"] = *correct;
  return j;
}

std::string to_string(EvalMode mode) { return mode == EvalMode::kBlind ? "blind" : "relaxed"; }

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "blind") return EvalMode::kBlind;
  if (name == "relaxed") return EvalMode::kRelaxed;
  throw Error("unknown eval mode '" + name + "' (expected blind or relaxed)");
}

json EvalReport::to_json() const {
  json preds = json::array();
  for (const auto& p : predictions) preds.push_back(p.to_json());
  json j{{"task", task_id}, {"n", n}, {"mode", to_string(mode)}, {"backend", backend_id}, {"predictions", preds}};
  if (accuracy) j["accuracy"] = *accuracy;
  return j;
}

std::string reports_markdown(std::span<const EvalReport> reports) {
  std::ostringstream md;
  md << "| task | mode | backend | n | accuracy |\n|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    md << "| " << r.task_id << " | " << to_string(r.mode) << " | " << r.backend_id << " | " << r.n << " | ";
    if (r.accuracy) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", *r.accuracy);
      md << buf;
    } else {
      md << "n/a";
    }
    md << " |\n";
  }
  return md.str();
}

std::size_t select_candidate(std::span<const double> scores) {
  if (scores.empty()) throw Error("no candidate scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

Prediction predict(const TaskInstance& instance, const ScorerBackend& backend, const TaskTemplate* tmpl) {
  validate_instance(instance);
  const auto prompt = instance_prompt(instance, tmpl);
  Prediction p;
  p.id = instance.id;
  for (const auto& c : instance.candidates) {
    try {
      p.scores.push_back(avg_logprob(backend, prompt, c));
    } catch (const std::exception& e) {
      throw Error("instance '" + instance.id + "' candidate '" + c + "': " + e.what());
    }
  }
  p.chosen = instance.candidates[select_candidate(p.scores)];
  if (instance.gold) p.correct = p.chosen == *instance.gold;
  return p;
}

EvalReport evaluate(const Taskset& taskset, const ScorerBackend& backend, EvalMode mode, const TaskTemplate* tmpl) {
  EvalReport report;
  report.task_id = taskset.task_id;
  report.mode = mode;
  report.backend_id = backend.id();
  report.n = taskset.instances.size();
  bool all_gold = true;
  std::size_t correct = 0;
  for (const auto& inst : taskset.instances) {
    report.predictions.push_back(predict(inst, backend, tmpl));
    const auto& p = report.predictions.back();
    if (!p.correct) {
      all_gold = false;
    } else if (*p.correct) {
      ++correct;
    }
  }
  if (all_gold && report.n > 0) report.accuracy = static_cast<double>(correct) / static_cast<double>(report.n);
  return report;
}

TaskSplit split_taskset(std::vector<TaskInstance> instances, double train_fraction, double tune_fraction,
                        double test_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && tune_fraction > 0.0 && test_fraction > 0.0)) {
    throw Error("split fractions must be positive");
  }
  if (train_fraction + tune_fraction + test_fraction > 1.0 + 1e-9) throw Error("split fractions must sum to <= 1");
  const auto n = instances.size();
  if (n < 3) throw Error("need at least 3 instances to split");

  Rng rng(substream_seed(seed, "split"));
  rng.shuffle(instances);
  auto block = [n](double f) { return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9)); };
  const auto tune = block(tune_fraction);
  const auto test = block(test_fraction);
  const auto train = n - tune - test;

  TaskSplit split;
  auto it = std::make_move_iterator(instances.begin());
  split.train.assign(it, it + static_cast<std::ptrdiff_t>(train));
  split.tune.assign(it + static_cast<std::ptrdiff_t>(train), it + static_cast<std::ptrdiff_t>(train + tune));
  split.test.assign(it + static_cast<std::ptrdiff_t>(train + tune), std::make_move_iterator(instances.end()));
  return split;
}

}  // namespace brd
