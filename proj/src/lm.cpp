// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/lm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u) != 0 && u < 0x80) {
      flush();
    } else if (u < 0x80 && std::ispunct(u) != 0) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(lowercase && c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  flush();
  return tokens;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  for (const char* special : {"<s>", "</s>", "<unk>"}) {
    index_.emplace(special, static_cast<int>(tokens_.size()));
    tokens_.emplace_back(special);
  }
  for (const auto& t : tokens) {
    if (index_.emplace(t, static_cast<int>(tokens_.size())).second) tokens_.push_back(t);
  }
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

// ---------------------------------------------------------------------------

void NGramModel::validate() const {
  if (order_ < 1) throw Error("n-gram order must be >= 1");
  if (!(k_ > 0.0) || !std::isfinite(k_)) throw Error("smoothing k must be > 0");
  if (weights_.size() != static_cast<std::size_t>(order_)) {
    throw Error("expected " + std::to_string(order_) + " interpolation weights, got " +
                std::to_string(weights_.size()));
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error("interpolation weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("interpolation weights must sum to 1");
}

NGramModel NGramModel::train_texts(std::span<const std::string> texts, const NGramConfig& config) {
  NGramModel m;
  m.order_ = config.order;
  m.k_ = config.k;
  m.lowercase_ = config.lowercase;
  m.weights_ = config.weights;
  if (m.weights_.empty() && config.order >= 1) {
    m.weights_.assign(static_cast<std::size_t>(config.order), 1.0 / config.order);
  }
  m.validate();

  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(texts.size());
  std::set<std::string> types;
  std::size_t total_tokens = 0;
  for (const auto& text : texts) {
    tokenized.push_back(tokenize(text, m.lowercase_));
    types.insert(tokenized.back().begin(), tokenized.back().end());
    total_tokens += tokenized.back().size();
  }
  if (total_tokens == 0) throw Error("cannot train on an empty corpus");
  m.vocab_ = Vocabulary(std::vector<std::string>(types.begin(), types.end()));

  const auto pad = static_cast<std::size_t>(m.order_ - 1);
  m.tables_.assign(static_cast<std::size_t>(m.order_), Table{});
  std::vector<int> padded;
  for (const auto& tokens : tokenized) {
    if (tokens.empty()) continue;
    padded.assign(pad, Vocabulary::kBos);
    for (const auto& t : tokens) padded.push_back(m.vocab_.id(t));
    padded.push_back(Vocabulary::kEos);
    for (std::size_t i = pad; i < padded.size(); ++i) {
      for (std::size_t len = 0; len <= pad; ++len) {
        std::vector<int> ctx(padded.begin() + static_cast<std::ptrdiff_t>(i - len),
                             padded.begin() + static_cast<std::ptrdiff_t>(i));
        auto& entry = m.tables_[len][std::move(ctx)];
        ++entry.total;
        ++entry.next[padded[i]];
      }
    }
  }
  return m;
}

NGramModel NGramModel::train(std::span<const TrainingDoc> docs, const NGramConfig& config) {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  return train_texts(texts, config);
}

std::vector<int> NGramModel::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& t : tokenize(text, lowercase_)) ids.push_back(vocab_.id(t));
  return ids;
}

const NGramModel::ContextCounts* NGramModel::lookup(std::size_t context_len,
                                                    std::span<const int> padded_history) const {
  const auto& table = tables_[context_len];
  std::vector<int> ctx(padded_history.end() - static_cast<std::ptrdiff_t>(context_len), padded_history.end());
  auto it = table.find(ctx);
  return it == table.end() ? nullptr : &it->second;
}

double NGramModel::prob(std::span<const int> history, int token) const {
  const auto pad = static_cast<std::size_t>(order_ - 1);
  // only the last order-1 ids matter; pad with BOS when history is short
  std::vector<int> padded;
  padded.reserve(pad);
  const std::size_t keep = std::min(pad, history.size());
  padded.assign(pad - keep, Vocabulary::kBos);
  padded.insert(padded.end(), history.end() - static_cast<std::ptrdiff_t>(keep), history.end());

  const double kv = k_ * static_cast<double>(vocab_.size());
  double p = 0.0;
  for (std::size_t len = 0; len <= pad; ++len) {
    if (weights_[len] == 0.0) continue;
    std::int64_t c = 0;
    std::int64_t total = 0;
    if (const auto* entry = lookup(len, padded)) {
      total = entry->total;
      if (auto it = entry->next.find(token); it != entry->next.end()) c = it->second;
    }
    p += weights_[len] * (static_cast<double>(c) + k_) / (static_cast<double>(total) + kv);
  }
  return p;
}

double NGramModel::logprob(std::span<const int> history, int token) const { return std::log(prob(history, token)); }

std::int64_t NGramModel::count(std::span<const int> context, int token) const {
  if (context.size() >= static_cast<std::size_t>(order_)) return 0;
  const auto& table = tables_[context.size()];
  auto it = table.find(std::vector<int>(context.begin(), context.end()));
  if (it == table.end()) return 0;
  auto n = it->second.next.find(token);
  return n == it->second.next.end() ? 0 : n->second;
}

std::int64_t NGramModel::context_total(std::span<const int> context) const {
  if (context.size() >= static_cast<std::size_t>(order_)) return 0;
  const auto& table = tables_[context.size()];
  auto it = table.find(std::vector<int>(context.begin(), context.end()));
  return it == table.end() ? 0 : it->second.total;
}

json NGramModel::to_json() const {
  json tables = json::array();
  for (const auto& table : tables_) {
    json entries = json::array();
    for (const auto& [ctx, counts] : table) {
      json next = json::array();
      for (const auto& [tok, c] : counts.next) next.push_back(json::array({tok, c}));
      entries.push_back(json::array({ctx, next}));
    }
    tables.push_back(std::move(entries));
  }
  return json{{"format", "brd-ngram"}, {"version", 1},         {"order", order_},
              {"k", k_},               {"lowercase", lowercase_}, {"weights", weights_},
              {"vocab", vocab_.tokens()}, {"tables", tables}};
}

NGramModel NGramModel::from_json(const json& j) {
  if (j.value("format", std::string()) != "brd-ngram" || j.value("version", 0) != 1) {
    throw Error("not a brd-ngram v1 model");
  }
  NGramModel m;
  m.order_ = j.at("order").get<int>();
  m.k_ = j.at("k").get<double>();
  m.lowercase_ = j.at("lowercase").get<bool>();
  m.weights_ = j.at("weights").get<std::vector<double>>();
  m.validate();
  const auto vocab = j.at("vocab").get<std::vector<std::string>>();
  if (vocab.size() < 3 || vocab[0] != "<s>" || vocab[1] != "</s>" || vocab[2] != "<unk>") {
    throw Error("model vocabulary must start with <s>, </s>, <unk>");
  }
  m.vocab_ = Vocabulary(std::vector<std::string>(vocab.begin() + 3, vocab.end()));
  if (m.vocab_.size() != vocab.size()) throw Error("model vocabulary has duplicate entries");

  const auto& tables = j.at("tables");
  if (tables.size() != static_cast<std::size_t>(m.order_)) throw Error("model has wrong number of count tables");
  const auto vsize = static_cast<int>(m.vocab_.size());
  for (std::size_t len = 0; len < tables.size(); ++len) {
    Table table;
    for (const auto& entry : tables[len]) {
      auto ctx = entry.at(0).get<std::vector<int>>();
      if (ctx.size() != len) throw Error("model context length mismatch");
      ContextCounts counts;
      for (const auto& pair : entry.at(1)) {
        const int tok = pair.at(0).get<int>();
        const auto c = pair.at(1).get<std::int64_t>();
        if (tok < 0 || tok >= vsize || c < 0) throw Error("model count table out of range");
        counts.next[tok] = c;
        counts.total += c;
      }
      table.emplace(std::move(ctx), std::move(counts));
    }
    m.tables_.push_back(std::move(table));
  }
  return m;
}

void NGramModel::save(const std::filesystem::path& path) const { write_file(path, to_json().dump() + "\n"); }

NGramModel NGramModel::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string NGramModel::digest() const { return sha256_hex(to_json().dump()); }

// ---------------------------------------------------------------------------

double ScorerBackend::document_logprob(std::string_view text) const {
  double sum = 0.0;
  for (const auto& t : continuation_logprobs("", text)) sum += t.logprob;
  return sum;
}

NGramBackend::NGramBackend(std::shared_ptr<const NGramModel> model) : model_(std::move(model)) {
  if (!model_) throw Error("NGramBackend needs a model");
  id_ = "ngram:" + model_->digest().substr(0, 12);
}

NGramBackend::NGramBackend(NGramModel model) : NGramBackend(std::make_shared<const NGramModel>(std::move(model))) {}

std::vector<TokenLogprob> NGramBackend::continuation_logprobs(std::string_view prompt,
                                                              std::string_view continuation) const {
  auto history = model_->encode(prompt);
  const auto tokens = tokenize(continuation, model_->lowercase());
  std::vector<TokenLogprob> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    const int id = model_->vocab().id(t);
    out.push_back(TokenLogprob{t, model_->logprob(history, id)});
    history.push_back(id);
  }
  return out;
}

double NGramBackend::document_logprob(std::string_view text) const {
  auto ids = model_->encode(text);
  ids.push_back(Vocabulary::kEos);
  double sum = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    sum += model_->logprob(std::span<const int>(ids.data(), i), ids[i]);
  }
  return sum;
}

RemoteScorer::RemoteScorer(std::string endpoint, std::string path, double timeout_s,
                           std::shared_ptr<Transport> transport)
    : endpoint_(std::move(endpoint)), path_(std::move(path)), transport_(std::move(transport)) {
  if (endpoint_.empty()) throw Error("remote scorer requires an endpoint");
  if (!transport_) transport_ = std::make_shared<HttpTransport>(endpoint_, timeout_s, nullptr);
}

std::vector<TokenLogprob> RemoteScorer::continuation_logprobs(std::string_view prompt,
                                                              std::string_view continuation) const {
  const json request{{"prompt", std::string(prompt)}, {"continuation", std::string(continuation)}};
  const auto reply = transport_->post(path_, request.dump());
  if (reply.status != 200) {
    throw Error("remote scorer " + id() + " failed: " +
                (reply.status == 0 ? reply.error : "HTTP " + std::to_string(reply.status)));
  }
  std::vector<TokenLogprob> out;
  try {
    const auto parsed = json::parse(reply.body);
    for (const auto& t : parsed.at("tokens")) {
      TokenLogprob tl{t.at("token").get<std::string>(), t.at("logprob").get<double>()};
      if (!std::isfinite(tl.logprob)) throw Error("non-finite logprob");
      out.push_back(std::move(tl));
    }
  } catch (const std::exception& e) {
    throw Error("remote scorer " + id() + " returned a malformed body: " + e.what());
  }
  return out;
}

std::vector<TokenLogprob> sequence_logprobs(const ScorerBackend& backend, std::string_view text) {
  return backend.continuation_logprobs("", text);
}

double avg_logprob(const ScorerBackend& backend, std::string_view prompt, std::string_view continuation) {
  const auto scored = backend.continuation_logprobs(prompt, continuation);
  if (scored.empty()) throw Error("avg_logprob needs a non-empty continuation");
  double sum = 0.0;
  for (const auto& t : scored) sum += t.logprob;
  return sum / static_cast<double>(scored.size());
}

double nll(const ScorerBackend& backend, std::span<const std::string> texts) {
  if (texts.empty()) throw Error("nll needs at least one document");
  double sum = 0.0;
  for (const auto& t : texts) sum -= backend.document_logprob(t);
  return sum / static_cast<double>(texts.size());
}

double nll(const ScorerBackend& backend, std::span<const TrainingDoc> docs) {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  return nll(backend, texts);
}

}  // namespace brd
