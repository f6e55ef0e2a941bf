// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "brd/compose.hpp"
#include "brd/http.hpp"

namespace brd {

/// Lowercases ASCII (optionally), splits on whitespace and detaches every
/// ASCII punctuation mark as its own token.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

class Vocabulary {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;

  Vocabulary();
  /// Specials first, then `tokens` in the given order (duplicates ignored).
  explicit Vocabulary(const std::vector<std::string>& tokens);

  /// Unknown tokens map to kUnk.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct NGramConfig {
  int order = 3;
  double k = 0.1;
  /// Interpolation weight per order (unigram first). Empty means equal.
  std::vector<double> weights;
  bool lowercase = true;
};

/// Interpolated add-k n-gram model:
///
///   P(t | h) = sum_j w_j * (c_j(h_j, t) + k) / (c_j(h_j) + k * V)
///
/// where h_j is the last j-1 tokens of the BOS-padded history, c_j(h_j) is
/// the number of times h_j was followed by any token and V counts every
/// vocabulary entry including the specials. Each order's term is a proper
/// distribution over the vocabulary, so the mixture is one too.
class NGramModel {
 public:
  static NGramModel train(std::span<const TrainingDoc> docs, const NGramConfig& config = {});
  static NGramModel train_texts(std::span<const std::string> texts, const NGramConfig& config = {});

  int order() const { return order_; }
  double k() const { return k_; }
  bool lowercase() const { return lowercase_; }
  const std::vector<double>& weights() const { return weights_; }
  const Vocabulary& vocab() const { return vocab_; }

  std::vector<int> encode(std::string_view text) const;

  /// `history` holds the ids preceding the token, without padding; the model
  /// pads with BOS and keeps the last order-1 ids.
  double prob(std::span<const int> history, int token) const;
  double logprob(std::span<const int> history, int token) const;

  /// Raw count of `context` followed by `token` (context length < order).
  std::int64_t count(std::span<const int> context, int token) const;
  /// Number of times `context` was followed by any token.
  std::int64_t context_total(std::span<const int> context) const;

  nlohmann::json to_json() const;
  static NGramModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static NGramModel load(const std::filesystem::path& path);
  /// SHA-256 of the serialized model.
  std::string digest() const;

 private:
  struct ContextCounts {
    std::int64_t total = 0;
    std::map<int, std::int64_t> next;
  };
  using Table = std::map<std::vector<int>, ContextCounts>;

  NGramModel() = default;
  void validate() const;
  const ContextCounts* lookup(std::size_t context_len, std::span<const int> padded_history) const;

  int order_ = 3;
  double k_ = 0.1;
  bool lowercase_ = true;
  std::vector<double> weights_;
  Vocabulary vocab_;
  std::vector<Table> tables_;  // tables_[j] holds contexts of length j
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

/// Anything that can score text token by token.
class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;
  virtual std::string id() const = 0;
  /// Log-probabilities of the continuation's tokens, each conditioned on the
  /// prompt and the continuation tokens before it. Prompt tokens are not scored.
  virtual std::vector<TokenLogprob> continuation_logprobs(std::string_view prompt,
                                                          std::string_view continuation) const = 0;
  /// Total log-probability of a standalone document. Backends that model an
  /// end-of-text token include it.
  virtual double document_logprob(std::string_view text) const;
};

class NGramBackend : public ScorerBackend {
 public:
  explicit NGramBackend(std::shared_ptr<const NGramModel> model);
  explicit NGramBackend(NGramModel model);

  std::string id() const override { return id_; }
  std::vector<TokenLogprob> continuation_logprobs(std::string_view prompt,
                                                  std::string_view continuation) const override;
  double document_logprob(std::string_view text) const override;
  const NGramModel& model() const { return *model_; }

 private:
  std::shared_ptr<const NGramModel> model_;
  std::string id_;
};

/// Scores through an HTTP endpoint:
///   POST {"prompt": ..., "continuation": ...}
///   -> {"tokens": [{"token": ..., "logprob": ...}, ...]}
class RemoteScorer : public ScorerBackend {
 public:
  RemoteScorer(std::string endpoint, std::string path = "/v1/logprobs", double timeout_s = 60.0,
               std::shared_ptr<Transport> transport = nullptr);

  std::string id() const override { return "remote:" + endpoint_ + path_; }
  std::vector<TokenLogprob> continuation_logprobs(std::string_view prompt,
                                                  std::string_view continuation) const override;

 private:
  std::string endpoint_;
  std::string path_;
  std::shared_ptr<Transport> transport_;
};

std::vector<TokenLogprob> sequence_logprobs(const ScorerBackend& backend, std::string_view text);

/// Mean log-probability of the continuation tokens given the prompt.
double avg_logprob(const ScorerBackend& backend, std::string_view prompt, std::string_view continuation);

/// Mean over documents of the summed negative token log-probabilities.
double nll(const ScorerBackend& backend, std::span<const std::string> texts);
double nll(const ScorerBackend& backend, std::span<const TrainingDoc> docs);

}  // namespace brd
