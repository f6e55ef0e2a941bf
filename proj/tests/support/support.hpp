// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for unit and acceptance tests.

#pragma once

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "brd/compose.hpp"
#include "brd/corpus.hpp"
#include "brd/http.hpp"
#include "brd/lm.hpp"
#include "brd/util.hpp"

namespace brd::test {

std::filesystem::path source_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// httplib server on an ephemeral localhost port, running on its own thread.
class FakeServer {
 public:
  explicit FakeServer(const std::function<void(httplib::Server&)>& routes);
  ~FakeServer();
  int port() const { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

/// Chat-completions body carrying `content` as the first choice.
std::string chat_reply(const std::string& content);

/// Brute-force interpolated add-k calculator. It keeps the raw padded token
/// sequences and recounts on every query, so it shares nothing with the
/// model's count tables.
class AddKOracle {
 public:
  /// `docs` are split on single spaces; no other tokenization happens.
  AddKOracle(const std::vector<std::string>& docs, int order, double k, std::vector<double> weights);

  std::size_t vocab_size() const { return vocab_.size() + 3; }
  bool known(const std::string& tok) const { return vocab_.count(tok) > 0; }
  /// P(token | history) with `history` unpadded; unknown words are <unk>.
  double prob(const std::vector<std::string>& history, const std::string& token) const;
  /// Log-probability of every token of `text` plus </s>.
  double doc_logprob(const std::string& text) const;
  /// Mean logprob of continuation tokens after the prompt tokens.
  double avg_logprob(const std::string& prompt, const std::string& continuation) const;

  static std::vector<std::string> words(const std::string& text);

 private:
  std::string map(const std::string& tok) const { return known(tok) ? tok : "<unk>"; }

  int order_;
  double k_;
  std::vector<double> weights_;
  std::map<std::string, int> vocab_;
  std::vector<std::vector<std::string>> padded_;
};

/// Every token gets the same log-probability; documents add one end token.
class UniformBackend : public ScorerBackend {
 public:
  explicit UniformBackend(double token_logprob, std::string id = "uniform")
      : lp_(token_logprob), id_(std::move(id)) {}
  std::string id() const override { return id_; }
  std::vector<TokenLogprob> continuation_logprobs(std::string_view prompt,
                                                  std::string_view continuation) const override;

 private:
  double lp_;
  std::string id_;
};

/// Scores tokens from a fixed bigram table given as log-probabilities;
/// unlisted pairs get `floor`.
class TableBigramBackend : public ScorerBackend {
 public:
  TableBigramBackend(std::map<std::pair<std::string, std::string>, double> table, double floor)
      : table_(std::move(table)), floor_(floor) {}
  std::string id() const override { return "table-bigram"; }
  std::vector<TokenLogprob> continuation_logprobs(std::string_view prompt,
                                                  std::string_view continuation) const override;
  double lookup(const std::string& prev, const std::string& tok) const;

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
  double floor_;
};

/// In-process Transport that answers from a callback, counting calls.
class ScriptedTransport : public Transport {
 public:
  using Handler = std::function<HttpReply(const std::string& path, const std::string& body, int call)>;
  explicit ScriptedTransport(Handler handler) : handler_(std::move(handler)) {}
  HttpReply post(const std::string& path, const std::string& body) override;
  int calls() const { return calls_.load(); }

 private:
  Handler handler_;
  std::atomic<int> calls_{0};
};

/// Random documents of 1..max_sentences sentences built from capitalized and
/// lowercase words, numbers and terminal punctuation.
std::vector<RawDocument> random_documents(Rng& rng, std::size_t n, std::size_t max_sentences);
std::vector<Passage> random_passages(Rng& rng, std::size_t n, std::size_t max_sentences);

/// Mock-teacher records for every sentence and kind of `passages`.
std::vector<BehaviorRecord> mock_records(std::span<const Passage> passages);

}  // namespace brd::test
