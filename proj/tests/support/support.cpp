// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace brd::test {

fs::path source_dir() { return BRD_SOURCE_DIR; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("brd-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

FakeServer::FakeServer(const std::function<void(httplib::Server&)>& routes) {
  routes(server_);
  port_ = server_.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("fake server could not bind");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

FakeServer::~FakeServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

std::string chat_reply(const std::string& content) {
  nlohmann::json j{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return j.dump();
}

// ---------------------------------------------------------------------------

std::vector<std::string> AddKOracle::words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

AddKOracle::AddKOracle(const std::vector<std::string>& docs, int order, double k, std::vector<double> weights)
    : order_(order), k_(k), weights_(std::move(weights)) {
  for (const auto& d : docs) {
    std::vector<std::string> seq(static_cast<std::size_t>(order_ - 1), "<s>");
    for (const auto& w : words(d)) {
      vocab_[w] = 1;
      seq.push_back(w);
    }
    seq.push_back("</s>");
    padded_.push_back(seq);
  }
}

double AddKOracle::prob(const std::vector<std::string>& history, const std::string& token) const {
  std::vector<std::string> h(static_cast<std::size_t>(order_ - 1), "<s>");
  for (const auto& w : history) h.push_back(map(w));
  const std::string t = token == "</s>" ? token : map(token);
  const double V = static_cast<double>(vocab_size());
  double p = 0.0;
  for (int j = 1; j <= order_; ++j) {
    const std::size_t ctx_len = static_cast<std::size_t>(j - 1);
    const std::vector<std::string> ctx(h.end() - static_cast<std::ptrdiff_t>(ctx_len), h.end());
    double c_ht = 0.0;
    double c_h = 0.0;
    for (const auto& seq : padded_) {
      // every position after the padding is a predicted token
      for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < seq.size(); ++i) {
        bool match = true;
        for (std::size_t m = 0; m < ctx_len; ++m) {
          if (seq[i - ctx_len + m] != ctx[m]) {
            match = false;
            break;
          }
        }
        if (!match) continue;
        c_h += 1.0;
        if (seq[i] == t) c_ht += 1.0;
      }
    }
    p += weights_[static_cast<std::size_t>(j - 1)] * (c_ht + k_) / (c_h + k_ * V);
  }
  return p;
}

double AddKOracle::doc_logprob(const std::string& text) const {
  auto toks = words(text);
  toks.push_back("</s>");
  std::vector<std::string> hist;
  double total = 0.0;
  for (const auto& t : toks) {
    total += std::log(prob(hist, t));
    hist.push_back(t);
  }
  return total;
}

double AddKOracle::avg_logprob(const std::string& prompt, const std::string& continuation) const {
  auto hist = words(prompt);
  const auto cont = words(continuation);
  double total = 0.0;
  for (const auto& t : cont) {
    total += std::log(prob(hist, t));
    hist.push_back(t);
  }
  return total / static_cast<double>(cont.size());
}

// ---------------------------------------------------------------------------

std::vector<TokenLogprob> UniformBackend::continuation_logprobs(std::string_view,
                                                                std::string_view continuation) const {
  std::vector<TokenLogprob> out;
  for (const auto& t : tokenize(continuation)) out.push_back({t, lp_});
  return out;
}

double TableBigramBackend::lookup(const std::string& prev, const std::string& tok) const {
  const auto it = table_.find({prev, tok});
  return it == table_.end() ? floor_ : it->second;
}

std::vector<TokenLogprob> TableBigramBackend::continuation_logprobs(std::string_view prompt,
                                                                    std::string_view continuation) const {
  const auto ptoks = tokenize(prompt);
  std::string prev = ptoks.empty() ? "<s>" : ptoks.back();
  std::vector<TokenLogprob> out;
  for (const auto& t : tokenize(continuation)) {
    out.push_back({t, lookup(prev, t)});
    prev = t;
  }
  return out;
}

HttpReply ScriptedTransport::post(const std::string& path, const std::string& body) {
  const int call = calls_.fetch_add(1);
  return handler_(path, body, call);
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kLower{"river", "stone", "market", "quiet", "built", "across", "under", "with",
                                      "bright", "morning", "letters", "kept", "north", "and", "of", "the"};
const std::vector<std::string> kUpper{"Avila", "Brenner", "Corso", "Delft", "Ember", "Farrow", "Galt", "Hesper"};
const std::vector<std::string> kEnd{".", "!", "?"};

std::string random_sentence(Rng& rng) {
  std::string s = kUpper[rng.below(kUpper.size())];
  const std::size_t len = 2 + rng.below(8);
  for (std::size_t i = 0; i < len; ++i) {
    s.push_back(' ');
    const auto r = rng.below(10);
    if (r < 2) {
      s += kUpper[rng.below(kUpper.size())];
    } else if (r == 2) {
      s += std::to_string(rng.below(3000));
    } else {
      s += kLower[rng.below(kLower.size())];
    }
    if (rng.below(12) == 0) s.push_back(',');
  }
  s += kEnd[rng.below(kEnd.size())];
  return s;
}

}  // namespace

std::vector<RawDocument> random_documents(Rng& rng, std::size_t n, std::size_t max_sentences) {
  std::vector<RawDocument> docs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t count = 1 + rng.below(max_sentences);
    std::string text;
    for (std::size_t s = 0; s < count; ++s) {
      if (s > 0) text += rng.below(4) == 0 ? "  \n " : " ";
      text += random_sentence(rng);
    }
    docs.push_back({"r" + std::to_string(i), text});
  }
  return docs;
}

std::vector<Passage> random_passages(Rng& rng, std::size_t n, std::size_t max_sentences) {
  std::vector<Passage> out;
  for (std::size_t i = 0; i < n; ++i) {
    Passage p{"p" + std::to_string(i), {}};
    const std::size_t count = 1 + rng.below(max_sentences);
    for (std::size_t s = 0; s < count; ++s) p.sentences.push_back({s, random_sentence(rng)});
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<BehaviorRecord> mock_records(std::span<const Passage> passages) {
  std::vector<BehaviorRecord> out;
  for (const auto& p : passages) {
    for (const auto& s : p.sentences) {
      for (auto kind : {BehaviorKind::kNer, BehaviorKind::kQra}) {
        BehaviorRecord r;
        r.passage_id = p.id;
        r.sentence_index = s.index;
        r.kind = kind;
        r.sentence = s.text;
        r.response = mock_teacher(s.text, kind);
        r.teacher_id = "mock-v1";
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace brd::test
