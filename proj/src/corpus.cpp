// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <nlohmann/json.hpp>

#include "brd/util.hpp"

namespace brd {

using nlohmann::json;

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "plaintext" || name == "text" || name == "txt") return CorpusFormat::kPlaintext;
  throw Error("unknown corpus format '" + name + "' (expected jsonl or plaintext)");
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::kJsonl : CorpusFormat::kPlaintext;
}

CorpusReader::CorpusReader(std::istream& in, CorpusFormat format) : in_(&in), format_(format) {}

CorpusReader::CorpusReader(const std::filesystem::path& path, CorpusFormat format)
    : owned_(std::make_unique<std::ifstream>(path, std::ios::binary)),
      in_(owned_.get()),
      format_(format) {
  if (!*owned_) throw Error("cannot open corpus " + path.string());
}

std::optional<RawDocument> CorpusReader::next() {
  return format_ == CorpusFormat::kJsonl ? next_jsonl() : next_plaintext();
}

RawDocument CorpusReader::accept(std::string id, std::string text, std::size_t line) {
  if (id.empty()) throw Error("line " + std::to_string(line) + ": empty document id");
  if (trim(text).empty()) {
    throw Error("line " + std::to_string(line) + ": document '" + id + "' has empty text");
  }
  if (!seen_.insert(id).second) throw Error("duplicate document id '" + id + "'");
  return RawDocument{std::move(id), std::move(text)};
}

std::optional<RawDocument> CorpusReader::next_jsonl() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_no_;
    if (trim(line).empty()) continue;
    const auto where = "line " + std::to_string(line_no_);
    if (!is_valid_utf8(line)) throw Error(where + ": invalid UTF-8");
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(where + ": malformed JSON: " + e.what());
    }
    if (!record.is_object() || !record.contains("id") || !record.contains("text") ||
        !record["id"].is_string() || !record["text"].is_string()) {
      throw Error(where + ": record needs string fields 'id' and 'text'");
    }
    return accept(record["id"].get<std::string>(), record["text"].get<std::string>(), line_no_);
  }
  return std::nullopt;
}

std::optional<RawDocument> CorpusReader::next_plaintext() {
  std::string line;
  std::string paragraph;
  std::size_t first_line = 0;
  while (std::getline(*in_, line)) {
    ++line_no_;
    if (!is_valid_utf8(line)) throw Error("line " + std::to_string(line_no_) + ": invalid UTF-8");
    auto content = trim(line);
    if (content.empty()) {
      if (!paragraph.empty()) break;
      continue;
    }
    if (paragraph.empty()) {
      first_line = line_no_;
    } else {
      paragraph.push_back(' ');
    }
    paragraph += content;
  }
  if (paragraph.empty()) return std::nullopt;
  return accept("doc-" + std::to_string(ordinal_++), normalize_whitespace(paragraph), first_line);
}

std::vector<RawDocument> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  CorpusReader reader(path, format);
  std::vector<RawDocument> docs;
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

std::vector<std::string> SegmenterConfig::default_abbreviations() {
  return {"Mr.",  "Mrs.", "Ms.",  "Dr.",  "Prof.", "Sr.",  "Jr.",   "St.",  "Mt.",
          "vs.",  "etc.", "e.g.", "i.e.", "Inc.",  "Ltd.", "Corp.", "Co.",  "No.",
          "Jan.", "Feb.", "Mar.", "Apr.", "Aug.",  "Sep.", "Sept.", "Oct.", "Nov.",
          "Dec.", "U.S.", "U.K.", "Gen.", "Gov.",  "Sen.", "Rep.",  "Fig.", "approx."};
}

SegmenterConfig SegmenterConfig::from_file(const std::filesystem::path& path) {
  SegmenterConfig config;
  config.abbreviations.clear();
  for (const auto& raw : split_lines(read_file(path))) {
    auto entry = trim(raw);
    if (entry.empty() || entry.front() == '#') continue;
    config.abbreviations.push_back(std::move(entry));
  }
  return config;
}

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool opens_sentence(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '"' || c == '\'' || c == '(' ||
         c == '[';
}

// Back off to a UTF-8 character boundary at or before pos.
std::size_t char_boundary(std::string_view s, std::size_t pos) {
  while (pos > 0 && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) --pos;
  return pos;
}

void push_sentence(std::vector<Sentence>& out, std::string_view text, std::size_t limit) {
  while (text.size() > limit) {
    auto cut = text.rfind(' ', limit);
    std::size_t resume;
    if (cut == std::string_view::npos || cut == 0) {
      cut = char_boundary(text, limit);
      resume = cut;
    } else {
      resume = cut + 1;
    }
    spdlog::warn("sentence longer than {} chars hard-split", limit);
    out.push_back(Sentence{out.size(), std::string(text.substr(0, cut))});
    text.remove_prefix(resume);
  }
  if (!text.empty()) out.push_back(Sentence{out.size(), std::string(text)});
}

}  // namespace

Passage segment(const RawDocument& document, const SegmenterConfig& config) {
  const std::string text = normalize_whitespace(document.text);
  if (text.empty()) throw Error("document '" + document.id + "' has empty text");
  Passage passage{document.id, {}};

  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_terminal(text[i])) continue;
    std::size_t end = i + 1;
    while (end < text.size() && (is_terminal(text[end]) || is_closer(text[end]))) ++end;
    if (end + 1 >= text.size() || text[end] != ' ' || !opens_sentence(text[end + 1])) {
      i = end - 1;
      continue;
    }
    // the word ending at the terminal mark, e.g. "Dr."
    const auto word_start = text.rfind(' ', i);
    const std::size_t ws = word_start == std::string::npos ? 0 : word_start + 1;
    const std::string_view word(text.data() + ws, end - ws);
    if (text[i] == '.' && std::find(config.abbreviations.begin(), config.abbreviations.end(),
                                     word) != config.abbreviations.end()) {
      i = end - 1;
      continue;
    }
    push_sentence(passage.sentences, std::string_view(text).substr(start, end - start),
                  config.max_sentence_chars);
    start = end + 1;
    i = end;
  }
  if (start < text.size()) {
    push_sentence(passage.sentences, std::string_view(text).substr(start),
                  config.max_sentence_chars);
  }
  return passage;
}

std::string passage_text(const Passage& passage) {
  std::string out;
  for (const auto& s : passage.sentences) {
    if (!out.empty()) out.push_back(' ');
    out += s.text;
  }
  return out;
}

}  // namespace brd
