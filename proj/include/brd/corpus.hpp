// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace brd {

struct RawDocument {
  std::string id;
  std::string text;
};

struct Sentence {
  std::size_t index = 0;
  std::string text;

  bool operator==(const Sentence&) const = default;
};

struct Passage {
  std::string id;
  std::vector<Sentence> sentences;

  bool operator==(const Passage&) const = default;
};

enum class CorpusFormat { kJsonl, kPlaintext };

CorpusFormat parse_corpus_format(const std::string& name);
/// Picks jsonl for *.jsonl / *.json, plaintext otherwise.
CorpusFormat corpus_format_for(const std::filesystem::path& path);

/// Streams RawDocuments from a JSONL or blank-line-separated plaintext source.
/// Only the set of seen ids is retained between calls.
class CorpusReader {
 public:
  CorpusReader(std::istream& in, CorpusFormat format);
  /// Opens and owns the file stream.
  CorpusReader(const std::filesystem::path& path, CorpusFormat format);

  std::optional<RawDocument> next();

 private:
  std::optional<RawDocument> next_jsonl();
  std::optional<RawDocument> next_plaintext();
  RawDocument accept(std::string id, std::string text, std::size_t line);

  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_;
  CorpusFormat format_;
  std::size_t line_no_ = 0;
  std::size_t ordinal_ = 0;
  std::unordered_set<std::string> seen_;
};

/// Convenience wrapper collecting every document of a file.
std::vector<RawDocument> load_corpus(const std::filesystem::path& path, CorpusFormat format);

struct SegmenterConfig {
  /// Tokens (including their final period) that never end a sentence.
  std::vector<std::string> abbreviations = default_abbreviations();
  std::size_t max_sentence_chars = 2000;

  static std::vector<std::string> default_abbreviations();
  /// One abbreviation per line; '#' starts a comment.
  static SegmenterConfig from_file(const std::filesystem::path& path);
};

Passage segment(const RawDocument& document, const SegmenterConfig& config = {});

/// Sentence texts joined by single spaces.
std::string passage_text(const Passage& passage);

}  // namespace brd
