/*
 * Copyright 2026 The Attrshield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Labeled text ingestion: corpus files, tokenization, vocabulary and splits.

#ifndef ATTRSHIELD_CORPUS_H_
#define ATTRSHIELD_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace attrshield::corpus {

inline constexpr std::size_t kDefaultMaxLen = 250;
inline constexpr std::string_view kUnkToken = "<unk>";

enum class CorpusFormat { kTsv, kCsv };

// Picks the format from the file extension; anything but ".csv" is TSV.
CorpusFormat FormatFromPath(const std::filesystem::path& path);

struct RawRecord {
  std::string label;
  std::string text;
};

struct LoadResult {
  std::vector<RawRecord> records;
  std::size_t skipped = 0;
};

// Reads `label<TAB>text` rows (TSV) or a `label,text` CSV with header.
// Rows with fewer than two fields or an empty label/text are skipped and
// counted. Throws std::runtime_error when the file cannot be read.
LoadResult LoadCorpus(const std::filesystem::path& path, CorpusFormat format);

// Lowercases, splits on whitespace and strips edge punctuation per token.
// Apostrophes and digits inside a token survive; @mentions, #tags and URLs
// are lowercased but otherwise kept whole. Empty tokens are dropped; output
// is cut at max_len.
std::vector<std::string> Tokenize(std::string_view text,
                                  std::size_t max_len = kDefaultMaxLen);

struct TokenizedDocument {
  std::vector<std::string> tokens;
  int label_id = 0;
  // True where a visual (character-level) edit was applied.
  std::vector<bool> perturbed_mask;
  std::uint64_t origin_id = 0;

  TokenizedDocument() = default;
  TokenizedDocument(std::vector<std::string> toks, int label, std::uint64_t origin)
      : tokens(std::move(toks)),
        label_id(label),
        perturbed_mask(tokens.size(), false),
        origin_id(origin) {}

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  // Display form: tokens joined by single spaces.
  std::string Text() const;
};

// Class names sorted lexicographically; the index is the label id.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  static LabelSet FromRecords(const std::vector<RawRecord>& records);

  // -1 when the name is unknown.
  int Id(const std::string& name) const;
  const std::string& Name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  int size() const { return static_cast<int>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

struct DocumentBatch {
  std::vector<TokenizedDocument> docs;
  // Records dropped because their label is unknown or they tokenize to nothing.
  std::size_t skipped = 0;
};

// Tokenizes records into documents. origin_id is the record's index in
// `records`, so ids stay stable for a given file.
DocumentBatch MakeDocuments(const std::vector<RawRecord>& records, const LabelSet& labels,
                            std::size_t max_len = kDefaultMaxLen);

class Vocabulary {
 public:
  static constexpr int kUnkId = 0;

  // Token id, or kUnkId for out-of-vocabulary tokens.
  int Id(const std::string& token) const;
  bool Contains(const std::string& token) const { return ids_.count(token) > 0; }
  const std::string& Token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t Count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const LabelSet& labels() const { return labels_; }

 private:
  friend Vocabulary BuildVocab(const std::vector<TokenizedDocument>&, std::size_t,
                               const LabelSet&);
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, int> ids_;
  LabelSet labels_;
};

// Keeps tokens with frequency >= min_count, ordered by descending frequency
// then lexicographically, after the reserved UNK id 0. Throws
// std::invalid_argument on an empty corpus or min_count == 0.
Vocabulary BuildVocab(const std::vector<TokenizedDocument>& docs, std::size_t min_count,
                      const LabelSet& labels = {});

struct DatasetSplit {
  std::vector<TokenizedDocument> train;
  std::vector<TokenizedDocument> test;
  std::uint64_t seed = 0;
};

// Deterministic shuffle under `seed`; round(train_ratio * n) documents go to
// train, clamped so both sides are non-empty.
DatasetSplit Split(const std::vector<TokenizedDocument>& docs, double train_ratio,
                   std::uint64_t seed);

// Writes documents back out as `label<TAB>text` using the given label set.
void WriteTsv(const std::filesystem::path& path, const std::vector<TokenizedDocument>& docs,
              const LabelSet& labels);

}  // namespace attrshield::corpus

#endif  // ATTRSHIELD_CORPUS_H_
