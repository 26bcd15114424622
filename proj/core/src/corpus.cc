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

#include "attrshield/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "attrshield/rng.h"

namespace attrshield::corpus {
namespace {

std::string Trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Length in bytes of a whitespace sequence starting at s[i], 0 if none.
// Covers ASCII whitespace and the Unicode space separators in UTF-8.
std::size_t WhitespaceLength(std::string_view s, std::size_t i) {
  const auto c0 = static_cast<unsigned char>(s[i]);
  if (c0 < 0x80) return std::isspace(c0) ? 1 : 0;
  auto at = [&](std::size_t k) -> unsigned char {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0;
  };
  if (c0 == 0xC2 && (at(1) == 0xA0 || at(1) == 0x85)) return 2;
  if (c0 == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;  // U+1680
  if (c0 == 0xE2 && at(1) == 0x80) {
    const unsigned char c2 = at(2);
    if ((c2 >= 0x80 && c2 <= 0x8A) || c2 == 0xA8 || c2 == 0xA9 || c2 == 0xAF) return 3;
  }
  if (c0 == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;  // U+205F
  if (c0 == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;  // U+3000
  return 0;
}

bool IsEdgePunct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

bool KeepVerbatim(std::string_view tok) {
  return tok.starts_with("http://") || tok.starts_with("https://") ||
         tok.starts_with("www.") || tok.starts_with('@') || tok.starts_with('#');
}

std::string NormalizeToken(std::string_view raw) {
  std::string tok(raw);
  for (char& c : tok) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  if (KeepVerbatim(tok)) return tok;
  std::size_t b = 0, e = tok.size();
  while (b < e && IsEdgePunct(static_cast<unsigned char>(tok[b]))) ++b;
  while (e > b && IsEdgePunct(static_cast<unsigned char>(tok[e - 1]))) --e;
  return tok.substr(b, e - b);
}

// Splits one CSV line honoring double quotes. Returns false on an
// unterminated quote.
bool SplitCsvLine(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return !quoted;
}

}  // namespace

CorpusFormat FormatFromPath(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? CorpusFormat::kCsv : CorpusFormat::kTsv;
}

LoadResult LoadCorpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read corpus file: " + path.string());

  LoadResult result;
  std::string line;
  std::vector<std::string> fields;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (format == CorpusFormat::kCsv) {
      if (first) {
        first = false;
        if (SplitCsvLine(line, fields) && fields.size() >= 2 && Trim(fields[0]) == "label" &&
            Trim(fields[1]) == "text") {
          continue;
        }
      }
      if (line.empty()) continue;
      if (!SplitCsvLine(line, fields) || fields.size() < 2) {
        ++result.skipped;
        continue;
      }
      // Unquoted commas in the text column are folded back in.
      std::string text = fields[1];
      for (std::size_t i = 2; i < fields.size(); ++i) text += "," + fields[i];
      fields.resize(2);
      fields[1] = std::move(text);
    } else {
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        ++result.skipped;
        continue;
      }
      fields = {line.substr(0, tab), line.substr(tab + 1)};
    }
    RawRecord rec{Trim(fields[0]), Trim(fields[1])};
    if (rec.label.empty() || rec.text.empty()) {
      ++result.skipped;
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  if (in.bad()) throw std::runtime_error("I/O error while reading " + path.string());
  return result;
}

std::vector<std::string> Tokenize(std::string_view text, std::size_t max_len) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size() && tokens.size() < max_len) {
    if (std::size_t ws = WhitespaceLength(text, i)) {
      i += ws;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && WhitespaceLength(text, i) == 0) ++i;
    std::string tok = NormalizeToken(text.substr(start, i - start));
    if (!tok.empty()) tokens.push_back(std::move(tok));
  }
  return tokens;
}

std::string TokenizedDocument::Text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!ids_.emplace(names_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate class name: " + names_[i]);
    }
  }
}

LabelSet LabelSet::FromRecords(const std::vector<RawRecord>& records) {
  std::vector<std::string> names;
  for (const auto& r : records) names.push_back(r.label);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return LabelSet(std::move(names));
}

int LabelSet::Id(const std::string& name) const {
  auto it = ids_.find(name);
  return it == ids_.end() ? -1 : it->second;
}

DocumentBatch MakeDocuments(const std::vector<RawRecord>& records, const LabelSet& labels,
                            std::size_t max_len) {
  DocumentBatch batch;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int label = labels.Id(records[i].label);
    auto tokens = Tokenize(records[i].text, max_len);
    if (label < 0 || tokens.empty()) {
      ++batch.skipped;
      continue;
    }
    batch.docs.emplace_back(std::move(tokens), label, static_cast<std::uint64_t>(i));
  }
  return batch;
}

int Vocabulary::Id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

Vocabulary BuildVocab(const std::vector<TokenizedDocument>& docs, std::size_t min_count,
                      const LabelSet& labels) {
  if (docs.empty()) throw std::invalid_argument("empty corpus");
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");

  std::map<std::string, std::size_t> freq;
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq) {
    if (n >= min_count && tok != kUnkToken) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.tokens_.emplace_back(kUnkToken);
  v.counts_.push_back(0);
  for (auto& [tok, n] : kept) {
    v.ids_.emplace(tok, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(tok);
    v.counts_.push_back(n);
  }
  v.ids_.emplace(std::string(kUnkToken), Vocabulary::kUnkId);

  if (labels.size() > 0) {
    v.labels_ = labels;
  } else {
    int max_label = 0;
    for (const auto& d : docs) max_label = std::max(max_label, d.label_id);
    std::vector<std::string> names;
    for (int c = 0; c <= max_label; ++c) names.push_back(std::to_string(c));
    v.labels_ = LabelSet(std::move(names));
  }
  return v;
}

DatasetSplit Split(const std::vector<TokenizedDocument>& docs, double train_ratio,
                   std::uint64_t seed) {
  if (docs.size() < 2) throw std::invalid_argument("split needs at least 2 documents");
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw std::invalid_argument("train_ratio must be in (0, 1)");
  }
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeRng(seed, {0x5b1d});
  // Fisher-Yates with our own index draw so the order is library-independent.
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[UniformIndex(rng, i + 1)]);
  }
  auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(docs.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, docs.size() - 1);

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.test).push_back(docs[order[i]]);
  }
  return split;
}

void WriteTsv(const std::filesystem::path& path, const std::vector<TokenizedDocument>& docs,
              const LabelSet& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& d : docs) out << labels.Name(d.label_id) << '\t' << d.Text() << '\n';
}

}  // namespace attrshield::corpus
